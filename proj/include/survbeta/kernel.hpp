#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "survbeta/core.hpp"

namespace survbeta {

enum class KernelFamily { Gaussian, Epanechnikov, Triangular, Quartic };

inline constexpr std::array<KernelFamily, 4> kAllKernelFamilies = {
    KernelFamily::Gaussian, KernelFamily::Epanechnikov, KernelFamily::Triangular, KernelFamily::Quartic};

std::string_view to_string(KernelFamily family);
std::optional<KernelFamily> parse_kernel_family(std::string_view name);

/// Kernel family plus bandwidth tau. The argument of every family is
/// u = -||x - x_i||^2 / tau; Gaussian evaluates exp(u), the compact families
/// vanish outside |u| < 1.
class Kernel {
 public:
  Kernel(KernelFamily family, double bandwidth);

  KernelFamily family() const { return family_; }
  double bandwidth() const { return bandwidth_; }

  bool operator==(const Kernel&) const = default;

 private:
  KernelFamily family_;
  double bandwidth_;
};

/// Raw (unnormalized) kernel value at squared distance dist_sq.
double kernel_value(const Kernel& k, double dist_sq);

/// Normalized attention weights from squared distances. Gaussian weights are
/// the max-shifted softmax of -dist_sq/tau. For the compact families the raw
/// values are normalized; an all-zero row falls back to uniform weights.
/// Entries flagged in `excluded` get weight zero (leave-one-out prediction).
Vector weights_from_sq_distances(const Kernel& k, std::span<const double> dist_sq,
                                 std::optional<std::size_t> excluded = std::nullopt);

/// alpha(x, x_i) = K(x, x_i) / sum_j K(x, x_j) over the given keys.
Vector normalized_weights(const Kernel& k, std::span<const double> query, std::span<const Vector> keys);

/// softmax(-dist_sq / temperature) with max-shift; the global attention uses this form.
Vector softmax_neg_scaled(std::span<const double> dist_sq, double temperature);

}  // namespace survbeta
