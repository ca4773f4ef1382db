#include "survbeta/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "survbeta/error.hpp"

namespace survbeta {

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::Gaussian: return "gaussian";
    case KernelFamily::Epanechnikov: return "epanechnikov";
    case KernelFamily::Triangular: return "triangular";
    case KernelFamily::Quartic: return "quartic";
  }
  return "unknown";
}

std::optional<KernelFamily> parse_kernel_family(std::string_view name) {
  for (KernelFamily f : kAllKernelFamilies) {
    if (to_string(f) == name) return f;
  }
  return std::nullopt;
}

Kernel::Kernel(KernelFamily family, double bandwidth) : family_(family), bandwidth_(bandwidth) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw InvalidInput("kernel bandwidth must be positive and finite");
  }
}

double kernel_value(const Kernel& k, double dist_sq) {
  if (!std::isfinite(dist_sq) || dist_sq < 0.0) throw InvalidInput("kernel distance must be finite and nonnegative");
  const double u = -dist_sq / k.bandwidth();
  switch (k.family()) {
    case KernelFamily::Gaussian:
      return std::exp(u);
    case KernelFamily::Epanechnikov:
      return u > -1.0 ? 0.75 * (1.0 - u * u) : 0.0;
    case KernelFamily::Triangular:
      return u > -1.0 ? 1.0 - std::abs(u) : 0.0;
    case KernelFamily::Quartic: {
      if (u <= -1.0) return 0.0;
      const double a = 1.0 - u * u;
      return 15.0 / 16.0 * a * a;
    }
  }
  return 0.0;
}

Vector softmax_neg_scaled(std::span<const double> dist_sq, double temperature) {
  Vector out(dist_sq.size(), 0.0);
  if (dist_sq.empty()) return out;
  const double lo = *std::min_element(dist_sq.begin(), dist_sq.end());
  double total = 0.0;
  for (std::size_t i = 0; i < dist_sq.size(); ++i) {
    out[i] = std::exp(-(dist_sq[i] - lo) / temperature);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

Vector weights_from_sq_distances(const Kernel& k, std::span<const double> dist_sq, std::optional<std::size_t> excluded) {
  const std::size_t n = dist_sq.size();
  if (n == 0) throw InvalidInput("attention weights need at least one key");
  for (double d : dist_sq) {
    if (!std::isfinite(d) || d < 0.0) throw InvalidInput("kernel distance must be finite and nonnegative");
  }
  Vector out(n, 0.0);
  const std::size_t active = excluded && *excluded < n ? n - 1 : n;
  if (active == 0) {
    // Single key excluded: nothing left to weight.
    return out;
  }

  if (k.family() == KernelFamily::Gaussian) {
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (i != excluded) lo = std::min(lo, dist_sq[i]);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == excluded) continue;
      out[i] = std::exp(-(dist_sq[i] - lo) / k.bandwidth());
      total += out[i];
    }
    for (double& v : out) v /= total;
    return out;
  }

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == excluded) continue;
    out[i] = kernel_value(k, dist_sq[i]);
    total += out[i];
  }
  if (total > 0.0) {
    for (double& v : out) v /= total;
  } else {
    const double uniform = 1.0 / static_cast<double>(active);
    for (std::size_t i = 0; i < n; ++i) out[i] = (i == excluded) ? 0.0 : uniform;
  }
  return out;
}

Vector normalized_weights(const Kernel& k, std::span<const double> query, std::span<const Vector> keys) {
  if (keys.empty()) throw InvalidInput("attention weights need at least one key");
  Vector dist(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (keys[i].size() != query.size()) throw InvalidInput("key and query dimensions differ");
    dist[i] = squared_distance(query, keys[i]);
  }
  return weights_from_sq_distances(k, dist);
}

}  // namespace survbeta
