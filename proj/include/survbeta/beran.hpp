#pragma once

#include <optional>
#include <span>

#include "survbeta/core.hpp"
#include "survbeta/kernel.hpp"
#include "survbeta/step_function.hpp"

namespace survbeta {

/// Below this value the Beran denominator 1 - sum_{j<i} alpha_j is treated as
/// exhausted and the remaining factors are 1.
inline constexpr double kDenominatorFloor = 1e-12;

/// Beran conditional survival estimator fitted on a subset of records.
///
/// The subset is stored sorted by time, uncensored before censored at equal
/// times, which fixes the order of the cumulative weight sums. The output grid
/// is the set of distinct subset times (censored times included).
class BeranModel {
 public:
  /// Fits on ds[indices]; `indices` are kept as source indices for
  /// leave-one-out prediction.
  BeranModel(const Dataset& ds, std::span<const std::size_t> indices, Kernel kernel);
  /// Fits on every record of `subset`.
  BeranModel(const Dataset& subset, Kernel kernel);

  const Kernel& kernel() const { return kernel_; }
  std::size_t size() const { return times_.size(); }
  std::size_t dim() const { return features_.cols(); }
  const Vector& grid() const { return grid_; }
  const Vector& sorted_times() const { return times_; }
  const std::vector<bool>& sorted_events() const { return events_; }
  const std::vector<std::size_t>& sorted_sources() const { return sources_; }
  std::span<const double> sorted_features(std::size_t pos) const { return features_.row(pos); }

  /// alpha(x, x_i) in sorted order. `exclude_source` removes that training
  /// record (if it belongs to the subset) from the normalization.
  Vector weights(std::span<const double> x, std::optional<std::size_t> exclude_source = std::nullopt) const;

  StepSurvivalFunction sf(std::span<const double> x, std::optional<std::size_t> exclude_source = std::nullopt) const;

  /// Product-limit evaluation with caller-supplied weights (sorted order).
  StepSurvivalFunction sf_from_weights(std::span<const double> alpha) const;

  CumulativeHazard chf(std::span<const double> x) const;
  CumulativeHazard chf_from_weights(std::span<const double> alpha) const;

 private:
  void init(const Dataset& ds, std::span<const std::size_t> indices);
  std::optional<std::size_t> position_of(std::size_t source) const;

  Kernel kernel_;
  RowMatrix features_;
  Vector times_;
  std::vector<bool> events_;
  std::vector<std::size_t> sources_;
  std::vector<std::pair<std::size_t, std::size_t>> source_lookup_;  // (source, position), sorted
  Vector grid_;
};

StepSurvivalFunction beran_sf(const BeranModel& m, std::span<const double> x);
CumulativeHazard beran_chf(const BeranModel& m, std::span<const double> x);

/// Product-limit estimator of the records' survival, i.e. the Beran formula
/// with alpha_i = 1/n.
StepSurvivalFunction kaplan_meier(const Dataset& subset);

}  // namespace survbeta
