#pragma once

#include <span>

#include "survbeta/core.hpp"

namespace survbeta {

/// Right-continuous piecewise-constant survival function.
///
/// times t_1 < ... < t_N (nonnegative); values S_1 >= ... >= S_N in [0, 1], where
/// S_l holds on [t_l, t_{l+1}). Before t_1 the function is 1 (implicit t_0 = 0).
class StepSurvivalFunction {
 public:
  StepSurvivalFunction() = default;
  /// Validates the invariants; throws InvalidInput on violation.
  StepSurvivalFunction(Vector times, Vector values);

  const Vector& times() const { return times_; }
  const Vector& values() const { return values_; }
  std::size_t size() const { return times_.size(); }

  /// S(t) by right-continuous lookup.
  double operator()(double t) const;

  /// Values on an arbitrary nondecreasing grid.
  Vector evaluate(std::span<const double> grid) const;

 private:
  Vector times_;
  Vector values_;
};

/// Nonnegative, nondecreasing step function (cumulative hazard), same layout
/// as StepSurvivalFunction with implicit value 0 before the first time.
struct CumulativeHazard {
  Vector times;
  Vector values;

  double operator()(double t) const;
};

/// sum_{l=0}^{N-1} S_l (t_{l+1} - t_l) with S_0 = 1, t_0 = 0.
double expected_time(const StepSurvivalFunction& sf);

/// Sorted union of the time grids.
Vector union_grid(std::span<const StepSurvivalFunction* const> sfs);

/// Pointwise convex combination on the union grid of the inputs. Weights must
/// be nonnegative and sum to one.
StepSurvivalFunction mix(std::span<const StepSurvivalFunction> sfs, std::span<const double> weights);

}  // namespace survbeta
