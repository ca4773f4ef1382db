#pragma once

#include <span>

#include "survbeta/core.hpp"
#include "survbeta/pairs.hpp"
#include "survbeta/step_function.hpp"

namespace survbeta {

/// Clamp applied to survival values before taking logarithms in the likelihood terms.
inline constexpr double kLogFloor = 1e-12;

/// Harrell's C-index over the comparable pairs of `ds`: the fraction of pairs
/// (i, j) with predicted_times[i] < predicted_times[j]. Ties count zero.
/// Throws DegenerateInput when the dataset has no comparable pair.
double concordance_index(std::span<const double> predicted_times, const Dataset& ds);

/// Same count restricted to an explicit pair set.
double concordance_index(std::span<const double> predicted_times, const ComparablePairSet& pairs);

/// -sum_{i uncensored} [ sum_{t_j <= T_i} ln S(t_j|x_i) + sum_{t_j > T_i} ln(1 - S(t_j|x_i)) ]
/// over each survival function's own grid.
double loss_observed(std::span<const StepSurvivalFunction> sfs, const Dataset& ds);

/// -sum_{i censored} sum_{t_j <= T_i} ln S(t_j|x_i).
double loss_censored(std::span<const StepSurvivalFunction> sfs, const Dataset& ds);

/// sum_{i uncensored} |T_i - predicted_times[i]|.
double loss_mae(std::span<const double> predicted_times, const Dataset& ds);

struct TTestResult {
  double t_statistic = 0.0;
  double p_value = 1.0;
  std::size_t degrees_of_freedom = 0;
};

/// Two-sided paired Student t test on a - b with n - 1 degrees of freedom.
/// Zero variance of the differences yields p = 1 when their mean is zero and
/// p = 0 otherwise.
TTestResult paired_t_test(std::span<const double> scores_a, std::span<const double> scores_b);

}  // namespace survbeta
