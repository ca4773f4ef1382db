#include "survbeta/metrics.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>

#include "survbeta/error.hpp"

namespace survbeta {

double concordance_index(std::span<const double> predicted_times, const ComparablePairSet& pairs) {
  if (pairs.empty()) throw DegenerateInput("C-index needs at least one comparable pair");
  std::size_t concordant = 0;
  for (const auto& [i, j] : pairs.pairs) {
    if (predicted_times[i] < predicted_times[j]) ++concordant;
  }
  return static_cast<double>(concordant) / static_cast<double>(pairs.size());
}

double concordance_index(std::span<const double> predicted_times, const Dataset& ds) {
  if (predicted_times.size() != ds.size()) throw InvalidInput("one prediction per record is required");
  // Sort-free double loop; n is at most a few thousand here.
  std::size_t total = 0;
  std::size_t concordant = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!ds[i].event) continue;
    const double ti = ds[i].time;
    const double pi = predicted_times[i];
    for (std::size_t j = 0; j < ds.size(); ++j) {
      if (ti < ds[j].time) {
        ++total;
        if (pi < predicted_times[j]) ++concordant;
      }
    }
  }
  if (total == 0) throw DegenerateInput("C-index needs at least one comparable pair");
  return static_cast<double>(concordant) / static_cast<double>(total);
}

namespace {

double clamped_log(double s) { return std::log(std::clamp(s, kLogFloor, 1.0 - kLogFloor)); }

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw InvalidInput("one survival function per record is required");
}

}  // namespace

double loss_observed(std::span<const StepSurvivalFunction> sfs, const Dataset& ds) {
  check_lengths(sfs.size(), ds.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!ds[i].event) continue;
    const auto& t = sfs[i].times();
    const auto& s = sfs[i].values();
    for (std::size_t j = 0; j < t.size(); ++j) {
      if (t[j] <= ds[i].time) {
        loss -= clamped_log(s[j]);
      } else {
        loss -= clamped_log(1.0 - s[j]);
      }
    }
  }
  return loss;
}

double loss_censored(std::span<const StepSurvivalFunction> sfs, const Dataset& ds) {
  check_lengths(sfs.size(), ds.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds[i].event) continue;
    const auto& t = sfs[i].times();
    const auto& s = sfs[i].values();
    for (std::size_t j = 0; j < t.size() && t[j] <= ds[i].time; ++j) loss -= clamped_log(s[j]);
  }
  return loss;
}

double loss_mae(std::span<const double> predicted_times, const Dataset& ds) {
  if (predicted_times.size() != ds.size()) throw InvalidInput("one prediction per record is required");
  double loss = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds[i].event) loss += std::abs(ds[i].time - predicted_times[i]);
  }
  return loss;
}

TTestResult paired_t_test(std::span<const double> scores_a, std::span<const double> scores_b) {
  if (scores_a.size() != scores_b.size()) throw InvalidInput("paired t test needs equal-length samples");
  const std::size_t n = scores_a.size();
  if (n < 2) throw InvalidInput("paired t test needs at least two pairs");

  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += scores_a[i] - scores_b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = scores_a[i] - scores_b[i] - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  TTestResult result;
  result.degrees_of_freedom = n - 1;
  // Relative threshold: differences that are constant up to rounding count as zero variance.
  double scale = std::abs(mean);
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(scores_a[i] - scores_b[i]));
  if (sd <= 1e-14 * std::max(scale, 1e-300) || sd == 0.0) {
    if (mean == 0.0) {
      result.t_statistic = 0.0;
      result.p_value = 1.0;
    } else {
      result.t_statistic = std::copysign(std::numeric_limits<double>::infinity(), mean);
      result.p_value = 0.0;
    }
    return result;
  }
  result.t_statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
  boost::math::students_t dist(static_cast<double>(n - 1));
  result.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(result.t_statistic)));
  result.p_value = std::clamp(result.p_value, 0.0, 1.0);
  return result;
}

}  // namespace survbeta
