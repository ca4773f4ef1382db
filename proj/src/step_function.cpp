#include "survbeta/step_function.hpp"

#include <algorithm>
#include <cmath>

#include "survbeta/error.hpp"

namespace survbeta {

StepSurvivalFunction::StepSurvivalFunction(Vector times, Vector values)
    : times_(std::move(times)), values_(std::move(values)) {
  if (times_.size() != values_.size()) throw InvalidInput("survival function times and values differ in length");
  double prev_t = -1.0;
  double prev_s = 1.0;
  for (std::size_t l = 0; l < times_.size(); ++l) {
    const double t = times_[l];
    const double s = values_[l];
    if (!std::isfinite(t) || t < 0.0 || t <= prev_t) {
      throw InvalidInput("survival function times must be finite, nonnegative and strictly increasing");
    }
    if (!(s >= 0.0 && s <= 1.0)) throw InvalidInput("survival function values must lie in [0, 1]");
    if (s > prev_s) throw InvalidInput("survival function values must be non-increasing");
    prev_t = t;
    prev_s = s;
  }
}

double StepSurvivalFunction::operator()(double t) const {
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 1.0;
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

Vector StepSurvivalFunction::evaluate(std::span<const double> grid) const {
  Vector out(grid.size());
  std::size_t l = 0;
  double current = 1.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    while (l < times_.size() && times_[l] <= grid[g]) current = values_[l++];
    out[g] = current;
  }
  return out;
}

double CumulativeHazard::operator()(double t) const {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 0.0;
  return values[static_cast<std::size_t>(it - times.begin()) - 1];
}

double expected_time(const StepSurvivalFunction& sf) {
  const auto& t = sf.times();
  const auto& s = sf.values();
  double total = 0.0;
  double prev_t = 0.0;
  double prev_s = 1.0;
  for (std::size_t l = 0; l < t.size(); ++l) {
    total += prev_s * (t[l] - prev_t);
    prev_t = t[l];
    prev_s = s[l];
  }
  return total;
}

Vector union_grid(std::span<const StepSurvivalFunction* const> sfs) {
  Vector grid;
  for (const auto* sf : sfs) grid.insert(grid.end(), sf->times().begin(), sf->times().end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

StepSurvivalFunction mix(std::span<const StepSurvivalFunction> sfs, std::span<const double> weights) {
  if (sfs.size() != weights.size() || sfs.empty()) throw InvalidInput("mix needs one weight per survival function");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= -1e-12)) throw InvalidInput("mix weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidInput("mix weights must sum to one");
  std::vector<const StepSurvivalFunction*> ptrs;
  ptrs.reserve(sfs.size());
  for (const auto& sf : sfs) ptrs.push_back(&sf);
  Vector grid = union_grid(ptrs);
  Vector values(grid.size(), 0.0);
  for (std::size_t k = 0; k < sfs.size(); ++k) {
    if (weights[k] == 0.0) continue;
    const Vector on_grid = sfs[k].evaluate(grid);
    for (std::size_t g = 0; g < grid.size(); ++g) values[g] += weights[k] * on_grid[g];
  }
  // Rounding in sum(weights) can leave values a few ulps outside [0, 1].
  for (double& v : values) v = std::clamp(v, 0.0, 1.0);
  return StepSurvivalFunction(std::move(grid), std::move(values));
}

}  // namespace survbeta
