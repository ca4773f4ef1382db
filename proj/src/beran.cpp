#include "survbeta/beran.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "survbeta/error.hpp"

namespace survbeta {

namespace {

// Sort order used by every product-limit computation here.
std::vector<std::size_t> time_order(const Dataset& ds, std::span<const std::size_t> indices) {
  std::vector<std::size_t> order(indices.begin(), indices.end());
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (ds[a].time != ds[b].time) return ds[a].time < ds[b].time;
    return ds[a].event && !ds[b].event;
  });
  return order;
}

Vector distinct(const Vector& sorted) {
  Vector out(sorted);
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Walks the sorted records once; `on_factor(position, factor)` sees every
// uncensored record whose denominator is above the floor, `on_grid(g)` fires
// after the last record at grid time g. The denominator 1 - sum_{j<i} alpha_j
// is evaluated as the suffix sum sum_{j>=i} alpha_j, which avoids cancellation
// in the tail and makes the last factor of a normalized row exactly 1 - 1.
template <class OnFactor, class OnGrid>
void walk_product(const Vector& times, const std::vector<bool>& events, const Vector& grid,
                  std::span<const double> alpha, OnFactor&& on_factor, OnGrid&& on_grid) {
  Vector remaining(times.size() + 1, 0.0);
  for (std::size_t p = times.size(); p-- > 0;) remaining[p] = remaining[p + 1] + alpha[p];
  std::size_t pos = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    while (pos < times.size() && times[pos] == grid[g]) {
      const double denom = remaining[pos];
      if (events[pos] && denom > kDenominatorFloor) {
        on_factor(pos, std::clamp(1.0 - alpha[pos] / denom, 0.0, 1.0));
      }
      ++pos;
    }
    on_grid(g);
  }
}

}  // namespace

BeranModel::BeranModel(const Dataset& ds, std::span<const std::size_t> indices, Kernel kernel) : kernel_(kernel) {
  init(ds, indices);
}

BeranModel::BeranModel(const Dataset& subset, Kernel kernel) : kernel_(kernel) {
  std::vector<std::size_t> all(subset.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  init(subset, all);
}

void BeranModel::init(const Dataset& ds, std::span<const std::size_t> indices) {
  if (indices.empty()) throw InvalidInput("Beran estimator needs a nonempty subset");
  const auto order = time_order(ds, indices);
  const std::size_t n = order.size();
  features_ = RowMatrix(n, ds.dim());
  times_.resize(n);
  events_.resize(n);
  sources_.resize(n);
  source_lookup_.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    const auto& rec = ds[order[p]];
    std::copy(rec.features.begin(), rec.features.end(), features_.row(p).begin());
    times_[p] = rec.time;
    events_[p] = rec.event;
    sources_[p] = order[p];
    source_lookup_[p] = {order[p], p};
  }
  std::sort(source_lookup_.begin(), source_lookup_.end());
  grid_ = distinct(times_);
}

std::optional<std::size_t> BeranModel::position_of(std::size_t source) const {
  auto it = std::lower_bound(source_lookup_.begin(), source_lookup_.end(), std::make_pair(source, std::size_t{0}));
  if (it == source_lookup_.end() || it->first != source) return std::nullopt;
  return it->second;
}

Vector BeranModel::weights(std::span<const double> x, std::optional<std::size_t> exclude_source) const {
  if (x.size() != dim()) throw InvalidInput("query dimension does not match the Beran model");
  Vector dist(size());
  for (std::size_t p = 0; p < size(); ++p) dist[p] = squared_distance(x, features_.row(p));
  std::optional<std::size_t> excluded;
  if (exclude_source) excluded = position_of(*exclude_source);
  return weights_from_sq_distances(kernel_, dist, excluded);
}

StepSurvivalFunction BeranModel::sf_from_weights(std::span<const double> alpha) const {
  if (alpha.size() != size()) throw InvalidInput("one weight per subset record is required");
  Vector values(grid_.size());
  double s = 1.0;
  walk_product(
      times_, events_, grid_, alpha, [&](std::size_t, double factor) { s *= factor; },
      [&](std::size_t g) { values[g] = s; });
  return StepSurvivalFunction(grid_, std::move(values));
}

StepSurvivalFunction BeranModel::sf(std::span<const double> x, std::optional<std::size_t> exclude_source) const {
  return sf_from_weights(weights(x, exclude_source));
}

CumulativeHazard BeranModel::chf_from_weights(std::span<const double> alpha) const {
  if (alpha.size() != size()) throw InvalidInput("one weight per subset record is required");
  const double cap = -std::log(kDenominatorFloor);
  CumulativeHazard h;
  h.times = grid_;
  h.values.resize(grid_.size());
  double total = 0.0;
  walk_product(
      times_, events_, grid_, alpha,
      [&](std::size_t, double factor) { total += factor > 0.0 ? std::min(-std::log(factor), cap) : cap; },
      [&](std::size_t g) { h.values[g] = total; });
  return h;
}

CumulativeHazard BeranModel::chf(std::span<const double> x) const { return chf_from_weights(weights(x)); }

StepSurvivalFunction beran_sf(const BeranModel& m, std::span<const double> x) { return m.sf(x); }

CumulativeHazard beran_chf(const BeranModel& m, std::span<const double> x) { return m.chf(x); }

StepSurvivalFunction kaplan_meier(const Dataset& subset) {
  if (subset.empty()) throw InvalidInput("Kaplan-Meier needs at least one record");
  std::vector<std::size_t> all(subset.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto order = time_order(subset, all);
  Vector times(order.size());
  std::vector<bool> events(order.size());
  for (std::size_t p = 0; p < order.size(); ++p) {
    times[p] = subset[order[p]].time;
    events[p] = subset[order[p]].event;
  }
  const Vector grid = distinct(times);
  const Vector alpha(order.size(), 1.0 / static_cast<double>(order.size()));
  Vector values(grid.size());
  double s = 1.0;
  walk_product(
      times, events, grid, alpha, [&](std::size_t, double factor) { s *= factor; },
      [&](std::size_t g) { values[g] = s; });
  return StepSurvivalFunction(grid, std::move(values));
}

}  // namespace survbeta
