#include "survbeta/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "survbeta/error.hpp"

namespace survbeta {

Dataset::Dataset(std::vector<SurvivalRecord> records) : records_(std::move(records)) {
  if (records_.empty()) return;
  dim_ = records_.front().features.size();
  if (dim_ == 0) throw InvalidInput("dataset records must have at least one feature");
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& rec = records_[i];
    if (rec.features.size() != dim_) {
      throw InvalidInput("record " + std::to_string(i) + " has " + std::to_string(rec.features.size()) +
                         " features, expected " + std::to_string(dim_));
    }
    if (!std::isfinite(rec.time) || rec.time < 0.0) {
      throw InvalidInput("record " + std::to_string(i) + " has invalid time");
    }
    for (double f : rec.features) {
      if (!std::isfinite(f)) throw InvalidInput("record " + std::to_string(i) + " has a non-finite feature");
    }
  }
}

bool Dataset::has_event() const {
  return std::any_of(records_.begin(), records_.end(), [](const SurvivalRecord& r) { return r.event; });
}

std::size_t Dataset::event_count() const {
  return static_cast<std::size_t>(
      std::count_if(records_.begin(), records_.end(), [](const SurvivalRecord& r) { return r.event; }));
}

void Dataset::require_event() const {
  if (!has_event()) throw DegenerateInput("dataset contains no uncensored record");
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<SurvivalRecord> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= records_.size()) throw InvalidInput("subset index out of range");
    out.push_back(records_[i]);
  }
  return Dataset(std::move(out));
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace survbeta
