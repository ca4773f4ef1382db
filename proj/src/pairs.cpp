#include "survbeta/pairs.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace survbeta {

ComparablePairSet build_pairs(const Dataset& ds) {
  ComparablePairSet out;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!ds[i].event) continue;
    for (std::size_t j = 0; j < ds.size(); ++j) {
      if (ds[i].time < ds[j].time) out.pairs.emplace_back(i, j);
    }
  }
  return out;
}

std::string to_string(const PairReduction& r) {
  switch (r.kind) {
    case PairReduction::Kind::None: return "none";
    case PairReduction::Kind::PerObjectRandom: return "per-object";
    case PairReduction::Kind::NearestTimeNeighbors: return "nearest-time:" + std::to_string(r.count);
    case PairReduction::Kind::RandomK: return "random-k:" + std::to_string(r.count);
  }
  return "none";
}

namespace {

// Pair positions grouped by their first element, in input order.
std::map<std::size_t, std::vector<std::size_t>> group_by_first(const ComparablePairSet& ps) {
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t p = 0; p < ps.pairs.size(); ++p) groups[ps.pairs[p].first].push_back(p);
  return groups;
}

ComparablePairSet take(const ComparablePairSet& ps, std::vector<std::size_t> positions) {
  std::sort(positions.begin(), positions.end());
  ComparablePairSet out;
  out.pairs.reserve(positions.size());
  for (std::size_t p : positions) out.pairs.push_back(ps.pairs[p]);
  return out;
}

}  // namespace

ComparablePairSet reduce_pairs(const ComparablePairSet& ps, const Dataset& ds, const PairReduction& strategy,
                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  switch (strategy.kind) {
    case PairReduction::Kind::None:
      return ps;

    case PairReduction::Kind::PerObjectRandom: {
      std::vector<std::size_t> keep;
      for (const auto& [i, members] : group_by_first(ps)) {
        std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
        keep.push_back(members[pick(rng)]);
      }
      return take(ps, std::move(keep));
    }

    case PairReduction::Kind::NearestTimeNeighbors: {
      std::vector<std::size_t> keep;
      for (auto& [i, members] : group_by_first(ps)) {
        const double ti = ds[i].time;
        std::stable_sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
          const double da = std::abs(ds[ps.pairs[a].second].time - ti);
          const double db = std::abs(ds[ps.pairs[b].second].time - ti);
          if (da != db) return da < db;
          return ps.pairs[a].second < ps.pairs[b].second;
        });
        const std::size_t k = std::min(strategy.count, members.size());
        keep.insert(keep.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(k));
      }
      return take(ps, std::move(keep));
    }

    case PairReduction::Kind::RandomK: {
      if (strategy.count >= ps.size()) return ps;
      std::vector<std::size_t> positions(ps.size());
      for (std::size_t p = 0; p < positions.size(); ++p) positions[p] = p;
      // Partial Fisher-Yates: the first K slots become a uniform sample.
      for (std::size_t p = 0; p < strategy.count; ++p) {
        std::uniform_int_distribution<std::size_t> pick(p, positions.size() - 1);
        std::swap(positions[p], positions[pick(rng)]);
      }
      positions.resize(strategy.count);
      return take(ps, std::move(positions));
    }
  }
  return ps;
}

}  // namespace survbeta
