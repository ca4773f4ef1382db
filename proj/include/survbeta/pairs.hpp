#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "survbeta/core.hpp"

namespace survbeta {

using IndexPair = std::pair<std::size_t, std::size_t>;

/// Comparable pairs (i, j): record i uncensored and T_i < T_j.
struct ComparablePairSet {
  std::vector<IndexPair> pairs;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

/// Exhaustive enumeration, ordered by i then j.
ComparablePairSet build_pairs(const Dataset& ds);

struct PairReduction {
  enum class Kind { None, PerObjectRandom, NearestTimeNeighbors, RandomK };
  Kind kind = Kind::None;
  std::size_t count = 0;  // k for NearestTimeNeighbors, K for RandomK

  static PairReduction none() { return {}; }
  static PairReduction per_object_random() { return {Kind::PerObjectRandom, 1}; }
  static PairReduction nearest_time(std::size_t k) { return {Kind::NearestTimeNeighbors, k}; }
  static PairReduction random_k(std::size_t k) { return {Kind::RandomK, k}; }
};

std::string to_string(const PairReduction& r);

/// Subset of `ps` chosen by the strategy; deterministic given the seed and
/// returned in the input's order.
///
/// PerObjectRandom keeps one uniformly drawn partner per uncensored object.
/// NearestTimeNeighbors keeps, per object, the k partners whose times are
/// closest to its own (ties by lower index). RandomK keeps K pairs drawn
/// without replacement, or all of them when K >= |ps|.
ComparablePairSet reduce_pairs(const ComparablePairSet& ps, const Dataset& ds, const PairReduction& strategy,
                               std::uint64_t seed);

}  // namespace survbeta
