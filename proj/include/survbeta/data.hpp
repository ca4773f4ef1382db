#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "survbeta/core.hpp"

namespace survbeta {

/// Per-feature affine map x -> (x - mean) / scale. Statistics come from the
/// training split only and are then applied unchanged to validation and test
/// records. A zero-variance feature keeps scale 1.
struct Standardizer {
  Vector mean;
  Vector scale;

  static Standardizer identity(std::size_t dim);
  static Standardizer fit(const Dataset& train);

  bool is_identity() const;
  Vector transform(std::span<const double> x) const;
  Dataset transform(const Dataset& ds) const;
};

// ---------------------------------------------------------------------------
// Synthetic two-cluster Weibull data

struct Rectangle {
  Vector lower;
  Vector upper;
};

struct SyntheticConfig {
  std::size_t dim = 5;
  std::vector<Rectangle> clusters;
  std::size_t n_per_cluster = 500;
  double c = 3.0;
  double k_shape = 6.0;
  double censor_prob = 0.2;
  std::uint64_t seed = 0;
  /// Test hook: when set, every event time uses this u instead of a uniform draw.
  std::optional<double> fixed_u;

  void validate() const;
};

/// Two clusters: [-2, 2]^d and [20, 30]^d, c = 3, k = 6, 500 points each.
SyntheticConfig paper_default_preset(std::uint64_t seed = 0);

/// Second cluster shifted to start h past the first: l2 = r1 + h, r2 = l2 + 10.
SyntheticConfig cluster_distance_preset(double h, std::uint64_t seed = 0);

/// Named preset lookup ("paper-default", "fig3:<h>"); nullopt when unknown.
std::optional<SyntheticConfig> synthetic_preset(const std::string& name, std::uint64_t seed);

/// T = (sin(c x_1) + c) / Gamma(1 + 1/k) * (-log u)^{1/k}.
double weibull_event_time(double x1, double c, double k_shape, double u);

/// Draws u in (0, 1] and evaluates weibull_event_time.
double sample_event_time(double x1, double c, double k_shape, std::mt19937_64& rng);

Dataset generate_synthetic(const SyntheticConfig& cfg);

// ---------------------------------------------------------------------------
// CSV

struct CsvSchema {
  std::string time_column = "time";
  std::string event_column = "event";
  /// Empty means every other column.
  std::vector<std::string> feature_columns;
  /// Columns one-hot encoded in first-appearance order. Feature columns with a
  /// non-numeric value are treated as categorical as well.
  std::vector<std::string> categorical_columns;
};

struct CsvLoadResult {
  Dataset dataset;
  std::vector<std::string> feature_names;
  std::size_t dropped_rows = 0;
  std::vector<std::size_t> dropped_lines;  // 1-based file line numbers
};

/// Reads a header-first CSV. Rows with an empty or NA time, event or feature
/// value are dropped and counted; a present but unparseable time or event is a
/// DataError naming the line. A missing column is a SchemaError.
CsvLoadResult load_csv(const std::filesystem::path& path, const CsvSchema& schema);

/// Writes time,event,x0..x{d-1} with round-trip precision.
void save_csv(const Dataset& ds, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Splits

struct SplitSpec {
  double train_frac = 0.6;
  double val_frac = 0.2;
  double test_frac = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Random disjoint cover of 0..n-1. val and test sizes are round(frac * n),
/// train takes the remainder. A part with positive fraction that would be
/// empty raises DegenerateInput.
SplitIndices split_indices(std::size_t n, const SplitSpec& spec);

struct DatasetSplit {
  Dataset train;
  Dataset val;
  Dataset test;
  SplitIndices indices;
};

DatasetSplit split(const Dataset& ds, const SplitSpec& spec);

}  // namespace survbeta
