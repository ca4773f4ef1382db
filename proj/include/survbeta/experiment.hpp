#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "survbeta/data.hpp"
#include "survbeta/fit.hpp"

namespace survbeta {

/// Where a dataset comes from: a synthetic preset (with optional overrides) or
/// a CSV file read with `schema`.
struct DataSource {
  std::string name;
  std::string preset = "paper-default";
  std::optional<std::filesystem::path> csv;
  CsvSchema schema;
  std::optional<std::size_t> n_per_cluster;
  std::optional<double> k_shape;
  std::optional<double> c;
  std::optional<double> censor_prob;

  std::string label() const;
  /// Synthetic generator settings after overrides; ConfigError for a CSV source
  /// or an unknown preset.
  SyntheticConfig synthetic(std::uint64_t seed) const;
};

/// Loads or generates the dataset. Synthetic sources use `seed`.
Dataset load_source(const DataSource& source, std::uint64_t seed);

struct ExperimentConfig {
  std::vector<Variant> variants = {Variant::BeranSingle, Variant::SurvbetaNoopt, Variant::SurvbetaOpt};
  std::vector<DataSource> datasets = {DataSource{}};
  FitConfig fit;
  SplitSpec split;
  std::size_t repetitions = 10;
  std::uint64_t seed = 0;
  std::string axis;
  Vector values;
  std::size_t threads = 1;

  /// Throws ConfigError.
  void validate() const;
};

/// Strict reader: unknown keys are a ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

PairReduction parse_pair_reduction(const std::string& text);

/// Runs tasks 0..count-1 on `threads` workers; results are stored by index.
/// The first exception raised by any task is rethrown after all workers stop.
void run_pool(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& task);

/// Test C-index of `variant` trained on train/val of one split.
double evaluate_variant(const DatasetSplit& parts, Variant variant, const FitConfig& fit, std::uint64_t seed);

struct RunRow {
  std::string dataset;
  std::string axis;
  double value = 0.0;
  Variant variant = Variant::SurvbetaOpt;
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  double cindex = 0.0;
};

/// axis one of estimators, cluster_points, cluster_distance, k_shape,
/// subsample_size. Every (value, repetition) regenerates the first dataset
/// source with the value applied, splits it and fits every variant.
std::vector<RunRow> run_sweep(const ExperimentConfig& cfg);

struct BenchmarkCell {
  std::string dataset;
  Variant variant = Variant::SurvbetaOpt;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t repetitions = 0;
};

struct BenchmarkResult {
  std::vector<RunRow> runs;
  std::vector<BenchmarkCell> cells;
};

/// For every dataset, variant and repetition: split, fit on train+val, score on test.
BenchmarkResult run_benchmark(const ExperimentConfig& cfg);

struct CompareRow {
  std::string variant_a;
  std::string variant_b;
  std::size_t datasets = 0;
  double mean_difference = 0.0;
  double t_statistic = 0.0;
  double p_value = 1.0;
};

/// Paired t test per variant pair over per-dataset mean C-indices.
std::vector<CompareRow> run_compare(const std::vector<BenchmarkCell>& table);

/// Writes `# ` + each line of the config document, then the CSV body.
void write_csv(const std::filesystem::path& path, const nlohmann::json& config, const std::string& header,
               const std::vector<std::string>& rows);

std::string format_runs(const std::vector<RunRow>& rows, std::vector<std::string>& out);
std::string format_cells(const std::vector<BenchmarkCell>& cells, std::vector<std::string>& out);
std::string format_compare(const std::vector<CompareRow>& rows, std::vector<std::string>& out);

/// Reads a benchmark table written by format_cells (comment lines skipped).
std::vector<BenchmarkCell> read_benchmark_table(const std::filesystem::path& path);

}  // namespace survbeta
