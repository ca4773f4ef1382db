#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "survbeta/error.hpp"
#include "survbeta/experiment.hpp"
#include "survbeta/fit.hpp"
#include "survbeta/lp.hpp"
#include "survbeta/metrics.hpp"
#include "survbeta/serialize.hpp"

namespace fs = std::filesystem;
using namespace survbeta;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitSolver = 4;

struct Options {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::string variant;
  std::string axis;
  std::string values;
  std::optional<std::size_t> reps;
  std::string csv;
  std::string time_col = "time";
  std::string event_col = "event";
  std::string model;
};

Vector parse_values(const std::string& text) {
  Vector out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad value '" + item + "' in --values");
    }
  }
  return out;
}

ExperimentConfig build_config(const Options& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.reps) cfg.repetitions = *o.reps;
  if (!o.variant.empty()) {
    cfg.variants = {parse_variant(o.variant)};
    cfg.fit.variant = cfg.variants.front();
  }
  if (!o.axis.empty()) cfg.axis = o.axis;
  if (!o.values.empty()) cfg.values = parse_values(o.values);
  if (!o.csv.empty()) {
    DataSource source;
    source.csv = o.csv;
    source.schema.time_column = o.time_col;
    source.schema.event_column = o.event_col;
    cfg.datasets = {source};
  }
  cfg.fit.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << doc.dump(1) << '\n';
}

int cmd_fit(const Options& o) {
  const ExperimentConfig cfg = build_config(o);
  const Dataset ds = load_source(cfg.datasets.front(), derive_seed(cfg.seed, 1000));
  const FitResult result = fit_survbeta(ds, cfg.fit);
  fs::create_directories(o.out);
  save_model(result.model, fs::path(o.out) / "model.json");
  nlohmann::json report = report_to_json(result.report);
  report["config"] = config_to_json(cfg);
  write_json(fs::path(o.out) / "report.json", report);
  const auto& best = result.report.grid[result.report.chosen];
  std::printf("variant=%s w=%g epsilon=%g val_cindex=%.6f train_cindex=%.6f%s\n",
              std::string(to_string(result.report.variant)).c_str(), best.w, best.epsilon, best.val_cindex,
              best.train_cindex, result.report.validation_fallback ? " (validation fallback)" : "");
  return 0;
}

int cmd_predict(const Options& o) {
  if (o.model.empty() || o.csv.empty()) throw ConfigError("predict needs --model and --csv");
  const EnsembleModel model = load_model(o.model);
  CsvSchema schema;
  schema.time_column = o.time_col;
  schema.event_column = o.event_col;
  const Dataset ds = load_csv(o.csv, schema).dataset;
  if (ds.empty() || ds.dim() != model.train().dim()) throw DataError("CSV features do not match the model");
  const Vector pred = model.predict_expected_times(ds);
  fs::create_directories(o.out);
  std::vector<std::string> rows;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", pred[i]);
    rows.push_back(std::to_string(i) + "," + buf);
  }
  write_csv(fs::path(o.out) / "predictions.csv", {{"model", o.model}, {"csv", o.csv}}, "index,expected_time", rows);
  if (ds.has_event()) {
    try {
      std::printf("cindex=%.6f\n", concordance_index(pred, ds));
    } catch (const DegenerateInput&) {
    }
  }
  return 0;
}

int cmd_sweep(const Options& o) {
  const ExperimentConfig cfg = build_config(o);
  const auto rows = run_sweep(cfg);
  fs::create_directories(o.out);
  std::vector<std::string> body;
  const std::string header = format_runs(rows, body);
  write_csv(fs::path(o.out) / "sweep.csv", config_to_json(cfg), header, body);
  std::printf("%zu rows written to %s\n", rows.size(), (fs::path(o.out) / "sweep.csv").string().c_str());
  return 0;
}

int cmd_benchmark(const Options& o) {
  const ExperimentConfig cfg = build_config(o);
  const BenchmarkResult result = run_benchmark(cfg);
  fs::create_directories(o.out);
  std::vector<std::string> runs;
  const std::string run_header = format_runs(result.runs, runs);
  write_csv(fs::path(o.out) / "benchmark_runs.csv", config_to_json(cfg), run_header, runs);
  std::vector<std::string> cells;
  const std::string cell_header = format_cells(result.cells, cells);
  write_csv(fs::path(o.out) / "benchmark.csv", config_to_json(cfg), cell_header, cells);
  for (const auto& c : result.cells) {
    std::printf("%-20s %-16s %.4f +- %.4f (%zu reps)\n", c.dataset.c_str(), std::string(to_string(c.variant)).c_str(),
                c.mean, c.stddev, c.repetitions);
  }
  return 0;
}

int cmd_compare(const Options& o) {
  if (o.csv.empty()) throw ConfigError("compare needs --csv with a benchmark table");
  const auto cells = read_benchmark_table(o.csv);
  const auto rows = run_compare(cells);
  fs::create_directories(o.out);
  std::vector<std::string> body;
  const std::string header = format_compare(rows, body);
  write_csv(fs::path(o.out) / "compare.csv", {{"table", o.csv}}, header, body);
  for (const auto& r : rows) {
    std::printf("%-16s vs %-16s p=%.6g (t=%.4f, %zu datasets)\n", r.variant_a.c_str(), r.variant_b.c_str(), r.p_value,
                r.t_statistic, r.datasets);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attention-weighted ensembles of Beran survival estimators"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config document");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--variant", o.variant, "beran-single, survbeta-noopt, survbeta-opt or bagging");
    sub->add_option("--reps", o.reps, "repetitions");
    sub->add_option("--csv", o.csv, "CSV dataset");
    sub->add_option("--time-col", o.time_col, "time column name");
    sub->add_option("--event-col", o.event_col, "event column name");
  };
  CLI::App* fit = app.add_subcommand("fit", "fit one model and write model.json and report.json");
  add_common(fit);
  CLI::App* predict = app.add_subcommand("predict", "expected times for the records of a CSV");
  add_common(predict);
  predict->add_option("--model", o.model, "model document written by fit");
  CLI::App* sweep = app.add_subcommand("sweep", "synthetic parameter sweep");
  add_common(sweep);
  sweep->add_option("--axis", o.axis, "estimators, cluster_points, cluster_distance, k_shape or subsample_size");
  sweep->add_option("--values", o.values, "comma-separated axis values");
  CLI::App* benchmark = app.add_subcommand("benchmark", "repeated split/fit/test per dataset and variant");
  add_common(benchmark);
  CLI::App* compare = app.add_subcommand("compare", "paired t tests over a benchmark table");
  add_common(compare);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*fit) return cmd_fit(o);
    if (*predict) return cmd_predict(o);
    if (*sweep) return cmd_sweep(o);
    if (*benchmark) return cmd_benchmark(o);
    if (*compare) return cmd_compare(o);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const SolverFailure& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return kExitSolver;
  } catch (const Error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return 0;
}
