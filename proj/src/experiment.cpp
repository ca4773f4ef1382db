#include "survbeta/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "survbeta/error.hpp"
#include "survbeta/metrics.hpp"

namespace survbeta {

using nlohmann::json;

std::string DataSource::label() const {
  if (!name.empty()) return name;
  if (csv) return csv->stem().string();
  return preset;
}

SyntheticConfig DataSource::synthetic(std::uint64_t seed) const {
  if (csv) throw ConfigError("dataset '" + label() + "' is a CSV file, not a synthetic preset");
  auto cfg = synthetic_preset(preset, seed);
  if (!cfg) throw ConfigError("unknown synthetic preset '" + preset + "'");
  if (n_per_cluster) cfg->n_per_cluster = *n_per_cluster;
  if (k_shape) cfg->k_shape = *k_shape;
  if (c) cfg->c = *c;
  if (censor_prob) cfg->censor_prob = *censor_prob;
  try {
    cfg->validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  return *cfg;
}

Dataset load_source(const DataSource& source, std::uint64_t seed) {
  if (source.csv) return load_csv(*source.csv, source.schema).dataset;
  return generate_synthetic(source.synthetic(seed));
}

void ExperimentConfig::validate() const {
  if (variants.empty()) throw ConfigError("no variants requested");
  if (datasets.empty()) throw ConfigError("no datasets configured");
  if (repetitions == 0) throw ConfigError("repetitions must be at least 1");
  try {
    split.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  fit.validate();
  for (Variant v : variants) {
    FitConfig f = fit;
    f.variant = v;
    f.validate();
  }
}

// ---------------------------------------------------------------------------
// JSON config

namespace {

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; })) {
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
  }
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

template <class T>
void read_opt(const json& obj, const char* key, std::optional<T>& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

DataSource source_from_json(const json& j) {
  check_keys(j,
             {"name", "preset", "csv", "time_column", "event_column", "features", "categorical", "n_per_cluster",
              "k_shape", "c", "censor_prob"},
             "dataset");
  DataSource s;
  read(j, "name", s.name);
  read(j, "preset", s.preset);
  if (j.contains("csv")) s.csv = j.at("csv").get<std::string>();
  read(j, "time_column", s.schema.time_column);
  read(j, "event_column", s.schema.event_column);
  read(j, "features", s.schema.feature_columns);
  read(j, "categorical", s.schema.categorical_columns);
  read_opt(j, "n_per_cluster", s.n_per_cluster);
  read_opt(j, "k_shape", s.k_shape);
  read_opt(j, "c", s.c);
  read_opt(j, "censor_prob", s.censor_prob);
  return s;
}

json source_to_json(const DataSource& s) {
  json j = {{"name", s.label()}};
  if (s.csv) {
    j["csv"] = s.csv->string();
    j["time_column"] = s.schema.time_column;
    j["event_column"] = s.schema.event_column;
    j["features"] = s.schema.feature_columns;
    j["categorical"] = s.schema.categorical_columns;
  } else {
    j["preset"] = s.preset;
    if (s.n_per_cluster) j["n_per_cluster"] = *s.n_per_cluster;
    if (s.k_shape) j["k_shape"] = *s.k_shape;
    if (s.c) j["c"] = *s.c;
    if (s.censor_prob) j["censor_prob"] = *s.censor_prob;
  }
  return j;
}

PrototypeMode parse_prototype_mode(const std::string& name) {
  if (name == to_string(PrototypeMode::Mean)) return PrototypeMode::Mean;
  if (name == to_string(PrototypeMode::NadarayaWatson)) return PrototypeMode::NadarayaWatson;
  throw ConfigError("unknown prototype mode '" + name + "'");
}

void fit_from_json(const json& j, FitConfig& f) {
  check_keys(j,
             {"variant", "m_estimators", "k_fraction", "taus", "tau_mode", "eta", "w_grid", "epsilon_grid", "trainable_epsilon",
              "objective", "prototype_mode", "pair_reduction", "val_fraction", "standardize", "leave_one_out",
              "lp_max_iterations"},
             "fit");
  if (j.contains("variant")) f.variant = parse_variant(j.at("variant").get<std::string>());
  read(j, "m_estimators", f.m_estimators);
  read(j, "k_fraction", f.k_fraction);
  read(j, "taus", f.taus);
  if (j.contains("tau_mode")) f.tau_mode = parse_tau_mode(j.at("tau_mode").get<std::string>());
  read(j, "eta", f.eta);
  read(j, "w_grid", f.w_grid);
  read(j, "epsilon_grid", f.epsilon_grid);
  read(j, "trainable_epsilon", f.trainable_epsilon);
  if (j.contains("objective")) f.objective = parse_train_objective(j.at("objective").get<std::string>());
  if (j.contains("prototype_mode")) f.prototype_mode = parse_prototype_mode(j.at("prototype_mode").get<std::string>());
  if (j.contains("pair_reduction")) {
    const auto text = j.at("pair_reduction").get<std::string>();
    if (text == "default") {
      f.pair_reduction.reset();
    } else {
      f.pair_reduction = parse_pair_reduction(text);
    }
  }
  read(j, "val_fraction", f.val_fraction);
  read(j, "standardize", f.standardize);
  read(j, "leave_one_out", f.leave_one_out);
  read(j, "lp_max_iterations", f.lp.max_iterations);
}

json fit_to_json(const FitConfig& f) {
  return {{"variant", std::string(to_string(f.variant))},
          {"m_estimators", f.m_estimators},
          {"k_fraction", f.k_fraction},
          {"taus", f.taus},
          {"tau_mode", std::string(to_string(f.tau_mode))},
          {"eta", f.eta},
          {"w_grid", f.w_grid},
          {"epsilon_grid", f.epsilon_grid},
          {"trainable_epsilon", f.trainable_epsilon},
          {"objective", std::string(to_string(f.objective))},
          {"prototype_mode", std::string(to_string(f.prototype_mode))},
          {"pair_reduction", f.pair_reduction ? to_string(*f.pair_reduction) : std::string("default")},
          {"val_fraction", f.val_fraction},
          {"standardize", f.standardize},
          {"leave_one_out", f.leave_one_out},
          {"lp_max_iterations", f.lp.max_iterations}};
}

}  // namespace

PairReduction parse_pair_reduction(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  std::size_t count = 0;
  if (colon != std::string::npos) {
    try {
      std::size_t used = 0;
      const long long parsed = std::stoll(text.substr(colon + 1), &used);
      if (used != text.size() - colon - 1 || parsed <= 0) throw std::invalid_argument("count");
      count = static_cast<std::size_t>(parsed);
    } catch (const std::exception&) {
      throw ConfigError("bad pair-reduction count in '" + text + "'");
    }
  }
  if (kind == "none" && colon == std::string::npos) return PairReduction::none();
  if (kind == "per-object" && colon == std::string::npos) return PairReduction::per_object_random();
  if (kind == "nearest-time" && count > 0) return PairReduction::nearest_time(count);
  if (kind == "random-k" && count > 0) return PairReduction::random_k(count);
  throw ConfigError("unknown pair reduction '" + text + "'");
}

ExperimentConfig config_from_json(const json& doc) {
  try {
    check_keys(doc, {"variants", "datasets", "data", "fit", "split", "repetitions", "seed", "axis", "values", "threads"},
               "config");
    ExperimentConfig cfg;
    if (doc.contains("variants")) {
      cfg.variants.clear();
      for (const auto& v : doc.at("variants")) cfg.variants.push_back(parse_variant(v.get<std::string>()));
    }
    if (doc.contains("data") && doc.contains("datasets")) throw ConfigError("give either 'data' or 'datasets'");
    if (doc.contains("data")) cfg.datasets = {source_from_json(doc.at("data"))};
    if (doc.contains("datasets")) {
      cfg.datasets.clear();
      for (const auto& d : doc.at("datasets")) cfg.datasets.push_back(source_from_json(d));
    }
    if (doc.contains("fit")) fit_from_json(doc.at("fit"), cfg.fit);
    if (doc.contains("split")) {
      const auto& s = doc.at("split");
      check_keys(s, {"train", "val", "test"}, "split");
      read(s, "train", cfg.split.train_frac);
      read(s, "val", cfg.split.val_frac);
      read(s, "test", cfg.split.test_frac);
    }
    read(doc, "repetitions", cfg.repetitions);
    read(doc, "seed", cfg.seed);
    read(doc, "axis", cfg.axis);
    read(doc, "values", cfg.values);
    read(doc, "threads", cfg.threads);
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

json config_to_json(const ExperimentConfig& cfg) {
  json variants = json::array();
  for (Variant v : cfg.variants) variants.push_back(std::string(to_string(v)));
  json datasets = json::array();
  for (const auto& d : cfg.datasets) datasets.push_back(source_to_json(d));
  json doc = {{"variants", variants},
              {"datasets", datasets},
              {"fit", fit_to_json(cfg.fit)},
              {"split", {{"train", cfg.split.train_frac}, {"val", cfg.split.val_frac}, {"test", cfg.split.test_frac}}},
              {"repetitions", cfg.repetitions},
              {"seed", cfg.seed},
              {"threads", cfg.threads}};
  if (!cfg.axis.empty()) {
    doc["axis"] = cfg.axis;
    doc["values"] = cfg.values;
  }
  return doc;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(doc);
}

// ---------------------------------------------------------------------------
// Execution

void run_pool(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& task) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::exception_ptr error;
  std::size_t error_index = count;
  std::vector<std::thread> workers;
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(mutex);
          if (i < error_index) {
            error_index = i;
            error = std::current_exception();
          }
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

double evaluate_variant(const DatasetSplit& parts, Variant variant, const FitConfig& fit, std::uint64_t seed) {
  FitConfig f = fit;
  f.variant = variant;
  f.seed = seed;
  const FitResult result = fit_on_split(parts.train, parts.val, f);
  return concordance_index(result.model.predict_expected_times(parts.test), parts.test);
}

namespace {

const std::set<std::string> kAxes = {"estimators", "cluster_points", "cluster_distance", "k_shape", "subsample_size"};

std::size_t positive_count(double value, const std::string& axis) {
  if (!(value >= 1.0) || std::round(value) != value) throw ConfigError(axis + " values must be positive integers");
  return static_cast<std::size_t>(value);
}

}  // namespace

std::vector<RunRow> run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  if (!kAxes.count(cfg.axis)) throw ConfigError("unknown sweep axis '" + cfg.axis + "'");
  if (cfg.values.empty()) throw ConfigError("sweep needs at least one value");
  const DataSource& source = cfg.datasets.front();
  const bool data_axis = cfg.axis == "cluster_points" || cfg.axis == "cluster_distance" || cfg.axis == "k_shape";
  if (data_axis && source.csv) throw ConfigError("axis '" + cfg.axis + "' needs a synthetic dataset");
  for (double value : cfg.values) {
    if (cfg.axis == "estimators" || cfg.axis == "cluster_points") positive_count(value, cfg.axis);
    if (cfg.axis == "subsample_size" && !(value > 0.0 && value <= 1.0)) {
      throw ConfigError("subsample_size values must lie in (0, 1]");
    }
    if ((cfg.axis == "k_shape" || cfg.axis == "cluster_distance") && !(value > 0.0)) {
      throw ConfigError(cfg.axis + " values must be positive");
    }
  }

  const std::size_t reps = cfg.repetitions;
  const std::size_t tasks = cfg.values.size() * reps;
  const std::size_t nv = cfg.variants.size();
  std::vector<RunRow> rows(tasks * nv);
  run_pool(tasks, cfg.threads, [&](std::size_t task) {
    const std::size_t vi = task / reps;
    const std::size_t rep = task % reps;
    const double value = cfg.values[vi];
    const std::uint64_t seed = derive_seed(cfg.seed, rep);
    FitConfig fit = cfg.fit;
    Dataset ds;
    if (source.csv) {
      ds = load_source(source, seed);
    } else {
      SyntheticConfig sc = source.synthetic(derive_seed(seed, 5));
      if (cfg.axis == "cluster_points") sc.n_per_cluster = positive_count(value, cfg.axis);
      if (cfg.axis == "k_shape") sc.k_shape = value;
      if (cfg.axis == "cluster_distance") sc.clusters = cluster_distance_preset(value, sc.seed).clusters;
      ds = generate_synthetic(sc);
    }
    if (cfg.axis == "estimators") fit.m_estimators = positive_count(value, cfg.axis);
    if (cfg.axis == "subsample_size") fit.k_fraction = value;
    SplitSpec spec = cfg.split;
    spec.seed = derive_seed(seed, 7);
    const DatasetSplit parts = split(ds, spec);
    for (std::size_t v = 0; v < nv; ++v) {
      RunRow& row = rows[task * nv + v];
      row.dataset = source.label();
      row.axis = cfg.axis;
      row.value = value;
      row.variant = cfg.variants[v];
      row.repetition = rep;
      row.seed = seed;
      row.cindex = evaluate_variant(parts, cfg.variants[v], fit, derive_seed(seed, 11));
    }
  });
  return rows;
}

BenchmarkResult run_benchmark(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t reps = cfg.repetitions;
  const std::size_t nv = cfg.variants.size();
  std::vector<Dataset> data;
  for (std::size_t d = 0; d < cfg.datasets.size(); ++d) {
    data.push_back(load_source(cfg.datasets[d], derive_seed(cfg.seed, 1000 + d)));
  }
  const std::size_t tasks = cfg.datasets.size() * reps;
  BenchmarkResult result;
  result.runs.resize(tasks * nv);
  run_pool(tasks, cfg.threads, [&](std::size_t task) {
    const std::size_t d = task / reps;
    const std::size_t rep = task % reps;
    const std::uint64_t seed = derive_seed(derive_seed(cfg.seed, d), rep);
    SplitSpec spec = cfg.split;
    spec.seed = derive_seed(seed, 7);
    const DatasetSplit parts = split(data[d], spec);
    for (std::size_t v = 0; v < nv; ++v) {
      RunRow& row = result.runs[task * nv + v];
      row.dataset = cfg.datasets[d].label();
      row.variant = cfg.variants[v];
      row.repetition = rep;
      row.seed = seed;
      row.cindex = evaluate_variant(parts, cfg.variants[v], cfg.fit, derive_seed(seed, 11));
    }
  });
  for (std::size_t d = 0; d < cfg.datasets.size(); ++d) {
    for (std::size_t v = 0; v < nv; ++v) {
      Vector scores;
      for (std::size_t rep = 0; rep < reps; ++rep) scores.push_back(result.runs[(d * reps + rep) * nv + v].cindex);
      double mean = 0.0;
      for (double s : scores) mean += s;
      mean /= static_cast<double>(scores.size());
      double var = 0.0;
      for (double s : scores) var += (s - mean) * (s - mean);
      const double sd = scores.size() > 1 ? std::sqrt(var / static_cast<double>(scores.size() - 1)) : 0.0;
      result.cells.push_back({cfg.datasets[d].label(), cfg.variants[v], mean, sd, scores.size()});
    }
  }
  return result;
}

std::vector<CompareRow> run_compare(const std::vector<BenchmarkCell>& table) {
  std::vector<std::string> variants;
  std::map<std::string, std::map<std::string, double>> by_variant;  // variant -> dataset -> mean
  for (const auto& cell : table) {
    const std::string v(to_string(cell.variant));
    if (std::find(variants.begin(), variants.end(), v) == variants.end()) variants.push_back(v);
    by_variant[v][cell.dataset] = cell.mean;
  }
  std::vector<CompareRow> out;
  for (std::size_t a = 0; a < variants.size(); ++a) {
    for (std::size_t b = a + 1; b < variants.size(); ++b) {
      Vector sa;
      Vector sb;
      for (const auto& [dataset, mean] : by_variant[variants[a]]) {
        const auto& other = by_variant[variants[b]];
        if (auto it = other.find(dataset); it != other.end()) {
          sa.push_back(mean);
          sb.push_back(it->second);
        }
      }
      if (sa.size() < 2) {
        throw ConfigError("comparing " + variants[a] + " and " + variants[b] + " needs at least two shared datasets");
      }
      const TTestResult t = paired_t_test(sa, sb);
      double diff = 0.0;
      for (std::size_t i = 0; i < sa.size(); ++i) diff += sa[i] - sb[i];
      out.push_back({variants[a], variants[b], sa.size(), diff / static_cast<double>(sa.size()), t.t_statistic,
                     t.p_value});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void write_csv(const std::filesystem::path& path, const json& config, const std::string& header,
               const std::vector<std::string>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  std::istringstream lines(config.dump(1));
  for (std::string line; std::getline(lines, line);) out << "# " << line << '\n';
  out << header << '\n';
  for (const auto& r : rows) out << r << '\n';
}

std::string format_runs(const std::vector<RunRow>& rows, std::vector<std::string>& out) {
  for (const auto& r : rows) {
    out.push_back(r.dataset + "," + r.axis + "," + num(r.value) + "," + std::string(to_string(r.variant)) + "," +
                  std::to_string(r.repetition) + "," + std::to_string(r.seed) + "," + num(r.cindex));
  }
  return "dataset,axis,value,variant,repetition,seed,cindex";
}

std::string format_cells(const std::vector<BenchmarkCell>& cells, std::vector<std::string>& out) {
  for (const auto& c : cells) {
    out.push_back(c.dataset + "," + std::string(to_string(c.variant)) + "," + num(c.mean) + "," + num(c.stddev) +
                  "," + std::to_string(c.repetitions));
  }
  return "dataset,variant,mean_cindex,std_cindex,repetitions";
}

std::string format_compare(const std::vector<CompareRow>& rows, std::vector<std::string>& out) {
  for (const auto& r : rows) {
    out.push_back(r.variant_a + "," + r.variant_b + "," + std::to_string(r.datasets) + "," + num(r.mean_difference) +
                  "," + num(r.t_statistic) + "," + num(r.p_value));
  }
  return "variant_a,variant_b,datasets,mean_difference,t_statistic,p_value";
}

std::vector<BenchmarkCell> read_benchmark_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<BenchmarkCell> cells;
  bool header_seen = false;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (!header_seen) {
      if (fields.size() < 3 || fields[0] != "dataset" || fields[1] != "variant" || fields[2] != "mean_cindex") {
        throw SchemaError(path.string() + ": expected a benchmark table header");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() < 3) throw DataError(path.string() + ": line " + std::to_string(line_no) + " is too short");
    BenchmarkCell cell;
    cell.dataset = fields[0];
    try {
      cell.variant = parse_variant(fields[1]);
      cell.mean = std::stod(fields[2]);
      if (fields.size() > 3) cell.stddev = std::stod(fields[3]);
      if (fields.size() > 4) cell.repetitions = std::stoul(fields[4]);
    } catch (const std::exception&) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) + " is not a benchmark row");
    }
    cells.push_back(cell);
  }
  if (!header_seen) throw SchemaError(path.string() + ": empty benchmark table");
  return cells;
}

}  // namespace survbeta
