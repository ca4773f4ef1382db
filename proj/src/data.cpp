#include "survbeta/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "survbeta/error.hpp"

namespace survbeta {

// ---------------------------------------------------------------------------
// Standardizer

Standardizer Standardizer::identity(std::size_t dim) { return {Vector(dim, 0.0), Vector(dim, 1.0)}; }

Standardizer Standardizer::fit(const Dataset& train) {
  if (train.empty()) throw DegenerateInput("cannot standardize an empty dataset");
  const std::size_t d = train.dim();
  Standardizer s{Vector(d, 0.0), Vector(d, 1.0)};
  const double n = static_cast<double>(train.size());
  for (const auto& rec : train) {
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += rec.features[j];
  }
  for (double& m : s.mean) m /= n;
  Vector var(d, 0.0);
  for (const auto& rec : train) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = rec.features[j] - s.mean[j];
      var[j] += c * c;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(var[j] / n);
    s.scale[j] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

bool Standardizer::is_identity() const {
  return std::all_of(mean.begin(), mean.end(), [](double m) { return m == 0.0; }) &&
         std::all_of(scale.begin(), scale.end(), [](double s) { return s == 1.0; });
}

Vector Standardizer::transform(std::span<const double> x) const {
  if (x.size() != mean.size()) throw InvalidInput("feature dimension does not match the standardizer");
  Vector out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) / scale[j];
  return out;
}

Dataset Standardizer::transform(const Dataset& ds) const {
  std::vector<SurvivalRecord> out;
  out.reserve(ds.size());
  for (const auto& rec : ds) out.push_back({transform(rec.features), rec.time, rec.event});
  return Dataset(std::move(out));
}

// ---------------------------------------------------------------------------
// Synthetic data

void SyntheticConfig::validate() const {
  if (dim == 0) throw ConfigError("synthetic dimension must be positive");
  if (clusters.empty()) throw ConfigError("synthetic data needs at least one cluster");
  for (const auto& r : clusters) {
    if (r.lower.size() != dim || r.upper.size() != dim) throw ConfigError("cluster bounds must match the dimension");
    for (std::size_t j = 0; j < dim; ++j) {
      if (!(r.lower[j] < r.upper[j])) throw ConfigError("cluster lower bound must be below the upper bound");
    }
  }
  if (!(censor_prob >= 0.0 && censor_prob <= 1.0)) throw ConfigError("censoring probability must lie in [0, 1]");
  if (!(k_shape > 0.0)) throw ConfigError("Weibull shape must be positive");
  // sin(c x) + c stays nonnegative for every x only when c >= 1.
  if (!(c >= 1.0)) throw ConfigError("sinusoid parameter c must be at least 1 so event-time means stay positive");
  if (fixed_u && !(*fixed_u > 0.0 && *fixed_u <= 1.0)) throw ConfigError("fixed u must lie in (0, 1]");
}

SyntheticConfig paper_default_preset(std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.dim = 5;
  cfg.clusters = {Rectangle{Vector(5, -2.0), Vector(5, 2.0)}, Rectangle{Vector(5, 20.0), Vector(5, 30.0)}};
  cfg.n_per_cluster = 500;
  cfg.c = 3.0;
  cfg.k_shape = 6.0;
  cfg.censor_prob = 0.2;
  cfg.seed = seed;
  return cfg;
}

SyntheticConfig cluster_distance_preset(double h, std::uint64_t seed) {
  SyntheticConfig cfg = paper_default_preset(seed);
  auto& second = cfg.clusters[1];
  for (std::size_t j = 0; j < cfg.dim; ++j) {
    second.lower[j] = cfg.clusters[0].upper[j] + h;
    second.upper[j] = second.lower[j] + 10.0;
  }
  return cfg;
}

std::optional<SyntheticConfig> synthetic_preset(const std::string& name, std::uint64_t seed) {
  if (name == "paper-default") return paper_default_preset(seed);
  if (name.rfind("fig3:", 0) == 0) {
    try {
      std::size_t used = 0;
      const double h = std::stod(name.substr(5), &used);
      if (used != name.size() - 5) return std::nullopt;
      return cluster_distance_preset(h, seed);
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

double weibull_event_time(double x1, double c, double k_shape, double u) {
  const double mean = std::sin(c * x1) + c;
  const double gamma = std::exp(std::lgamma(1.0 + 1.0 / k_shape));
  return mean / gamma * std::pow(-std::log(u), 1.0 / k_shape);
}

double sample_event_time(double x1, double c, double k_shape, std::mt19937_64& rng) {
  // 1 - U[0,1) lies in (0, 1], so log(u) stays finite.
  const double u = 1.0 - std::generate_canonical<double, 53>(rng);
  return weibull_event_time(x1, c, k_shape, u);
}

Dataset generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::bernoulli_distribution censored(cfg.censor_prob);
  std::vector<SurvivalRecord> records;
  records.reserve(cfg.clusters.size() * cfg.n_per_cluster);
  for (const auto& box : cfg.clusters) {
    for (std::size_t i = 0; i < cfg.n_per_cluster; ++i) {
      SurvivalRecord rec;
      rec.features.resize(cfg.dim);
      for (std::size_t j = 0; j < cfg.dim; ++j) {
        std::uniform_real_distribution<double> coord(box.lower[j], box.upper[j]);
        rec.features[j] = coord(rng);
      }
      rec.event = !censored(rng);
      rec.time = cfg.fixed_u ? weibull_event_time(rec.features[0], cfg.c, cfg.k_shape, *cfg.fixed_u)
                             : sample_event_time(rec.features[0], cfg.c, cfg.k_shape, rng);
      records.push_back(std::move(rec));
    }
  }
  return Dataset(std::move(records));
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cell += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(trim(cell));
      cell.clear();
    } else if (ch != '\r') {
      cell += ch;
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "na" || cell == "NaN" || cell == "nan" || cell == "?";
}

std::optional<double> parse_number(const std::string& cell) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::optional<bool> parse_event(const std::string& cell) {
  if (cell == "1" || cell == "true" || cell == "TRUE" || cell == "True") return true;
  if (cell == "0" || cell == "false" || cell == "FALSE" || cell == "False") return false;
  return std::nullopt;
}

}  // namespace

CsvLoadResult load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_csv_line(line);
      break;
    }
  }
  if (header.empty()) throw SchemaError(path.string() + ": missing header row");
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

  auto column = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError(path.string() + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t time_col = column(schema.time_column);
  const std::size_t event_col = column(schema.event_column);
  std::vector<std::size_t> feature_cols;
  std::vector<std::string> feature_headers;
  if (schema.feature_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c != time_col && c != event_col) {
        feature_cols.push_back(c);
        feature_headers.push_back(header[c]);
      }
    }
  } else {
    for (const auto& name : schema.feature_columns) {
      feature_cols.push_back(column(name));
      feature_headers.push_back(name);
    }
  }
  for (const auto& name : schema.categorical_columns) column(name);
  if (feature_cols.empty()) throw SchemaError(path.string() + ": no feature columns");

  struct Row {
    double time;
    bool event;
    std::vector<std::string> cells;
  };
  std::vector<Row> rows;
  CsvLoadResult result;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " fields, found " + std::to_string(cells.size()));
    }
    bool missing = is_missing(cells[time_col]) || is_missing(cells[event_col]);
    for (std::size_t c : feature_cols) missing = missing || is_missing(cells[c]);
    if (missing) {
      ++result.dropped_rows;
      result.dropped_lines.push_back(line_no);
      continue;
    }
    const auto time = parse_number(cells[time_col]);
    if (!time || *time < 0.0) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": unparseable time '" + cells[time_col] + "'");
    }
    const auto event = parse_event(cells[event_col]);
    if (!event) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": unparseable event '" + cells[event_col] + "'");
    }
    Row row{*time, *event, {}};
    for (std::size_t c : feature_cols) row.cells.push_back(cells[c]);
    rows.push_back(std::move(row));
  }

  // Decide the encoding of each feature column over the kept rows.
  const std::size_t nf = feature_cols.size();
  std::vector<bool> categorical(nf, false);
  std::vector<std::vector<std::string>> levels(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    categorical[f] = std::find(schema.categorical_columns.begin(), schema.categorical_columns.end(),
                               feature_headers[f]) != schema.categorical_columns.end();
    if (!categorical[f]) {
      for (const auto& row : rows) {
        if (!parse_number(row.cells[f])) {
          categorical[f] = true;
          break;
        }
      }
    }
    if (categorical[f]) {
      for (const auto& row : rows) {
        if (std::find(levels[f].begin(), levels[f].end(), row.cells[f]) == levels[f].end()) {
          levels[f].push_back(row.cells[f]);
        }
      }
    }
  }
  for (std::size_t f = 0; f < nf; ++f) {
    if (categorical[f]) {
      for (const auto& level : levels[f]) result.feature_names.push_back(feature_headers[f] + "=" + level);
    } else {
      result.feature_names.push_back(feature_headers[f]);
    }
  }

  std::vector<SurvivalRecord> records;
  records.reserve(rows.size());
  for (const auto& row : rows) {
    SurvivalRecord rec;
    rec.time = row.time;
    rec.event = row.event;
    for (std::size_t f = 0; f < nf; ++f) {
      if (categorical[f]) {
        for (const auto& level : levels[f]) rec.features.push_back(row.cells[f] == level ? 1.0 : 0.0);
      } else {
        rec.features.push_back(*parse_number(row.cells[f]));
      }
    }
    records.push_back(std::move(rec));
  }
  result.dataset = Dataset(std::move(records));
  return result;
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "time,event";
  for (std::size_t j = 0; j < ds.dim(); ++j) out << ",x" << j;
  out << '\n' << std::setprecision(17);
  for (const auto& rec : ds) {
    out << rec.time << ',' << (rec.event ? 1 : 0);
    for (double f : rec.features) out << ',' << f;
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Splits

void SplitSpec::validate() const {
  if (train_frac < 0.0 || val_frac < 0.0 || test_frac < 0.0) throw ConfigError("split fractions must be nonnegative");
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-12) throw ConfigError("split fractions must sum to 1");
}

SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  const auto n_val = static_cast<std::size_t>(std::llround(spec.val_frac * static_cast<double>(n)));
  const auto n_test = static_cast<std::size_t>(std::llround(spec.test_frac * static_cast<double>(n)));
  if (n_val + n_test > n) throw DegenerateInput("split fractions exceed the dataset size");
  const std::size_t n_train = n - n_val - n_test;
  if ((spec.train_frac > 0.0 && n_train == 0) || (spec.val_frac > 0.0 && n_val == 0) ||
      (spec.test_frac > 0.0 && n_test == 0)) {
    throw DegenerateInput("dataset of " + std::to_string(n) + " records is too small for the requested split");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(spec.seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  SplitIndices out;
  out.val.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
  out.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_val),
                  perm.begin() + static_cast<std::ptrdiff_t>(n_val + n_test));
  out.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_val + n_test), perm.end());
  for (auto* part : {&out.train, &out.val, &out.test}) std::sort(part->begin(), part->end());
  return out;
}

DatasetSplit split(const Dataset& ds, const SplitSpec& spec) {
  DatasetSplit out;
  out.indices = split_indices(ds.size(), spec);
  out.train = ds.subset(out.indices.train);
  out.val = ds.subset(out.indices.val);
  out.test = ds.subset(out.indices.test);
  return out;
}

}  // namespace survbeta
