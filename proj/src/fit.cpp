#include "survbeta/fit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "survbeta/data.hpp"
#include "survbeta/error.hpp"
#include "survbeta/kernel.hpp"
#include "survbeta/metrics.hpp"
#include "survbeta/training.hpp"

namespace survbeta {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::BeranSingle: return "beran-single";
    case Variant::SurvbetaNoopt: return "survbeta-noopt";
    case Variant::SurvbetaOpt: return "survbeta-opt";
    case Variant::Bagging: return "bagging";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::BeranSingle, Variant::SurvbetaNoopt, Variant::SurvbetaOpt, Variant::Bagging}) {
    if (name == to_string(v)) return v;
  }
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

std::string_view to_string(TrainObjective o) { return o == TrainObjective::CIndex ? "cindex" : "cindex-mae"; }

TrainObjective parse_train_objective(std::string_view name) {
  if (name == "cindex") return TrainObjective::CIndex;
  if (name == "cindex-mae") return TrainObjective::CIndexMae;
  throw ConfigError("unknown training objective '" + std::string(name) + "'");
}

std::string_view to_string(TauMode m) {
  switch (m) {
    case TauMode::Shared: return "shared";
    case TauMode::PerLearner: return "per-learner";
    case TauMode::Local: return "local";
  }
  return "unknown";
}

TauMode parse_tau_mode(std::string_view name) {
  if (name == "shared") return TauMode::Shared;
  if (name == "per-learner") return TauMode::PerLearner;
  if (name == "local") return TauMode::Local;
  throw ConfigError("unknown tau mode '" + std::string(name) + "'");
}

Vector log_grid() { return {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3}; }

void FitConfig::validate() const {
  auto positive_grid = [](const Vector& g, const char* what) {
    if (g.empty()) throw ConfigError(std::string(what) + " grid is empty");
    for (double x : g) {
      if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(std::string(what) + " values must be positive");
    }
  };
  positive_grid(taus, "tau");
  positive_grid(w_grid, "w");
  if (variant == Variant::SurvbetaOpt && !trainable_epsilon && epsilon_grid.empty()) {
    throw ConfigError("epsilon grid is empty");
  }
  for (double e : epsilon_grid) {
    if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("epsilon values must lie in [0, 1]");
  }
  if (m_estimators == 0) throw ConfigError("the ensemble needs at least one estimator");
  if (!(k_fraction > 0.0 && k_fraction <= 1.0)) throw ConfigError("subsample fraction must lie in (0, 1]");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("prototype bandwidth must be positive");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("validation fraction must lie in (0, 1)");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

WeakTable validation_table(const EnsembleModel& model, const Dataset& val) {
  WeakTable table{RowMatrix(val.size(), model.size()), RowMatrix(val.size(), model.size())};
  for (std::size_t i = 0; i < val.size(); ++i) {
    const auto z = val.features(i);
    for (std::size_t k = 0; k < model.size(); ++k) table.expected_time(i, k) = expected_time(model.learner(k).sf(z));
    const Vector d = model.prototype_sq_distances(z);
    std::copy(d.begin(), d.end(), table.proto_sq_dist.row(i).begin());
  }
  return table;
}

Vector mixed_predictions(const WeakTable& table, double w, double epsilon, const Vector& v) {
  Vector out(table.records(), 0.0);
  for (std::size_t i = 0; i < table.records(); ++i) {
    const Vector p = softmax_neg_scaled(table.proto_sq_dist.row(i), w);
    for (std::size_t k = 0; k < table.learners(); ++k) {
      out[i] += ((1.0 - epsilon) * p[k] + epsilon * v[k]) * table.expected_time(i, k);
    }
  }
  return out;
}

std::optional<double> try_cindex(const Vector& pred, const Dataset& ds) {
  try {
    return concordance_index(pred, ds);
  } catch (const DegenerateInput&) {
    return std::nullopt;
  }
}

// Each learner keeps the tau whose leave-one-out expected times rank its own
// subsample best. Ties go to the smaller tau.
void tune_local_taus(const Dataset& tr, std::vector<Subsample>& subsamples, Vector taus) {
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
  for (auto& s : subsamples) {
    const Dataset own = tr.subset(s.indices);
    double best = -1.0;
    Kernel chosen = s.kernel;
    for (double tau : taus) {
      const Kernel kernel(s.kernel.family(), tau);
      const BeranModel model(tr, s.indices, kernel);
      Vector pred(s.indices.size());
      for (std::size_t q = 0; q < s.indices.size(); ++q) {
        pred[q] = expected_time(model.sf(tr.features(s.indices[q]), s.indices[q]));
      }
      const double score = try_cindex(pred, own).value_or(-1.0);
      if (score > best) {
        best = score;
        chosen = kernel;
      }
    }
    s.kernel = chosen;
  }
}

struct Selection {
  std::size_t chosen = 0;
  bool fallback = false;
};

// First strictly best point wins, so callers order the grid by preference.
Selection select(std::vector<GridPointReport>& grid, const std::vector<std::optional<double>>& val_scores) {
  Selection s;
  s.fallback = std::none_of(val_scores.begin(), val_scores.end(), [](const auto& x) { return x.has_value(); });
  double best = -1.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    grid[g].val_cindex = val_scores[g].value_or(0.0);
    const double score = s.fallback ? grid[g].train_cindex : grid[g].val_cindex;
    if (score > best) {
      best = score;
      s.chosen = g;
    }
  }
  return s;
}

FitResult fit_beran_single(const Dataset& tr, const Dataset& va, const Standardizer& standardizer,
                           const FitConfig& cfg, Clock::time_point start) {
  std::vector<std::size_t> all(tr.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  Vector taus = cfg.taus;
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());

  FitReport report;
  report.variant = Variant::BeranSingle;
  report.n_train = tr.size();
  report.n_val = va.size();
  std::vector<std::optional<double>> val_scores;
  for (double tau : taus) {
    const auto t0 = Clock::now();
    const BeranModel model(tr, all, Kernel(KernelFamily::Gaussian, tau));
    Vector train_pred(tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i) {
      const auto exclude = cfg.leave_one_out ? std::optional<std::size_t>(i) : std::nullopt;
      train_pred[i] = expected_time(model.sf(tr.features(i), exclude));
    }
    Vector val_pred(va.size());
    for (std::size_t i = 0; i < va.size(); ++i) val_pred[i] = expected_time(model.sf(va.features(i)));
    GridPointReport point;
    point.tau = tau;
    point.v = {1.0};
    point.train_cindex = try_cindex(train_pred, tr).value_or(0.0);
    val_scores.push_back(try_cindex(val_pred, va));
    point.seconds = seconds_since(t0);
    report.grid.push_back(std::move(point));
  }
  const Selection s = select(report.grid, val_scores);
  report.chosen = s.chosen;
  report.validation_fallback = s.fallback;
  const double tau = report.grid[s.chosen].tau;
  Subsample whole{all, Kernel(KernelFamily::Gaussian, tau), cfg.eta};
  EnsembleModel model(tr, {whole}, 1.0, 0.0, {1.0}, cfg.prototype_mode, standardizer);
  report.wall_seconds = seconds_since(start);
  return FitResult{std::move(model), std::move(report)};
}

}  // namespace

FitResult fit_survbeta(const Dataset& pool, const FitConfig& cfg) {
  cfg.validate();
  SplitSpec spec{1.0 - cfg.val_fraction, cfg.val_fraction, 0.0, derive_seed(cfg.seed, 1)};
  const DatasetSplit parts = split(pool, spec);
  return fit_on_split(parts.train, parts.val, cfg);
}

FitResult fit_on_split(const Dataset& train, const Dataset& val, const FitConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();
  if (train.empty()) throw DegenerateInput("training split is empty");
  train.require_event();
  const Standardizer standardizer = cfg.standardize ? Standardizer::fit(train) : Standardizer::identity(train.dim());
  const Dataset tr = standardizer.transform(train);
  const Dataset va = val.empty() ? Dataset() : standardizer.transform(val);

  if (cfg.variant == Variant::BeranSingle) return fit_beran_single(tr, va, standardizer, cfg, start);

  const std::size_t n = tr.size();
  const std::size_t m = cfg.m_estimators;
  const auto k = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(cfg.k_fraction * static_cast<double>(n))), 1, n);
  auto drawn = generate_subsamples(tr, m, k, derive_seed(cfg.seed, 2), SubsampleOptions{cfg.taus, cfg.eta});
  if (cfg.tau_mode == TauMode::Local) tune_local_taus(tr, drawn, cfg.taus);
  const Vector uniform(m, 1.0 / static_cast<double>(m));

  // One stage per shared tau (tau = 0 keeps each learner's own tau).
  struct Stage {
    EnsembleModel model;
    WeakTable train_table;
    WeakTable val_table;
  };
  auto build_stage = [&](double tau) {
    std::vector<Subsample> subsamples = drawn;
    if (tau > 0.0) {
      for (auto& s : subsamples) s.kernel = Kernel(s.kernel.family(), tau);
    }
    EnsembleModel model(tr, std::move(subsamples), 1.0, 0.0, uniform, cfg.prototype_mode, standardizer);
    WeakTable train_table = compute_weak_table(model, cfg.leave_one_out);
    WeakTable val_table = validation_table(model, va);
    return Stage{std::move(model), std::move(train_table), std::move(val_table)};
  };
  Vector tau_values{0.0};
  if (cfg.tau_mode == TauMode::Shared) {
    tau_values = cfg.taus;
    std::sort(tau_values.begin(), tau_values.end());
    tau_values.erase(std::unique(tau_values.begin(), tau_values.end()), tau_values.end());
  }

  FitReport report;
  report.variant = cfg.variant;
  report.n_train = n;
  report.n_val = va.size();

  Vector ws = cfg.w_grid;
  std::sort(ws.begin(), ws.end());
  ws.erase(std::unique(ws.begin(), ws.end()), ws.end());
  if (cfg.variant == Variant::Bagging) ws = {1.0};  // w does not enter uniform weights
  std::set<double> eps_set;
  eps_set.insert(cfg.epsilon_grid.begin(), cfg.epsilon_grid.end());
  eps_set.erase(0.0);

  std::vector<std::optional<double>> val_scores;
  auto evaluate = [&](const Stage& stage, GridPointReport point) {
    point.train_cindex =
        try_cindex(mixed_predictions(stage.train_table, point.w, point.epsilon, point.v), tr).value_or(0.0);
    val_scores.push_back(
        va.empty() ? std::nullopt
                   : try_cindex(mixed_predictions(stage.val_table, point.w, point.epsilon, point.v), va));
    report.grid.push_back(std::move(point));
  };

  // Untrained points for every tau: eps = 0 (softmax only), or eps = 1 with
  // uniform v for bagging. The tau with the best such point hosts the LP stage.
  const double plain_eps = cfg.variant == Variant::Bagging ? 1.0 : 0.0;
  std::size_t best_tau = 0;
  double best_score = -1.0;
  for (std::size_t ti = 0; ti < tau_values.size(); ++ti) {
    const Stage stage = build_stage(tau_values[ti]);
    for (double w : ws) {
      GridPointReport point;
      point.w = w;
      point.epsilon = plain_eps;
      point.tau = tau_values[ti];
      point.v = uniform;
      evaluate(stage, std::move(point));
      const double score = val_scores.back().value_or(report.grid.back().train_cindex);
      if (score > best_score) {
        best_score = score;
        best_tau = ti;
      }
    }
  }

  if (cfg.variant == Variant::SurvbetaOpt) {
    const Stage stage = build_stage(tau_values[best_tau]);
    const ComparablePairSet all_pairs = build_pairs(tr);
    const PairReduction reduction = cfg.pair_reduction.value_or(PairReduction::random_k(50 * n));
    const ComparablePairSet pairs = reduce_pairs(all_pairs, tr, reduction, derive_seed(cfg.seed, 3));
    report.n_pairs = pairs.size();
    const bool with_mae = cfg.objective == TrainObjective::CIndexMae;
    auto trained_point = [&](double w, const TrainResult& r, Clock::time_point t0) {
      GridPointReport point{w, r.epsilon, tau_values[best_tau], r.v, 0, 0, r.objective, r.dual_gap, r.iterations, 0};
      point.seconds = seconds_since(t0);
      return point;
    };
    if (cfg.trainable_epsilon) {
      for (double w : ws) {
        const auto t0 = Clock::now();
        const TrainResult r = train_weights_trainable_eps(tr, stage.train_table, pairs, w, with_mae, cfg.lp);
        evaluate(stage, trained_point(w, r, t0));
      }
    } else {
      for (double eps : eps_set) {
        // At eps = 1 the softmax term vanishes, so one LP serves every w.
        std::optional<TrainResult> shared;
        for (double w : ws) {
          const auto t0 = Clock::now();
          if (!shared) {
            const TrainingTableau tableau = build_tableau(tr, stage.train_table, pairs, w, eps);
            const TrainResult r = train_weights(tableau, with_mae, cfg.lp);
            if (eps == 1.0) shared = r;
            evaluate(stage, trained_point(w, r, t0));
          } else {
            evaluate(stage, trained_point(w, *shared, t0));
          }
        }
      }
    }
  }

  // Stable reorder by (eps, w, tau) so the first maximum follows the tie-break rule.
  std::vector<std::size_t> order(report.grid.size());
  for (std::size_t g = 0; g < order.size(); ++g) order[g] = g;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = report.grid[a];
    const auto& pb = report.grid[b];
    if (pa.epsilon != pb.epsilon) return pa.epsilon < pb.epsilon;
    if (pa.w != pb.w) return pa.w < pb.w;
    return pa.tau < pb.tau;
  });
  std::vector<GridPointReport> sorted;
  std::vector<std::optional<double>> sorted_scores;
  for (std::size_t g : order) {
    sorted.push_back(std::move(report.grid[g]));
    sorted_scores.push_back(val_scores[g]);
  }
  report.grid = std::move(sorted);
  const Selection s = select(report.grid, sorted_scores);
  report.chosen = s.chosen;
  report.validation_fallback = s.fallback;
  const auto& best = report.grid[s.chosen];
  Stage chosen = build_stage(best.tau);
  chosen.model.set_attention(best.w, best.epsilon, best.v);
  report.wall_seconds = seconds_since(start);
  return FitResult{std::move(chosen.model), std::move(report)};
}

}  // namespace survbeta
