#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "survbeta/core.hpp"
#include "survbeta/ensemble.hpp"
#include "survbeta/lp.hpp"
#include "survbeta/pairs.hpp"

namespace survbeta {

enum class Variant { BeranSingle, SurvbetaNoopt, SurvbetaOpt, Bagging };

std::string_view to_string(Variant v);
/// Throws ConfigError for an unknown name.
Variant parse_variant(std::string_view name);

enum class TrainObjective { CIndex, CIndexMae };

/// Shared: every learner uses one tau, selected on validation from the tau
/// set. PerLearner: each learner draws its own tau from the set. Local: each
/// learner picks the tau with the best leave-one-out C-index on its subsample.
enum class TauMode { Shared, PerLearner, Local };

std::string_view to_string(TauMode m);
TauMode parse_tau_mode(std::string_view name);

std::string_view to_string(TrainObjective o);
TrainObjective parse_train_objective(std::string_view name);

/// The seven-point log grid 10^-3 .. 10^3 used for tau and w.
Vector log_grid();

struct FitConfig {
  Variant variant = Variant::SurvbetaOpt;
  std::size_t m_estimators = 20;
  double k_fraction = 0.4;
  /// Beran bandwidth set, searched for beran-single and used per tau_mode by ensembles.
  Vector taus = log_grid();
  TauMode tau_mode = TauMode::Local;
  double eta = 1.0;
  Vector w_grid = log_grid();
  /// eps values tried by survbeta-opt; 0 is always added.
  Vector epsilon_grid = {0.25, 0.5, 0.75, 1.0};
  bool trainable_epsilon = false;
  TrainObjective objective = TrainObjective::CIndexMae;
  PrototypeMode prototype_mode = PrototypeMode::NadarayaWatson;
  /// Defaults to RandomK with K = min(|J|, 50 n).
  std::optional<PairReduction> pair_reduction;
  /// Share of the pool held out for model selection.
  double val_fraction = 0.25;
  bool standardize = true;
  /// Training expected times leave the record out of its own Beran estimators.
  bool leave_one_out = true;
  std::uint64_t seed = 0;
  LpOptions lp;

  /// Throws ConfigError.
  void validate() const;
};

struct GridPointReport {
  double w = 1.0;
  double epsilon = 0.0;
  double tau = 0.0;  // 0 when learners keep their own tau
  Vector v;
  double train_cindex = 0.0;
  double val_cindex = 0.0;
  double objective = 0.0;
  double dual_gap = 0.0;
  std::size_t iterations = 0;
  double seconds = 0.0;
};

struct FitReport {
  Variant variant = Variant::SurvbetaOpt;
  std::vector<GridPointReport> grid;
  std::size_t chosen = 0;
  /// Validation had no comparable pair; selection used the training C-index.
  bool validation_fallback = false;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::size_t n_pairs = 0;
  double wall_seconds = 0.0;
};

struct FitResult {
  EnsembleModel model;
  FitReport report;
};

/// Splits `pool` into train/validation by cfg.val_fraction and fits on it.
FitResult fit_survbeta(const Dataset& pool, const FitConfig& cfg);

/// Fits on an explicit split (raw features). Standardization statistics come
/// from `train` only.
FitResult fit_on_split(const Dataset& train, const Dataset& val, const FitConfig& cfg);

}  // namespace survbeta
