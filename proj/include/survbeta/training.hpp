#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "survbeta/core.hpp"
#include "survbeta/ensemble.hpp"
#include "survbeta/lp.hpp"
#include "survbeta/pairs.hpp"
#include "survbeta/step_function.hpp"

namespace survbeta {

/// Per training record i and learner k: the learner's expected time T^_i^(k)
/// and the squared prototype distance ||x_i - e(A_k, x_i)||^2.
struct WeakTable {
  RowMatrix expected_time;
  RowMatrix proto_sq_dist;

  std::size_t records() const { return expected_time.rows(); }
  std::size_t learners() const { return expected_time.cols(); }
};

/// Table from precomputed weak survival functions (sfs[i][k]) and distances.
WeakTable make_weak_table(const std::vector<std::vector<StepSurvivalFunction>>& sfs, RowMatrix proto_sq_dist);

/// Table for the model's own training records. With `leave_one_out`, record i
/// is dropped from the Beran weights of every learner whose subsample holds it.
WeakTable compute_weak_table(const EnsembleModel& model, bool leave_one_out);

/// Coefficients of the hinge LP for a fixed (w, eps).
///
///   Q_p     = (1 - eps) (sum_k P_i^(k) T^_i^(k) - sum_k P_j^(k) T^_j^(k)),  p = (i, j)
///   R_p^(k) = T^_i^(k) - T^_j^(k)
///   U_c^(k) = (1 - eps) P_c^(k) T^_c^(k)                         for uncensored c
struct TrainingTableau {
  std::size_t m = 0;
  double w = 1.0;
  double epsilon = 0.0;
  std::vector<IndexPair> pairs;
  Vector q;
  RowMatrix r;                          // pairs x M
  std::vector<std::size_t> uncensored;  // record indices forming C
  Vector event_times;                   // T_c
  RowMatrix u;                          // |C| x M
  RowMatrix t_hat_c;                    // |C| x M
  RowMatrix p;                          // records x M softmax weights
  RowMatrix t_hat;                      // records x M

  std::size_t num_pairs() const { return pairs.size(); }
  std::size_t num_uncensored() const { return uncensored.size(); }
};

/// Throws DegenerateInput for an empty pair set.
TrainingTableau build_tableau(const Dataset& ds, const WeakTable& table, const ComparablePairSet& pairs, double w,
                              double epsilon);

/// Variables (v_1..v_M, xi_1..xi_|J|): min sum xi subject to
/// xi_p - eps sum_k R_p^(k) v_k >= Q_p, xi >= 0, v >= 0, sum v = 1.
LinearProgram build_cindex_lp(const TrainingTableau& t);

/// build_cindex_lp plus psi_1..psi_|C| after the xi block, objective
/// sum xi + sum psi and, per uncensored c,
///   psi_c - eps sum_k T^_c^(k) v_k >= sum_k U_c^(k) - T_c
///   psi_c + eps sum_k T^_c^(k) v_k >= T_c - sum_k U_c^(k).
LinearProgram build_cindex_mae_lp(const TrainingTableau& t);

/// Variables (beta_1..beta_M, eps, xi_1..xi_|J|, psi_1..psi_|C|) with
/// beta_k = eps v_k, sum beta = eps and 0 <= eps <= 1. The (1 - eps) factor of
/// Q and U is split into a constant and an eps-linear part.
LinearProgram build_trainable_eps_lp(const Dataset& ds, const WeakTable& table, const ComparablePairSet& pairs,
                                     double w);

/// (v, eps) from a trainable-eps LP point: v = beta / eps when eps > 0, else uniform.
std::pair<Vector, double> recover_trainable_eps(std::span<const double> x, std::size_t m);

/// xi_p(v) = max(0, Q_p + eps sum_k R_p^(k) v_k).
Vector hinge_slacks(const TrainingTableau& t, std::span<const double> v);
/// psi_c(v) = |sum_k (U_c^(k) + eps T^_c^(k) v_k) - T_c|.
Vector mae_slacks(const TrainingTableau& t, std::span<const double> v);
/// sum xi(v), plus sum psi(v) when `with_mae`.
double hinge_objective(const TrainingTableau& t, std::span<const double> v, bool with_mae);

/// Euclidean projection onto the probability simplex.
Vector project_to_simplex(std::span<const double> y);

struct TrainResult {
  Vector v;
  double epsilon = 0.0;
  double objective = 0.0;  // primal value at the returned point
  double dual_gap = 0.0;   // |primal - dual| certificate
  std::size_t iterations = 0;
};

/// Solves the fixed-eps LP through its dual, whose only rows are the M
/// simplex columns, and reads v off the row prices. eps = 0 returns uniform v.
TrainResult train_weights(const TrainingTableau& t, bool with_mae, const LpOptions& options = {});

/// Same for the trainable-eps LP; returns the recovered (v, eps).
TrainResult train_weights_trainable_eps(const Dataset& ds, const WeakTable& table, const ComparablePairSet& pairs,
                                        double w, bool with_mae, const LpOptions& options = {});

struct StepSchedule {
  enum class Kind { Constant, InverseSqrt, Geometric };
  Kind kind = Kind::Geometric;
  double initial = 0.5;
  double ratio = 0.999;  // Geometric only

  double at(std::size_t iteration) const;
};

struct RegularizedResult {
  Vector v;
  double objective = 0.0;
  std::size_t iterations = 0;
};

/// Projected subgradient descent on
///   sum xi(v) + sum psi(v) + lambda ||v||^2   over the simplex,
/// starting from uniform v with normalized steps. Returns the best iterate.
RegularizedResult solve_regularized(const TrainingTableau& t, double lambda, const StepSchedule& schedule = {},
                                    std::size_t iterations = 20000);

}  // namespace survbeta
