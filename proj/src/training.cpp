#include "survbeta/training.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "survbeta/error.hpp"
#include "survbeta/kernel.hpp"

namespace survbeta {

WeakTable make_weak_table(const std::vector<std::vector<StepSurvivalFunction>>& sfs, RowMatrix proto_sq_dist) {
  const std::size_t n = sfs.size();
  const std::size_t m = n ? sfs.front().size() : 0;
  if (proto_sq_dist.rows() != n || proto_sq_dist.cols() != m) {
    throw InvalidInput("prototype distances must be records x learners");
  }
  WeakTable table{RowMatrix(n, m), std::move(proto_sq_dist)};
  for (std::size_t i = 0; i < n; ++i) {
    if (sfs[i].size() != m) throw InvalidInput("every record needs one survival function per learner");
    for (std::size_t k = 0; k < m; ++k) table.expected_time(i, k) = expected_time(sfs[i][k]);
  }
  return table;
}

WeakTable compute_weak_table(const EnsembleModel& model, bool leave_one_out) {
  const Dataset& train = model.train();
  const std::size_t n = train.size();
  const std::size_t m = model.size();
  WeakTable table{RowMatrix(n, m), RowMatrix(n, m)};
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = train.features(i);
    const std::optional<std::size_t> exclude = leave_one_out ? std::optional<std::size_t>(i) : std::nullopt;
    for (std::size_t k = 0; k < m; ++k) table.expected_time(i, k) = expected_time(model.learner(k).sf(z, exclude));
    const Vector d = model.prototype_sq_distances(z);
    std::copy(d.begin(), d.end(), table.proto_sq_dist.row(i).begin());
  }
  return table;
}

TrainingTableau build_tableau(const Dataset& ds, const WeakTable& table, const ComparablePairSet& pairs, double w,
                              double epsilon) {
  if (pairs.empty()) throw DegenerateInput("training needs at least one comparable pair");
  if (table.records() != ds.size()) throw InvalidInput("weak table does not match the dataset");
  if (!(w > 0.0)) throw InvalidInput("attention temperature w must be positive");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InvalidInput("contamination epsilon must lie in [0, 1]");
  const std::size_t n = ds.size();
  const std::size_t m = table.learners();
  if (m == 0) throw InvalidInput("weak table has no learners");

  TrainingTableau t;
  t.m = m;
  t.w = w;
  t.epsilon = epsilon;
  t.pairs = pairs.pairs;
  t.t_hat = table.expected_time;
  t.p = RowMatrix(n, m);
  Vector mixed(n, 0.0);  // sum_k P_i^(k) T^_i^(k)
  for (std::size_t i = 0; i < n; ++i) {
    const Vector p = softmax_neg_scaled(table.proto_sq_dist.row(i), w);
    for (std::size_t k = 0; k < m; ++k) {
      t.p(i, k) = p[k];
      mixed[i] += p[k] * table.expected_time(i, k);
    }
  }

  const double keep = 1.0 - epsilon;
  t.q.resize(t.pairs.size());
  t.r = RowMatrix(t.pairs.size(), m);
  for (std::size_t p = 0; p < t.pairs.size(); ++p) {
    const auto [i, j] = t.pairs[p];
    if (i >= n || j >= n) throw InvalidInput("pair index out of range");
    t.q[p] = keep * mixed[i] - keep * mixed[j];
    for (std::size_t k = 0; k < m; ++k) t.r(p, k) = table.expected_time(i, k) - table.expected_time(j, k);
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (ds[i].event) t.uncensored.push_back(i);
  }
  t.event_times.resize(t.uncensored.size());
  t.u = RowMatrix(t.uncensored.size(), m);
  t.t_hat_c = RowMatrix(t.uncensored.size(), m);
  for (std::size_t c = 0; c < t.uncensored.size(); ++c) {
    const std::size_t i = t.uncensored[c];
    t.event_times[c] = ds[i].time;
    for (std::size_t k = 0; k < m; ++k) {
      t.u(c, k) = keep * t.p(i, k) * table.expected_time(i, k);
      t.t_hat_c(c, k) = table.expected_time(i, k);
    }
  }
  return t;
}

namespace {

double row_sum(std::span<const double> row) { return std::accumulate(row.begin(), row.end(), 0.0); }

double row_dot(std::span<const double> row, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t k = 0; k < row.size(); ++k) s += row[k] * v[k];
  return s;
}

void add_simplex_block(LinearProgram& lp, std::size_t m) {
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t k = 0; k < m; ++k) lp.add_variable(0.0, 0.0, kInfinity);
  lp.add_constraint(std::move(idx), Vector(m, 1.0), RowSense::Equal, 1.0);
}

void add_hinge_rows(LinearProgram& lp, const TrainingTableau& t) {
  for (std::size_t p = 0; p < t.num_pairs(); ++p) {
    const std::size_t xi = lp.add_variable(1.0, 0.0, kInfinity);
    std::vector<std::size_t> idx{xi};
    Vector coeff{1.0};
    for (std::size_t k = 0; k < t.m; ++k) {
      idx.push_back(k);
      coeff.push_back(-t.epsilon * t.r(p, k));
    }
    lp.add_constraint(std::move(idx), std::move(coeff), RowSense::GreaterEqual, t.q[p]);
  }
}

Vector uniform(std::size_t m) { return Vector(m, 1.0 / static_cast<double>(m)); }

// Nonnegative part of -prices, renormalized onto the simplex.
Vector simplex_from_prices(std::span<const double> prices) {
  Vector v(prices.size());
  double total = 0.0;
  for (std::size_t k = 0; k < prices.size(); ++k) {
    v[k] = std::max(0.0, -prices[k]);
    total += v[k];
  }
  if (!(total > 0.0)) return uniform(prices.size());
  for (double& x : v) x /= total;
  return v;
}

}  // namespace

LinearProgram build_cindex_lp(const TrainingTableau& t) {
  LinearProgram lp;
  add_simplex_block(lp, t.m);
  add_hinge_rows(lp, t);
  return lp;
}

LinearProgram build_cindex_mae_lp(const TrainingTableau& t) {
  LinearProgram lp = build_cindex_lp(t);
  for (std::size_t c = 0; c < t.num_uncensored(); ++c) {
    const std::size_t psi = lp.add_variable(1.0, 0.0, kInfinity);
    const double a = row_sum(t.u.row(c)) - t.event_times[c];
    std::vector<std::size_t> idx{psi};
    Vector minus{1.0};
    Vector plus{1.0};
    for (std::size_t k = 0; k < t.m; ++k) {
      idx.push_back(k);
      minus.push_back(-t.epsilon * t.t_hat_c(c, k));
      plus.push_back(t.epsilon * t.t_hat_c(c, k));
    }
    lp.add_constraint(idx, std::move(minus), RowSense::GreaterEqual, a);
    lp.add_constraint(std::move(idx), std::move(plus), RowSense::GreaterEqual, -a);
  }
  return lp;
}

LinearProgram build_trainable_eps_lp(const Dataset& ds, const WeakTable& table, const ComparablePairSet& pairs,
                                     double w) {
  // With eps = 0 the tableau holds the constant parts: q = Q0, row sums of u = A.
  const TrainingTableau t = build_tableau(ds, table, pairs, w, 0.0);
  const std::size_t m = t.m;
  LinearProgram lp;
  for (std::size_t k = 0; k < m; ++k) lp.add_variable(0.0, 0.0, kInfinity);
  const std::size_t eps = lp.add_variable(0.0, 0.0, 1.0);
  for (std::size_t p = 0; p < t.num_pairs(); ++p) {
    const std::size_t xi = lp.add_variable(1.0, 0.0, kInfinity);
    std::vector<std::size_t> idx{xi, eps};
    Vector coeff{1.0, t.q[p]};
    for (std::size_t k = 0; k < m; ++k) {
      idx.push_back(k);
      coeff.push_back(-t.r(p, k));
    }
    lp.add_constraint(std::move(idx), std::move(coeff), RowSense::GreaterEqual, t.q[p]);
  }
  for (std::size_t c = 0; c < t.num_uncensored(); ++c) {
    const std::size_t psi = lp.add_variable(1.0, 0.0, kInfinity);
    const double a = row_sum(t.u.row(c));
    const double time = t.event_times[c];
    std::vector<std::size_t> idx{psi, eps};
    Vector minus{1.0, a};
    Vector plus{1.0, -a};
    for (std::size_t k = 0; k < m; ++k) {
      idx.push_back(k);
      minus.push_back(-t.t_hat_c(c, k));
      plus.push_back(t.t_hat_c(c, k));
    }
    lp.add_constraint(idx, std::move(minus), RowSense::GreaterEqual, a - time);
    lp.add_constraint(std::move(idx), std::move(plus), RowSense::GreaterEqual, time - a);
  }
  std::vector<std::size_t> idx(m + 1);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Vector coeff(m, 1.0);
  coeff.push_back(-1.0);
  lp.add_constraint(std::move(idx), std::move(coeff), RowSense::Equal, 0.0);
  return lp;
}

std::pair<Vector, double> recover_trainable_eps(std::span<const double> x, std::size_t m) {
  if (x.size() < m + 1) throw InvalidInput("trainable-eps point is too short");
  const double eps = std::clamp(x[m], 0.0, 1.0);
  Vector v(m);
  double total = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    v[k] = std::max(0.0, x[k]);
    total += v[k];
  }
  if (!(eps > 1e-12) || !(total > 0.0)) return {uniform(m), eps};
  for (double& b : v) b /= total;
  return {v, eps};
}

Vector hinge_slacks(const TrainingTableau& t, std::span<const double> v) {
  Vector xi(t.num_pairs());
  for (std::size_t p = 0; p < t.num_pairs(); ++p) {
    xi[p] = std::max(0.0, t.q[p] + t.epsilon * row_dot(t.r.row(p), v));
  }
  return xi;
}

Vector mae_slacks(const TrainingTableau& t, std::span<const double> v) {
  Vector psi(t.num_uncensored());
  for (std::size_t c = 0; c < t.num_uncensored(); ++c) {
    psi[c] = std::abs(row_sum(t.u.row(c)) + t.epsilon * row_dot(t.t_hat_c.row(c), v) - t.event_times[c]);
  }
  return psi;
}

double hinge_objective(const TrainingTableau& t, std::span<const double> v, bool with_mae) {
  const Vector xi = hinge_slacks(t, v);
  double total = std::accumulate(xi.begin(), xi.end(), 0.0);
  if (with_mae) {
    const Vector psi = mae_slacks(t, v);
    total += std::accumulate(psi.begin(), psi.end(), 0.0);
  }
  return total;
}

Vector project_to_simplex(std::span<const double> y) {
  if (y.empty()) throw InvalidInput("cannot project an empty vector");
  Vector sorted(y.begin(), y.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumulative += sorted[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) theta = candidate;
  }
  Vector x(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) x[k] = std::max(0.0, y[k] - theta);
  return x;
}

TrainResult train_weights(const TrainingTableau& t, bool with_mae, const LpOptions& options) {
  TrainResult result;
  result.epsilon = t.epsilon;
  if (t.epsilon == 0.0) {
    result.v = uniform(t.m);
    result.objective = hinge_objective(t, result.v, with_mae);
    return result;
  }
  // Dual: max Q.y + a.s + lambda  s.t.  lambda - eps (R_k.y + T_k.s) <= 0 for
  // every k, y in [0, 1], s in [-1, 1]. Its row prices are -v.
  // Crash: start every bounded dual variable at the bound that is optimal for
  // uniform v, so the simplex only repairs the pairs near their hinge.
  const Vector start = uniform(t.m);
  LinearProgram dual;
  std::vector<std::vector<std::size_t>> idx(t.m);
  std::vector<Vector> coeff(t.m);
  for (std::size_t p = 0; p < t.num_pairs(); ++p) {
    const std::size_t y = dual.add_variable(-t.q[p], 0.0, 1.0);
    dual.start_at_upper.push_back(t.q[p] + t.epsilon * row_dot(t.r.row(p), start) > 0.0);
    for (std::size_t k = 0; k < t.m; ++k) {
      idx[k].push_back(y);
      coeff[k].push_back(-t.epsilon * t.r(p, k));
    }
  }
  if (with_mae) {
    for (std::size_t c = 0; c < t.num_uncensored(); ++c) {
      const double a = row_sum(t.u.row(c)) - t.event_times[c];
      const std::size_t s = dual.add_variable(-a, -1.0, 1.0);
      dual.start_at_upper.push_back(a + t.epsilon * row_dot(t.t_hat_c.row(c), start) > 0.0);
      for (std::size_t k = 0; k < t.m; ++k) {
        idx[k].push_back(s);
        coeff[k].push_back(-t.epsilon * t.t_hat_c(c, k));
      }
    }
  }
  const std::size_t lambda = dual.add_variable(-1.0, -kInfinity, kInfinity);
  for (std::size_t k = 0; k < t.m; ++k) {
    idx[k].push_back(lambda);
    coeff[k].push_back(1.0);
    dual.add_constraint(std::move(idx[k]), std::move(coeff[k]), RowSense::LessEqual, 0.0);
  }
  const LpSolution sol = solve_lp(dual, options);
  result.v = simplex_from_prices(sol.duals);
  result.objective = hinge_objective(t, result.v, with_mae);
  result.dual_gap = std::abs(result.objective + sol.objective);
  result.iterations = sol.iterations;
  return result;
}

TrainResult train_weights_trainable_eps(const Dataset& ds, const WeakTable& table, const ComparablePairSet& pairs,
                                        double w, bool with_mae, const LpOptions& options) {
  const TrainingTableau t0 = build_tableau(ds, table, pairs, w, 0.0);
  const std::size_t m = t0.m;
  // Dual: max Q0.y + (A - T).s - rho  s.t.  lambda - (R_k.y + T_k.s) <= 0 for
  // every k and (Q0.y + A.s) - lambda - rho <= 0. Row prices give -beta, -eps.
  LinearProgram dual;
  std::vector<std::vector<std::size_t>> idx(m + 1);
  std::vector<Vector> coeff(m + 1);
  for (std::size_t p = 0; p < t0.num_pairs(); ++p) {
    const std::size_t y = dual.add_variable(-t0.q[p], 0.0, 1.0);
    dual.start_at_upper.push_back(t0.q[p] > 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      idx[k].push_back(y);
      coeff[k].push_back(-t0.r(p, k));
    }
    idx[m].push_back(y);
    coeff[m].push_back(t0.q[p]);
  }
  if (with_mae) {
    for (std::size_t c = 0; c < t0.num_uncensored(); ++c) {
      const double a = row_sum(t0.u.row(c));
      const std::size_t s = dual.add_variable(-(a - t0.event_times[c]), -1.0, 1.0);
      dual.start_at_upper.push_back(a - t0.event_times[c] > 0.0);
      for (std::size_t k = 0; k < m; ++k) {
        idx[k].push_back(s);
        coeff[k].push_back(-t0.t_hat_c(c, k));
      }
      idx[m].push_back(s);
      coeff[m].push_back(a);
    }
  }
  const std::size_t lambda = dual.add_variable(0.0, -kInfinity, kInfinity);
  const std::size_t rho = dual.add_variable(1.0, 0.0, kInfinity);
  for (std::size_t k = 0; k < m; ++k) {
    idx[k].push_back(lambda);
    coeff[k].push_back(1.0);
  }
  idx[m].push_back(lambda);
  coeff[m].push_back(-1.0);
  idx[m].push_back(rho);
  coeff[m].push_back(-1.0);
  for (std::size_t k = 0; k <= m; ++k) {
    dual.add_constraint(std::move(idx[k]), std::move(coeff[k]), RowSense::LessEqual, 0.0);
  }
  const LpSolution sol = solve_lp(dual, options);

  Vector point(m + 1);
  for (std::size_t k = 0; k <= m; ++k) point[k] = -sol.duals[k];
  auto [v, eps] = recover_trainable_eps(point, m);
  TrainResult result;
  result.v = std::move(v);
  result.epsilon = eps;
  const TrainingTableau t = build_tableau(ds, table, pairs, w, eps);
  result.objective = hinge_objective(t, result.v, with_mae);
  result.dual_gap = std::abs(result.objective + sol.objective);
  result.iterations = sol.iterations;
  return result;
}

double StepSchedule::at(std::size_t iteration) const {
  const double k = static_cast<double>(iteration);
  switch (kind) {
    case Kind::Constant: return initial;
    case Kind::InverseSqrt: return initial / std::sqrt(k + 1.0);
    case Kind::Geometric: return initial * std::pow(ratio, k);
  }
  return initial;
}

RegularizedResult solve_regularized(const TrainingTableau& t, double lambda, const StepSchedule& schedule,
                                    std::size_t iterations) {
  if (!(lambda >= 0.0)) throw InvalidInput("regularization weight must be nonnegative");
  const std::size_t m = t.m;
  auto objective = [&](const Vector& v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    return hinge_objective(t, v, true) + lambda * sq;
  };

  Vector v = uniform(m);
  RegularizedResult best{v, objective(v), 0};
  Vector g(m);
  for (std::size_t it = 0; it < iterations; ++it) {
    for (std::size_t k = 0; k < m; ++k) g[k] = 2.0 * lambda * v[k];
    for (std::size_t p = 0; p < t.num_pairs(); ++p) {
      const auto r = t.r.row(p);
      if (t.q[p] + t.epsilon * row_dot(r, v) > 0.0) {
        for (std::size_t k = 0; k < m; ++k) g[k] += t.epsilon * r[k];
      }
    }
    for (std::size_t c = 0; c < t.num_uncensored(); ++c) {
      const auto th = t.t_hat_c.row(c);
      const double resid = row_sum(t.u.row(c)) + t.epsilon * row_dot(th, v) - t.event_times[c];
      if (resid == 0.0) continue;
      const double sign = resid > 0.0 ? 1.0 : -1.0;
      for (std::size_t k = 0; k < m; ++k) g[k] += sign * t.epsilon * th[k];
    }
    double norm = 0.0;
    for (double x : g) norm += x * x;
    norm = std::sqrt(norm);
    best.iterations = it + 1;
    if (norm == 0.0) break;
    const double step = schedule.at(it) / norm;
    Vector y(m);
    for (std::size_t k = 0; k < m; ++k) y[k] = v[k] - step * g[k];
    v = project_to_simplex(y);
    const double f = objective(v);
    if (f < best.objective) {
      best.objective = f;
      best.v = v;
    }
  }
  return best;
}

}  // namespace survbeta
