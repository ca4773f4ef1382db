#include "survbeta/lp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>

namespace survbeta {

std::size_t LinearProgram::add_variable(double cost, double lo, double hi) {
  objective.push_back(cost);
  lower.push_back(lo);
  upper.push_back(hi);
  return objective.size() - 1;
}

void LinearProgram::add_constraint(std::vector<std::size_t> index, Vector coeff, RowSense sense, double rhs) {
  constraints.push_back(LinearConstraint{std::move(index), std::move(coeff), sense, rhs});
}

void LinearProgram::validate() const {
  const std::size_t n = num_vars();
  if (lower.size() != n || upper.size() != n) throw InvalidInput("bound vectors must match the variable count");
  if (start_at_upper.size() > n) throw InvalidInput("crash flags exceed the variable count");
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(objective[j])) throw InvalidInput("objective coefficient is not finite");
    if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j]) {
      throw InvalidInput("variable bounds are inconsistent");
    }
    if (lower[j] == kInfinity || upper[j] == -kInfinity) throw InvalidInput("variable bound is infinite on the wrong side");
  }
  for (const auto& row : constraints) {
    if (row.index.size() != row.coeff.size()) throw InvalidInput("constraint index and coefficient lengths differ");
    if (!std::isfinite(row.rhs)) throw InvalidInput("constraint right-hand side is not finite");
    for (std::size_t t = 0; t < row.index.size(); ++t) {
      if (row.index[t] >= n) throw InvalidInput("constraint refers to an unknown variable");
      if (!std::isfinite(row.coeff[t])) throw InvalidInput("constraint coefficient is not finite");
    }
  }
}

double LinearProgram::evaluate_objective(std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t j = 0; j < num_vars(); ++j) s += objective[j] * x[j];
  return s;
}

double LinearProgram::max_violation(std::span<const double> x) const {
  double worst = 0.0;
  for (std::size_t j = 0; j < num_vars(); ++j) {
    worst = std::max({worst, lower[j] - x[j], x[j] - upper[j]});
  }
  for (const auto& row : constraints) {
    double a = 0.0;
    for (std::size_t t = 0; t < row.index.size(); ++t) a += row.coeff[t] * x[row.index[t]];
    switch (row.sense) {
      case RowSense::LessEqual: worst = std::max(worst, a - row.rhs); break;
      case RowSense::GreaterEqual: worst = std::max(worst, row.rhs - a); break;
      case RowSense::Equal: worst = std::max(worst, std::abs(a - row.rhs)); break;
    }
  }
  return worst;
}

namespace {

enum class Status { Basic, AtLower, AtUpper, FreeZero };

constexpr double kPivotTol = 1e-9;
constexpr std::size_t kDegenerateLimit = 50;

// Variables: n structural, then one logical per row (A x + l = b), then the
// phase-one artificials. Every column except the structural ones is a signed
// unit vector.
class Simplex {
 public:
  Simplex(const LinearProgram& lp, const LpOptions& opt) : lp_(lp), opt_(opt) {
    n_ = lp.num_vars();
    m_ = lp.num_rows();
    build_columns();
  }

  LpSolution run() {
    initial_basis();
    max_iter_ = opt_.max_iterations ? opt_.max_iterations : 50 * (n_ + m_) + 5000;
    if (total_ > n_ + m_) {
      cost_.assign(total_, 0.0);
      for (std::size_t j = n_ + m_; j < total_; ++j) cost_[j] = 1.0;
      reduced_valid_ = false;
      iterate(false);
      double infeasibility = 0.0;
      for (std::size_t j = n_ + m_; j < total_; ++j) infeasibility += x_[j];
      double scale = 1.0;
      for (const auto& row : lp_.constraints) scale = std::max(scale, std::abs(row.rhs));
      if (infeasibility > 1e-7 * scale) throw DegenerateInput("linear program is infeasible");
      for (std::size_t j = n_ + m_; j < total_; ++j) {
        lo_[j] = 0.0;
        hi_[j] = 0.0;
        if (status_[j] != Status::Basic) {
          status_[j] = Status::AtLower;
          x_[j] = 0.0;
        }
      }
    }
    cost_.assign(total_, 0.0);
    std::copy(lp_.objective.begin(), lp_.objective.end(), cost_.begin());
    in_phase_two_ = true;
    reduced_valid_ = false;
    iterate(true);
    return solution();
  }

 private:
  void build_columns() {
    std::vector<std::size_t> counts(n_ + 1, 0);
    for (const auto& row : lp_.constraints) {
      for (std::size_t j : row.index) ++counts[j + 1];
    }
    for (std::size_t j = 0; j < n_; ++j) counts[j + 1] += counts[j];
    col_start_ = counts;
    col_row_.resize(col_start_[n_]);
    col_val_.resize(col_start_[n_]);
    std::vector<std::size_t> fill(col_start_.begin(), col_start_.end() - 1);
    for (std::size_t i = 0; i < m_; ++i) {
      const auto& row = lp_.constraints[i];
      for (std::size_t t = 0; t < row.index.size(); ++t) {
        const std::size_t pos = fill[row.index[t]]++;
        col_row_[pos] = i;
        col_val_[pos] = row.coeff[t];
      }
    }
  }

  // y . a_j
  double dot_column(const Vector& y, std::size_t j) const {
    if (j < n_) {
      double s = 0.0;
      for (std::size_t p = col_start_[j]; p < col_start_[j + 1]; ++p) s += y[col_row_[p]] * col_val_[p];
      return s;
    }
    return unit_sign_[j - n_] * y[unit_row_[j - n_]];
  }

  // B^{-1} a_j
  Vector ftran(std::size_t j) const {
    Vector out(m_, 0.0);
    if (j < n_) {
      for (std::size_t p = col_start_[j]; p < col_start_[j + 1]; ++p) {
        const std::size_t r = col_row_[p];
        const double v = col_val_[p];
        for (std::size_t i = 0; i < m_; ++i) out[i] += binv_(i, r) * v;
      }
    } else {
      const std::size_t r = unit_row_[j - n_];
      const double s = unit_sign_[j - n_];
      for (std::size_t i = 0; i < m_; ++i) out[i] = binv_(i, r) * s;
    }
    return out;
  }

  void initial_basis() {
    total_ = n_ + m_;
    lo_.assign(lp_.lower.begin(), lp_.lower.end());
    hi_.assign(lp_.upper.begin(), lp_.upper.end());
    x_.assign(n_, 0.0);
    status_.assign(n_, Status::AtLower);
    for (std::size_t j = 0; j < n_; ++j) {
      const bool crash = j < lp_.start_at_upper.size() && lp_.start_at_upper[j] && std::isfinite(hi_[j]);
      if (crash) {
        x_[j] = hi_[j];
        status_[j] = Status::AtUpper;
      } else if (std::isfinite(lo_[j])) {
        x_[j] = lo_[j];
      } else if (std::isfinite(hi_[j])) {
        x_[j] = hi_[j];
        status_[j] = Status::AtUpper;
      } else {
        status_[j] = Status::FreeZero;
      }
    }
    Vector residual(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      const auto& row = lp_.constraints[i];
      double a = 0.0;
      for (std::size_t t = 0; t < row.index.size(); ++t) a += row.coeff[t] * x_[row.index[t]];
      residual[i] = row.rhs - a;
    }
    basis_.assign(m_, 0);
    for (std::size_t i = 0; i < m_; ++i) {
      unit_row_.push_back(i);
      unit_sign_.push_back(1.0);
      switch (lp_.constraints[i].sense) {
        case RowSense::LessEqual: lo_.push_back(0.0); hi_.push_back(kInfinity); break;
        case RowSense::GreaterEqual: lo_.push_back(-kInfinity); hi_.push_back(0.0); break;
        case RowSense::Equal: lo_.push_back(0.0); hi_.push_back(0.0); break;
      }
    }
    x_.resize(n_ + m_, 0.0);
    status_.resize(n_ + m_, Status::AtLower);
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t l = n_ + i;
      const double r = residual[i];
      if (r >= lo_[l] - opt_.feasibility_tol && r <= hi_[l] + opt_.feasibility_tol) {
        basis_[i] = l;
        status_[l] = Status::Basic;
        x_[l] = r;
        continue;
      }
      const double bound = r < lo_[l] ? lo_[l] : hi_[l];
      x_[l] = bound;
      status_[l] = bound == hi_[l] && bound != lo_[l] ? Status::AtUpper : Status::AtLower;
      const double gap = r - bound;
      unit_row_.push_back(i);
      unit_sign_.push_back(gap > 0 ? 1.0 : -1.0);
      lo_.push_back(0.0);
      hi_.push_back(kInfinity);
      x_.push_back(std::abs(gap));
      status_.push_back(Status::Basic);
      basis_[i] = total_++;
    }
    refactor();
  }

  void refactor() {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(m_));
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t j = basis_[i];
      const auto c = static_cast<Eigen::Index>(i);
      if (j < n_) {
        for (std::size_t p = col_start_[j]; p < col_start_[j + 1]; ++p) {
          b(static_cast<Eigen::Index>(col_row_[p]), c) = col_val_[p];
        }
      } else {
        b(static_cast<Eigen::Index>(unit_row_[j - n_]), c) = unit_sign_[j - n_];
      }
    }
    if (m_ > 0) binv_ = b.partialPivLu().inverse();
    // x_B = B^{-1} (b - N x_N)
    Vector rhs(m_);
    for (std::size_t i = 0; i < m_; ++i) rhs[i] = lp_.constraints[i].rhs;
    for (std::size_t j = 0; j < total_; ++j) {
      if (status_[j] == Status::Basic || x_[j] == 0.0) continue;
      if (j < n_) {
        for (std::size_t p = col_start_[j]; p < col_start_[j + 1]; ++p) rhs[col_row_[p]] -= col_val_[p] * x_[j];
      } else {
        rhs[unit_row_[j - n_]] -= unit_sign_[j - n_] * x_[j];
      }
    }
    for (std::size_t i = 0; i < m_; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < m_; ++k) s += binv_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * rhs[k];
      x_[basis_[i]] = s;
    }
    since_refactor_ = 0;
    reduced_valid_ = false;
  }

  Vector prices() const {
    Vector y(m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      const double c = cost_[basis_[i]];
      if (c == 0.0) continue;
      for (std::size_t k = 0; k < m_; ++k) y[k] += c * binv_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    }
    return y;
  }

  // Reduced costs of every nonbasic column. A bound flip leaves the basis and
  // hence the prices unchanged, so these are recomputed only after a pivot.
  void compute_reduced_costs() {
    const Vector y = prices();
    reduced_.assign(total_, 0.0);
    for (std::size_t j = 0; j < total_; ++j) {
      if (status_[j] != Status::Basic) reduced_[j] = cost_[j] - dot_column(y, j);
    }
    reduced_valid_ = true;
  }

  // Entering variable and its direction (+1 increase, -1 decrease); nullopt at optimum.
  std::optional<std::pair<std::size_t, double>> price(bool bland) const {
    std::optional<std::pair<std::size_t, double>> best;
    double best_score = 0.0;
    for (std::size_t j = 0; j < total_; ++j) {
      const Status s = status_[j];
      if (s == Status::Basic || lo_[j] == hi_[j]) continue;
      const double d = reduced_[j];
      double dir = 0.0;
      if ((s == Status::AtLower || s == Status::FreeZero) && d < -opt_.optimality_tol) dir = 1.0;
      if ((s == Status::AtUpper || s == Status::FreeZero) && d > opt_.optimality_tol) dir = -1.0;
      if (dir == 0.0) continue;
      if (bland) return std::make_pair(j, dir);
      if (std::abs(d) > best_score) {
        best_score = std::abs(d);
        best = std::make_pair(j, dir);
      }
    }
    return best;
  }

  void iterate(bool phase_two) {
    std::size_t degenerate_run = 0;
    bool confirmed = false;
    while (true) {
      if (iterations_ >= max_iter_) {
        const LpSolution best = solution();
        const bool feasible = phase_two && lp_.max_violation(best.x) <= 1e-8;
        throw SolverFailure("simplex iteration limit reached", best, feasible);
      }
      if (since_refactor_ >= opt_.refactor_interval) refactor();
      if (!reduced_valid_) compute_reduced_costs();
      const auto entering = price(degenerate_run > kDegenerateLimit);
      if (!entering) {
        // Confirm optimality on a fresh factorization before stopping.
        if (confirmed || since_refactor_ == 0) return;
        refactor();
        confirmed = true;
        continue;
      }
      confirmed = false;
      const auto [q, dir] = *entering;
      const Vector alpha = ftran(q);
      const double step = ratio_test_and_update(q, dir, alpha);
      ++iterations_;
      degenerate_run = step < 1e-12 ? degenerate_run + 1 : 0;
    }
  }

  // Harris two-pass ratio test. Returns the step length taken.
  double ratio_test_and_update(std::size_t q, double dir, const Vector& alpha) {
    const double tol = opt_.feasibility_tol;
    double theta_max = hi_[q] - lo_[q];  // bound flip of the entering variable
    for (std::size_t i = 0; i < m_; ++i) {
      const double g = -dir * alpha[i];
      const std::size_t b = basis_[i];
      if (g > kPivotTol && std::isfinite(hi_[b])) theta_max = std::min(theta_max, (hi_[b] + tol - x_[b]) / g);
      if (g < -kPivotTol && std::isfinite(lo_[b])) theta_max = std::min(theta_max, (lo_[b] - tol - x_[b]) / g);
    }
    if (!std::isfinite(theta_max)) throw DegenerateInput("linear program is unbounded");

    std::optional<std::size_t> leave;
    double leave_ratio = 0.0;
    double best_pivot = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      const double g = -dir * alpha[i];
      const std::size_t b = basis_[i];
      double ratio = kInfinity;
      if (g > kPivotTol && std::isfinite(hi_[b])) ratio = (hi_[b] - x_[b]) / g;
      if (g < -kPivotTol && std::isfinite(lo_[b])) ratio = (lo_[b] - x_[b]) / g;
      if (ratio <= theta_max && std::abs(g) > best_pivot) {
        best_pivot = std::abs(g);
        leave = i;
        leave_ratio = ratio;
      }
    }

    const double flip = hi_[q] - lo_[q];
    if (!leave || flip <= std::max(leave_ratio, 0.0)) {
      // Entering variable runs to its opposite bound; the basis is unchanged.
      for (std::size_t i = 0; i < m_; ++i) x_[basis_[i]] += -dir * alpha[i] * flip;
      x_[q] = dir > 0 ? hi_[q] : lo_[q];
      status_[q] = dir > 0 ? Status::AtUpper : Status::AtLower;
      return flip;
    }

    const double theta = std::max(leave_ratio, 0.0);
    for (std::size_t i = 0; i < m_; ++i) x_[basis_[i]] += -dir * alpha[i] * theta;
    x_[q] += dir * theta;
    const std::size_t r = *leave;
    const std::size_t out = basis_[r];
    const double g = -dir * alpha[r];
    if (g > 0) {
      x_[out] = hi_[out];
      status_[out] = Status::AtUpper;
    } else {
      x_[out] = lo_[out];
      status_[out] = Status::AtLower;
    }
    if (lo_[out] == hi_[out]) status_[out] = Status::AtLower;
    basis_[r] = q;
    status_[q] = Status::Basic;
    pivot(r, alpha);
    return theta;
  }

  void pivot(std::size_t r, const Vector& alpha) {
    const auto rr = static_cast<Eigen::Index>(r);
    binv_.row(rr) /= alpha[r];
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r || alpha[i] == 0.0) continue;
      binv_.row(static_cast<Eigen::Index>(i)) -= alpha[i] * binv_.row(rr);
    }
    ++since_refactor_;
    reduced_valid_ = false;
  }

  LpSolution solution() const {
    LpSolution s;
    s.x.assign(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(n_));
    for (std::size_t j = 0; j < n_; ++j) s.x[j] = std::clamp(s.x[j], lp_.lower[j], lp_.upper[j]);
    s.objective = lp_.evaluate_objective(s.x);
    s.duals = in_phase_two_ ? prices() : Vector(m_, 0.0);
    s.iterations = iterations_;
    return s;
  }

  const LinearProgram& lp_;
  LpOptions opt_;
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::size_t total_ = 0;
  std::vector<std::size_t> col_start_;
  std::vector<std::size_t> col_row_;
  Vector col_val_;
  std::vector<std::size_t> unit_row_;
  Vector unit_sign_;
  Vector lo_;
  Vector hi_;
  Vector x_;
  Vector cost_;
  std::vector<Status> status_;
  std::vector<std::size_t> basis_;
  Eigen::MatrixXd binv_;
  Vector reduced_;
  bool reduced_valid_ = false;
  std::size_t since_refactor_ = 0;
  std::size_t iterations_ = 0;
  std::size_t max_iter_ = 0;
  bool in_phase_two_ = false;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& options) {
  lp.validate();
  Simplex simplex(lp, options);
  return simplex.run();
}

}  // namespace survbeta
