#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "survbeta/core.hpp"
#include "survbeta/error.hpp"

namespace survbeta {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class RowSense { LessEqual, GreaterEqual, Equal };

/// One constraint sum_j coeff_j x_{index_j} (sense) rhs, stored sparsely.
struct LinearConstraint {
  std::vector<std::size_t> index;
  Vector coeff;
  RowSense sense = RowSense::LessEqual;
  double rhs = 0.0;
};

/// minimize c^T x subject to the constraints and lower <= x <= upper.
/// Bounds may be infinite.
struct LinearProgram {
  Vector objective;
  Vector lower;
  Vector upper;
  std::vector<LinearConstraint> constraints;
  /// Optional crash: variables flagged here start nonbasic at their (finite)
  /// upper bound instead of the lower one.
  std::vector<bool> start_at_upper;

  std::size_t num_vars() const { return objective.size(); }
  std::size_t num_rows() const { return constraints.size(); }

  std::size_t add_variable(double cost, double lo, double hi);
  void add_constraint(std::vector<std::size_t> index, Vector coeff, RowSense sense, double rhs);

  /// Checks shapes, index ranges, finiteness of coefficients and lo <= hi.
  void validate() const;

  double evaluate_objective(std::span<const double> x) const;
  /// Largest bound or row violation at x (0 for a feasible point).
  double max_violation(std::span<const double> x) const;
};

struct LpSolution {
  Vector x;
  double objective = 0.0;
  /// Row prices pi with c - A^T pi >= 0 on variables at their lower bound.
  /// For a <= row pi <= 0, for a >= row pi >= 0.
  Vector duals;
  std::size_t iterations = 0;
};

struct LpOptions {
  std::size_t max_iterations = 0;  // 0 picks a size-based limit
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  std::size_t refactor_interval = 64;
};

/// Iteration limit hit or numerical breakdown. `best` is the last iterate;
/// `feasible` says whether it satisfies the constraints.
class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, LpSolution best, bool feasible)
      : Error(what), best_(std::move(best)), feasible_(feasible) {}
  const LpSolution& best() const { return best_; }
  bool feasible() const { return feasible_; }

 private:
  LpSolution best_;
  bool feasible_;
};

/// Bounded-variable revised primal simplex with a two-phase start.
/// Throws DegenerateInput for an infeasible or unbounded program and
/// SolverFailure when the iteration limit is reached.
LpSolution solve_lp(const LinearProgram& lp, const LpOptions& options = {});

}  // namespace survbeta
