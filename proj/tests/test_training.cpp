#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "support.hpp"
#include "survbeta/error.hpp"
#include "survbeta/training.hpp"

using namespace survbeta;
using namespace testsupport;

namespace {

struct Problem {
  Dataset ds;
  WeakTable table;
  ComparablePairSet pairs;
};

// A dataset with a hand-rolled weak table; pairs are capped so that the
// exact oracles stay cheap.
Problem random_problem(std::mt19937_64& rng, std::size_t n, std::size_t m, std::size_t max_pairs,
                       double time_scale = 10.0) {
  Problem pr;
  pr.ds = random_dataset_with_event(rng, n, 1, 0.3);
  pr.table.expected_time = RowMatrix(n, m);
  pr.table.proto_sq_dist = RowMatrix(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < m; ++k) {
      pr.table.expected_time(i, k) = uniform(rng, 0.0, time_scale);
      pr.table.proto_sq_dist(i, k) = uniform(rng, 0.0, 3.0);
    }
  }
  pr.pairs = reduce_pairs(build_pairs(pr.ds), pr.ds, PairReduction::random_k(max_pairs), rng());
  return pr;
}

double sum_positive(const Vector& q) {
  double s = 0.0;
  for (double x : q) s += std::max(0.0, x);
  return s;
}

double row_total(std::span<const double> r) { return std::accumulate(r.begin(), r.end(), 0.0); }

bool on_simplex(const Vector& v, double tol) {
  double s = 0.0;
  for (double x : v) {
    if (x < -tol) return false;
    s += x;
  }
  return std::abs(s - 1.0) <= tol;
}

std::vector<HalfPlane> triangle() { return {{-1.0, 0.0, 0.0}, {0.0, -1.0, 0.0}, {1.0, 1.0, 1.0}}; }

// Fixed eps, M = 3, z = (v1, v2) with v3 = 1 - v1 - v2.
std::vector<PlanarTerm> fixed_eps_terms(const TrainingTableau& t, bool with_mae) {
  const double e = t.epsilon;
  std::vector<PlanarTerm> terms;
  for (std::size_t p = 0; p < t.num_pairs(); ++p) {
    const auto r = t.r.row(p);
    terms.push_back({e * (r[0] - r[2]), e * (r[1] - r[2]), t.q[p] + e * r[2], false});
  }
  if (with_mae) {
    for (std::size_t c = 0; c < t.num_uncensored(); ++c) {
      const auto th = t.t_hat_c.row(c);
      terms.push_back({e * (th[0] - th[2]), e * (th[1] - th[2]), row_total(t.u.row(c)) + e * th[2] - t.event_times[c],
                       true});
    }
  }
  return terms;
}

// Trainable eps, M = 2, z = (eps, beta1) with beta2 = eps - beta1.
std::vector<PlanarTerm> trainable_terms(const TrainingTableau& t0, bool with_mae) {
  std::vector<PlanarTerm> terms;
  for (std::size_t p = 0; p < t0.num_pairs(); ++p) {
    const auto r = t0.r.row(p);
    terms.push_back({r[1] - t0.q[p], r[0] - r[1], t0.q[p], false});
  }
  if (with_mae) {
    for (std::size_t c = 0; c < t0.num_uncensored(); ++c) {
      const auto th = t0.t_hat_c.row(c);
      const double a = row_total(t0.u.row(c));
      terms.push_back({th[1] - a, th[0] - th[1], a - t0.event_times[c], true});
    }
  }
  return terms;
}

std::vector<HalfPlane> trainable_region() { return {{0.0, -1.0, 0.0}, {-1.0, 1.0, 0.0}, {1.0, 0.0, 1.0}}; }

}  // namespace

TEST_CASE("tableau with one learner") {
  std::mt19937_64 rng(41);
  const Problem pr = random_problem(rng, 8, 1, 100);
  const auto t = build_tableau(pr.ds, pr.table, pr.pairs, 0.7, 0.3);
  for (std::size_t i = 0; i < pr.ds.size(); ++i) CHECK(t.p(i, 0) == 1.0);
  for (std::size_t p = 0; p < t.num_pairs(); ++p) {
    const auto [i, j] = t.pairs[p];
    const double diff = pr.table.expected_time(i, 0) - pr.table.expected_time(j, 0);
    CHECK(t.q[p] == doctest::Approx(0.7 * diff).epsilon(1e-14));
    CHECK(t.r(p, 0) == diff);
  }
  for (std::size_t c = 0; c < t.num_uncensored(); ++c) {
    CHECK(t.u(c, 0) == doctest::Approx(0.7 * pr.table.expected_time(t.uncensored[c], 0)).epsilon(1e-14));
    CHECK(t.event_times[c] == pr.ds[t.uncensored[c]].time);
  }
}

TEST_CASE("tableau at full contamination has no attention part") {
  std::mt19937_64 rng(42);
  const Problem pr = random_problem(rng, 10, 3, 100);
  const auto t = build_tableau(pr.ds, pr.table, pr.pairs, 1.0, 1.0);
  for (double q : t.q) CHECK(q == 0.0);
  for (double u : t.u.data()) CHECK(u == 0.0);
}

TEST_CASE("tableau worked example with two learners") {
  const Dataset ds({{{0.0}, 1.0, true}, {{1.0}, 2.0, true}});
  WeakTable table;
  table.expected_time = RowMatrix(2, 2);
  table.proto_sq_dist = RowMatrix(2, 2);
  table.expected_time(0, 0) = 1.0;
  table.expected_time(0, 1) = 3.0;
  table.expected_time(1, 0) = 2.0;
  table.expected_time(1, 1) = 2.0;
  table.proto_sq_dist(0, 1) = std::log(3.0);  // attention (3/4, 1/4) at w = 1
  const auto t = build_tableau(ds, table, build_pairs(ds), 1.0, 0.5);
  REQUIRE(t.num_pairs() == 1);
  CHECK(t.p(0, 0) == doctest::Approx(0.75));
  CHECK(t.p(1, 0) == doctest::Approx(0.5));
  CHECK(t.q[0] == doctest::Approx(-0.25));
  CHECK(t.r(0, 0) == -1.0);
  CHECK(t.r(0, 1) == 1.0);
  CHECK(t.u(0, 0) == doctest::Approx(0.375));
  CHECK(t.u(0, 1) == doctest::Approx(0.375));
  CHECK(t.u(1, 0) == doctest::Approx(0.5));
  CHECK(t.u(1, 1) == doctest::Approx(0.5));
}

TEST_CASE("tableau input checks") {
  std::mt19937_64 rng(43);
  const Problem pr = random_problem(rng, 6, 2, 100);
  CHECK_THROWS_AS(build_tableau(pr.ds, pr.table, ComparablePairSet{}, 1.0, 0.5), DegenerateInput);
  CHECK_THROWS_AS(build_tableau(pr.ds, pr.table, pr.pairs, 0.0, 0.5), InvalidInput);
  CHECK_THROWS_AS(build_tableau(pr.ds, pr.table, pr.pairs, 1.0, 1.5), InvalidInput);
}

TEST_CASE("c-index LP without contamination is the positive part of Q") {
  std::mt19937_64 rng(44);
  for (int rep = 0; rep < 30; ++rep) {
    const Problem pr = random_problem(rng, 10, 3, 30);
    const auto t = build_tableau(pr.ds, pr.table, pr.pairs, 0.5, 0.0);
    CHECK(solve_lp(build_cindex_lp(t)).objective == doctest::Approx(sum_positive(t.q)).epsilon(1e-9));
    double mae = 0.0;
    for (std::size_t c = 0; c < t.num_uncensored(); ++c) mae += std::abs(row_total(t.u.row(c)) - t.event_times[c]);
    CHECK(solve_lp(build_cindex_mae_lp(t)).objective == doctest::Approx(sum_positive(t.q) + mae).epsilon(1e-9));
  }
}

TEST_CASE("c-index LP hand example") {
  TrainingTableau t;
  t.m = 2;
  t.epsilon = 1.0;
  t.pairs = {{0, 1}};
  t.q = {0.5};
  t.r = RowMatrix(1, 2);
  t.r(0, 0) = -1.0;
  t.r(0, 1) = 1.0;
  t.u = RowMatrix(0, 2);
  t.t_hat_c = RowMatrix(0, 2);
  const auto sol = solve_lp(build_cindex_lp(t));
  CHECK(sol.objective == doctest::Approx(0.0));
  const auto trained = train_weights(t, false);
  CHECK(trained.objective == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(trained.v[0] >= 0.75 - 1e-12);
  const Vector corner{1.0, 0.0};
  CHECK(hinge_objective(t, corner, false) == 0.0);
}

TEST_CASE("LP optimum is below the objective at random simplex points") {
  std::mt19937_64 rng(45);
  for (int rep = 0; rep < 10; ++rep) {
    const Problem pr = random_problem(rng, 12, 4, 40);
    const auto t = build_tableau(pr.ds, pr.table, pr.pairs, 0.3, uniform(rng, 0.1, 1.0));
    const double best = solve_lp(build_cindex_mae_lp(t)).objective;
    for (int s = 0; s < 100; ++s) {
      Vector v(4);
      for (double& x : v) x = -std::log(uniform(rng, 1e-12, 1.0));
      const double total = std::accumulate(v.begin(), v.end(), 0.0);
      for (double& x : v) x /= total;
      CHECK(best <= hinge_objective(t, v, true) + 1e-9);
    }
  }
}

TEST_CASE("fixed-eps LP matches the exact arrangement minimum") {
  std::mt19937_64 rng(46);
  for (int rep = 0; rep < 100; ++rep) {
    const bool with_mae = rep % 2 == 0;
    const std::size_t m = rep % 3 == 0 ? 2 : 3;
    const Problem pr = random_problem(rng, 6, m, 8);
    const auto t = build_tableau(pr.ds, pr.table, pr.pairs, uniform(rng, 0.05, 2.0), uniform(rng, 0.0, 1.0));
    double oracle = 0.0;
    if (m == 3) {
      oracle = arrangement_min(fixed_eps_terms(t, with_mae), triangle());
    } else {
      // M = 2 embeds as v2 = 0 in the three-learner form with a zero third column.
      TrainingTableau t3 = t;
      t3.m = 3;
      t3.r = RowMatrix(t.num_pairs(), 3);
      t3.t_hat_c = RowMatrix(t.num_uncensored(), 3);
      t3.u = RowMatrix(t.num_uncensored(), 3);
      for (std::size_t p = 0; p < t.num_pairs(); ++p) {
        t3.r(p, 0) = t.r(p, 0);
        t3.r(p, 2) = t.r(p, 1);
      }
      for (std::size_t c = 0; c < t.num_uncensored(); ++c) {
        t3.t_hat_c(c, 0) = t.t_hat_c(c, 0);
        t3.t_hat_c(c, 2) = t.t_hat_c(c, 1);
        t3.u(c, 0) = row_total(t.u.row(c));
      }
      auto region = triangle();
      region.push_back({0.0, 1.0, 0.0});
      oracle = arrangement_min(fixed_eps_terms(t3, with_mae), region);
    }
    const auto lp = with_mae ? build_cindex_mae_lp(t) : build_cindex_lp(t);
    const auto sol = solve_lp(lp);
    CHECK(std::abs(sol.objective - oracle) <= 1e-8 * (1.0 + oracle));
    const auto trained = train_weights(t, with_mae);
    CHECK(std::abs(trained.objective - oracle) <= 1e-8 * (1.0 + oracle));
    CHECK(on_simplex(trained.v, 1e-10));
  }
}

TEST_CASE("trainable-eps LP matches the exact arrangement minimum") {
  std::mt19937_64 rng(47);
  for (int rep = 0; rep < 100; ++rep) {
    const bool with_mae = rep % 2 == 0;
    const Problem pr = random_problem(rng, 6, 2, 8);
    const double w = uniform(rng, 0.05, 2.0);
    const auto t0 = build_tableau(pr.ds, pr.table, pr.pairs, w, 0.0);
    const double oracle = arrangement_min(trainable_terms(t0, with_mae), trainable_region());
    if (with_mae) {
      CHECK(std::abs(solve_lp(build_trainable_eps_lp(pr.ds, pr.table, pr.pairs, w)).objective - oracle) <=
            1e-8 * (1.0 + oracle));
    }
    const auto trained = train_weights_trainable_eps(pr.ds, pr.table, pr.pairs, w, with_mae);
    CHECK(std::abs(trained.objective - oracle) <= 1e-7 * (1.0 + oracle));
    CHECK(trained.epsilon >= 0.0);
    CHECK(trained.epsilon <= 1.0);
    CHECK(on_simplex(trained.v, 1e-10));
    CHECK(trained.dual_gap <= 1e-7 * (1.0 + oracle));
  }
}

TEST_CASE("LP is never worse than the 0.01 simplex grid") {
  std::mt19937_64 rng(48);
  for (int rep = 0; rep < 20; ++rep) {
    const Problem pr = random_problem(rng, 6, 3, 8);
    const auto t = build_tableau(pr.ds, pr.table, pr.pairs, 0.5, uniform(rng, 0.2, 1.0));
    double grid = std::numeric_limits<double>::infinity();
    for_each_simplex_grid_point(3, 100, [&](const std::vector<double>& v) { grid = std::min(grid, hinge_objective(t, v, false)); });
    CHECK(train_weights(t, false).objective <= grid + 1e-9);
  }
}

TEST_CASE("compact dual agrees with the primal program") {
  std::mt19937_64 rng(49);
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t m = uniform_int(rng, 1, 6);
    const Problem pr = random_problem(rng, 25, m, 150);
    const auto t = build_tableau(pr.ds, pr.table, pr.pairs, uniform(rng, 0.05, 2.0), uniform(rng, 0.05, 1.0));
    for (bool with_mae : {false, true}) {
      const double primal = solve_lp(with_mae ? build_cindex_mae_lp(t) : build_cindex_lp(t)).objective;
      const auto trained = train_weights(t, with_mae);
      CHECK(std::abs(trained.objective - primal) <= 1e-7 * (1.0 + primal));
      CHECK(trained.dual_gap <= 1e-7 * (1.0 + primal));
      CHECK(on_simplex(trained.v, 1e-10));
    }
  }
}

TEST_CASE("slacks are tight at the primal optimum") {
  std::mt19937_64 rng(50);
  for (int rep = 0; rep < 20; ++rep) {
    const Problem pr = random_problem(rng, 12, 3, 40);
    const auto t = build_tableau(pr.ds, pr.table, pr.pairs, 0.5, uniform(rng, 0.1, 1.0));
    const auto sol = solve_lp(build_cindex_mae_lp(t));
    const Vector v(sol.x.begin(), sol.x.begin() + 3);
    const Vector xi = hinge_slacks(t, v);
    const Vector psi = mae_slacks(t, v);
    for (std::size_t p = 0; p < xi.size(); ++p) CHECK(std::abs(sol.x[3 + p] - xi[p]) <= 1e-8);
    for (std::size_t c = 0; c < psi.size(); ++c) CHECK(std::abs(sol.x[3 + xi.size() + c] - psi[c]) <= 1e-8);
  }
}

TEST_CASE("recovering v and eps from a trainable point") {
  const auto [v, eps] = recover_trainable_eps(Vector{0.2, 0.3, 0.5}, 2);
  CHECK(eps == 0.5);
  CHECK(v[0] == doctest::Approx(0.4));
  CHECK(v[1] == doctest::Approx(0.6));
  const auto [u, zero] = recover_trainable_eps(Vector{0.0, 0.0, 0.0}, 2);
  CHECK(zero == 0.0);
  CHECK(u == Vector{0.5, 0.5});
  CHECK_THROWS_AS(recover_trainable_eps(Vector{0.1}, 2), InvalidInput);
}

TEST_CASE("simplex projection matches a bisection oracle") {
  std::mt19937_64 rng(51);
  for (int rep = 0; rep < 500; ++rep) {
    Vector y(uniform_int(rng, 1, 8));
    for (double& x : y) x = uniform(rng, -3.0, 3.0);
    double lo = *std::min_element(y.begin(), y.end()) - 1.0;
    double hi = *std::max_element(y.begin(), y.end());
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      double s = 0.0;
      for (double x : y) s += std::max(0.0, x - mid);
      (s > 1.0 ? lo : hi) = mid;
    }
    const Vector x = project_to_simplex(y);
    CHECK(on_simplex(x, 1e-12));
    for (std::size_t k = 0; k < y.size(); ++k) CHECK(std::abs(x[k] - std::max(0.0, y[k] - lo)) <= 1e-10);
  }
  CHECK_THROWS_AS(project_to_simplex(Vector{}), InvalidInput);
}

TEST_CASE("regularized solver") {
  std::mt19937_64 rng(52);
  for (int rep = 0; rep < 5; ++rep) {
    const Problem pr = random_problem(rng, 10, 3, 20);
    const auto t = build_tableau(pr.ds, pr.table, pr.pairs, 0.5, uniform(rng, 0.3, 1.0));
    const Vector flat(3, 1.0 / 3.0);
    const double lp = solve_lp(build_cindex_mae_lp(t)).objective;

    const auto plain = solve_regularized(t, 0.0);
    CHECK(on_simplex(plain.v, 1e-12));
    CHECK(plain.objective <= hinge_objective(t, flat, true) + 1e-12);
    CHECK(plain.objective - lp <= 1e-4 * (1.0 + lp));

    // Strong convexity: ||v* - uniform|| <= G / (2 lambda), G bounding the
    // subgradient norm of the hinge and MAE terms.
    const double lambda = 1e3;
    double g = 0.0;
    for (std::size_t p = 0; p < t.num_pairs(); ++p) {
      double sq = 0.0;
      for (double r : t.r.row(p)) sq += r * r;
      g += t.epsilon * std::sqrt(sq);
    }
    for (std::size_t c = 0; c < t.num_uncensored(); ++c) {
      double sq = 0.0;
      for (double x : t.t_hat_c.row(c)) sq += x * x;
      g += t.epsilon * std::sqrt(sq);
    }
    const auto heavy = solve_regularized(t, lambda);
    for (double x : heavy.v) CHECK(std::abs(x - 1.0 / 3.0) <= g / (2.0 * lambda) + 1e-3);
  }
  for (int rep = 0; rep < 5; ++rep) {
    const Problem pr = random_problem(rng, 10, 2, 20);
    const auto t = build_tableau(pr.ds, pr.table, pr.pairs, 0.5, uniform(rng, 0.3, 1.0));
    const double lambda = 2.0;
    const auto f = [&](double a) {
      const Vector v{a, 1.0 - a};
      return hinge_objective(t, v, true) + lambda * (a * a + (1.0 - a) * (1.0 - a));
    };
    const double oracle = golden_section_min(f, 0.0, 1.0);
    CHECK(std::abs(solve_regularized(t, lambda).objective - oracle) <= 1e-4 * (1.0 + oracle));
  }
  std::mt19937_64 bad(53);
  const Problem pr = random_problem(bad, 5, 2, 5);
  CHECK_THROWS_AS(solve_regularized(build_tableau(pr.ds, pr.table, pr.pairs, 1.0, 0.5), -1.0), InvalidInput);
}

TEST_CASE("optimal value is continuous in eps") {
  std::mt19937_64 rng(54);
  for (int rep = 0; rep < 20; ++rep) {
    const Problem pr = random_problem(rng, 12, 3, 40);
    const double eps = uniform(rng, 0.05, 0.95);
    const double delta = 1e-6;
    const auto a = build_tableau(pr.ds, pr.table, pr.pairs, 0.5, eps);
    const auto b = build_tableau(pr.ds, pr.table, pr.pairs, 0.5, eps + delta);
    // Lipschitz bound from the derivative of every term in eps.
    const auto base = build_tableau(pr.ds, pr.table, pr.pairs, 0.5, 0.0);
    double lipschitz = 0.0;
    for (std::size_t p = 0; p < base.num_pairs(); ++p) {
      double worst = 0.0;
      for (double r : base.r.row(p)) worst = std::max(worst, std::abs(r));
      lipschitz += std::abs(base.q[p]) + worst;
    }
    for (std::size_t c = 0; c < base.num_uncensored(); ++c) {
      double worst = 0.0;
      for (double x : base.t_hat_c.row(c)) worst = std::max(worst, x);
      lipschitz += row_total(base.u.row(c)) + worst;
    }
    const double fa = train_weights(a, true).objective;
    const double fb = train_weights(b, true).objective;
    CHECK(std::abs(fa - fb) <= lipschitz * delta + 1e-9);
  }
}
