#pragma once

// Random instance generators and independent reference implementations used
// as oracles by the unit and acceptance tests. Nothing here calls into the
// library's numerical code except to build inputs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "survbeta/core.hpp"
#include "survbeta/step_function.hpp"

namespace testsupport {

using survbeta::Dataset;
using survbeta::StepSurvivalFunction;
using survbeta::SurvivalRecord;
using survbeta::Vector;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t uniform_int(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// n records in [-2, 2]^d. With `integer_times` the times are drawn from
/// {1..10} so ties are common.
inline Dataset random_dataset(std::mt19937_64& rng, std::size_t n, std::size_t d, double censor_prob,
                              bool integer_times = false) {
  std::vector<SurvivalRecord> records;
  std::bernoulli_distribution censored(censor_prob);
  for (std::size_t i = 0; i < n; ++i) {
    SurvivalRecord r;
    for (std::size_t c = 0; c < d; ++c) r.features.push_back(uniform(rng, -2.0, 2.0));
    r.time = integer_times ? static_cast<double>(uniform_int(rng, 1, 10)) : uniform(rng, 0.1, 10.0);
    r.event = !censored(rng);
    records.push_back(std::move(r));
  }
  return Dataset(std::move(records));
}

/// Same as random_dataset but guarantees at least one event.
inline Dataset random_dataset_with_event(std::mt19937_64& rng, std::size_t n, std::size_t d, double censor_prob,
                                         bool integer_times = false) {
  while (true) {
    Dataset ds = random_dataset(rng, n, d, censor_prob, integer_times);
    if (ds.has_event()) return ds;
  }
}

inline std::vector<double> distinct_times(const Dataset& ds) {
  std::vector<double> t;
  for (const auto& r : ds) t.push_back(r.time);
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

/// Points where two step functions of the dataset's times can differ: every
/// distinct time, midpoints between them, and one point beyond the last.
inline std::vector<double> probe_points(const std::vector<double>& times) {
  std::vector<double> out{0.0};
  for (std::size_t i = 0; i < times.size(); ++i) {
    out.push_back(times[i]);
    if (i + 1 < times.size()) out.push_back(0.5 * (times[i] + times[i + 1]));
  }
  if (!times.empty()) out.push_back(times.back() + 1.0);
  return out;
}

/// Textbook product-limit estimate S(t) = prod_{event times s <= t} (1 - d_s / n_s).
inline double textbook_km(const Dataset& ds, double t) {
  double s = 1.0;
  for (double u : distinct_times(ds)) {
    if (u > t) break;
    double deaths = 0.0;
    double at_risk = 0.0;
    for (const auto& r : ds) {
      if (r.time >= u) at_risk += 1.0;
      if (r.time == u && r.event) deaths += 1.0;
    }
    if (deaths > 0.0) s *= 1.0 - deaths / at_risk;
  }
  return s;
}

/// Straight-line Beran product: records ordered by (time, censored after
/// uncensored), S(t) = prod_{i: t_i <= t} (1 - a_i / (1 - sum_{j<i} a_j))^{delta_i}
/// with the factor dropped once the denominator is exhausted.
inline double direct_beran(const Dataset& ds, const std::vector<double>& alpha, double t) {
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (ds[a].time != ds[b].time) return ds[a].time < ds[b].time;
    return ds[a].event && !ds[b].event;
  });
  // Extended precision and an exact renormalization keep the oracle's own
  // rounding well below the tolerances it is compared at.
  long double total = 0.0L;
  for (double a : alpha) total += a;
  long double s = 1.0L;
  long double cumulative = 0.0L;
  for (std::size_t i : order) {
    if (ds[i].time > t) break;
    const long double a = alpha[i] / total;
    const long double denom = 1.0L - cumulative;
    if (ds[i].event && denom > 1e-12L) s *= std::max(0.0L, 1.0L - a / denom);
    cumulative += a;
  }
  return static_cast<double>(s);
}

/// Harrell's count over all ordered pairs, written without the library.
inline double brute_cindex(const std::vector<double>& pred, const Dataset& ds) {
  double good = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < ds.size(); ++j) {
      if (!ds[i].event || !(ds[i].time < ds[j].time)) continue;
      total += 1.0;
      if (pred[i] < pred[j]) good += 1.0;
    }
  }
  return good / total;
}

inline std::size_t brute_pair_count(const Dataset& ds) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < ds.size(); ++j) n += ds[i].event && ds[i].time < ds[j].time;
  }
  return n;
}

/// Random valid survival function with `steps` steps.
inline StepSurvivalFunction random_sf(std::mt19937_64& rng, std::size_t steps) {
  Vector times;
  double t = 0.0;
  for (std::size_t i = 0; i < steps; ++i) {
    t += uniform(rng, 0.05, 2.0);
    times.push_back(t);
  }
  Vector values;
  double s = 1.0;
  for (std::size_t i = 0; i < steps; ++i) {
    s *= uniform(rng, 0.5, 1.0);
    values.push_back(s);
  }
  return StepSurvivalFunction(std::move(times), std::move(values));
}

/// Integral of S over [0, t_N] by summing S(midpoint) * width over a fine
/// partition that contains every breakpoint.
inline double integrate_sf(const StepSurvivalFunction& sf) {
  double total = 0.0;
  double prev = 0.0;
  for (double t : sf.times()) {
    const double mid = 0.5 * (prev + t);
    total += sf(mid) * (t - prev);
    prev = t;
  }
  return total;
}

inline bool sf_is_valid(const StepSurvivalFunction& sf, double tol = 0.0) {
  const auto& v = sf.values();
  const auto& t = sf.times();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] < -tol || v[i] > 1.0 + tol) return false;
    if (i > 0 && v[i] > v[i - 1] + tol) return false;
    if (i > 0 && !(t[i] > t[i - 1])) return false;
  }
  return true;
}

/// Two-sided p-value of Student t with `df` degrees of freedom by composite
/// Simpson integration of the density over [0, |t|].
inline double t_two_sided_p(double t, double df) {
  const double log_norm = std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0) - 0.5 * std::log(df * M_PI);
  auto density = [&](double x) { return std::exp(log_norm - (df + 1.0) / 2.0 * std::log1p(x * x / df)); };
  const double b = std::abs(t);
  const std::size_t n = 200000;
  const double h = b / static_cast<double>(n);
  double s = density(0.0) + density(b);
  for (std::size_t i = 1; i < n; ++i) s += density(static_cast<double>(i) * h) * (i % 2 ? 4.0 : 2.0);
  const double half = s * h / 3.0;
  return std::clamp(1.0 - 2.0 * half, 0.0, 1.0);
}

/// Brute-force minimum of a linear objective over
///   A_eq x = b_eq, A_le x <= b_le, lo <= x <= hi   (all bounds finite)
/// by enumerating every basic solution.
struct DenseLp {
  std::vector<double> c;
  std::vector<std::vector<double>> a_le;
  std::vector<double> b_le;
  std::vector<std::vector<double>> a_eq;
  std::vector<double> b_eq;
  std::vector<double> lo;
  std::vector<double> hi;
};

inline double vertex_enumeration_min(const DenseLp& lp, double tol = 1e-9) {
  const std::size_t n = lp.c.size();
  // Candidate active inequalities: rows, then lower bounds, then upper bounds.
  std::vector<std::vector<double>> rows;
  std::vector<double> rhs;
  for (std::size_t i = 0; i < lp.a_le.size(); ++i) {
    rows.push_back(lp.a_le[i]);
    rhs.push_back(lp.b_le[i]);
  }
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> e(n, 0.0);
    e[j] = 1.0;
    rows.push_back(e);
    rhs.push_back(lp.lo[j]);
    rows.push_back(e);
    rhs.push_back(lp.hi[j]);
  }
  const std::size_t need = n - lp.a_eq.size();
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> pick(need);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t depth) {
    if (depth == need) {
      Eigen::MatrixXd a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      Eigen::VectorXd b(static_cast<Eigen::Index>(n));
      Eigen::Index r = 0;
      for (std::size_t i = 0; i < lp.a_eq.size(); ++i, ++r) {
        for (std::size_t j = 0; j < n; ++j) a(r, static_cast<Eigen::Index>(j)) = lp.a_eq[i][j];
        b(r) = lp.b_eq[i];
      }
      for (std::size_t p : pick) {
        for (std::size_t j = 0; j < n; ++j) a(r, static_cast<Eigen::Index>(j)) = rows[p][j];
        b(r) = rhs[p];
        ++r;
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
      if (lu.rank() < static_cast<Eigen::Index>(n)) return;
      const Eigen::VectorXd x = lu.solve(b);
      for (std::size_t j = 0; j < n; ++j) {
        const double xj = x(static_cast<Eigen::Index>(j));
        if (xj < lp.lo[j] - tol || xj > lp.hi[j] + tol) return;
      }
      for (std::size_t i = 0; i < lp.a_le.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += lp.a_le[i][j] * x(static_cast<Eigen::Index>(j));
        if (s > lp.b_le[i] + tol) return;
      }
      double obj = 0.0;
      for (std::size_t j = 0; j < n; ++j) obj += lp.c[j] * x(static_cast<Eigen::Index>(j));
      best = std::min(best, obj);
      return;
    }
    for (std::size_t p = start; p < rows.size(); ++p) {
      pick[depth] = p;
      rec(p + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

/// Every point of the simplex of dimension m on the lattice with the given
/// number of steps per unit (step 1/steps).
inline void for_each_simplex_grid_point(std::size_t m, std::size_t steps,
                                        const std::function<void(const std::vector<double>&)>& visit) {
  std::vector<std::size_t> counts(m, 0);
  std::vector<double> v(m);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t k, std::size_t left) {
    if (k + 1 == m) {
      counts[k] = left;
      for (std::size_t i = 0; i < m; ++i) v[i] = static_cast<double>(counts[i]) / static_cast<double>(steps);
      visit(v);
      return;
    }
    for (std::size_t c = 0; c <= left; ++c) {
      counts[k] = c;
      rec(k + 1, left - c);
    }
  };
  rec(0, steps);
}

/// Golden-section minimum of a unimodal function on [a, b].
inline double golden_section_min(const std::function<double(double)>& f, double a, double b, double tol = 1e-12) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return std::min({f(a), f(b), f(0.5 * (a + b))});
}

/// One term of a convex piecewise-linear function of z in R^2:
/// max(0, a.z + c), or |a.z + c| when `absolute`.
struct PlanarTerm {
  double a0 = 0.0;
  double a1 = 0.0;
  double c = 0.0;
  bool absolute = false;
};

/// Half-plane g.z <= h.
struct HalfPlane {
  double g0 = 0.0;
  double g1 = 0.0;
  double h = 0.0;
};

inline double planar_value(const std::vector<PlanarTerm>& terms, double z0, double z1) {
  double f = 0.0;
  for (const auto& t : terms) {
    const double x = t.a0 * z0 + t.a1 * z1 + t.c;
    f += t.absolute ? std::abs(x) : std::max(0.0, x);
  }
  return f;
}

/// Exact minimum of a sum of planar terms over a bounded polygon. The minimum
/// of a convex piecewise-linear function sits at a vertex of the arrangement
/// formed by the kink lines and the polygon edges, so every feasible pairwise
/// intersection is evaluated.
inline double arrangement_min(const std::vector<PlanarTerm>& terms, const std::vector<HalfPlane>& polygon) {
  struct Line {
    double a0, a1, c;  // a.z + c = 0
  };
  std::vector<Line> lines;
  for (const auto& t : terms) {
    if (t.a0 != 0.0 || t.a1 != 0.0) lines.push_back({t.a0, t.a1, t.c});
  }
  for (const auto& h : polygon) lines.push_back({h.g0, h.g1, -h.h});
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      const double det = lines[i].a0 * lines[j].a1 - lines[i].a1 * lines[j].a0;
      if (std::abs(det) < 1e-14) continue;
      const double z0 = (-lines[i].c * lines[j].a1 + lines[j].c * lines[i].a1) / det;
      const double z1 = (-lines[i].a0 * lines[j].c + lines[j].a0 * lines[i].c) / det;
      bool inside = true;
      for (const auto& h : polygon) inside = inside && h.g0 * z0 + h.g1 * z1 <= h.h + 1e-12;
      if (inside) best = std::min(best, planar_value(terms, z0, z1));
    }
  }
  return best;
}

}  // namespace testsupport
