#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <stdexcept>

#include <unistd.h>

#include "support.hpp"
#include "survbeta/error.hpp"
#include "survbeta/experiment.hpp"
#include "survbeta/fit.hpp"
#include "survbeta/metrics.hpp"
#include "survbeta/serialize.hpp"

using namespace survbeta;
using namespace testsupport;

namespace {

Dataset small_pool(std::uint64_t seed, std::size_t per_cluster = 60) {
  SyntheticConfig cfg;
  cfg.dim = 2;
  cfg.clusters = {{{-2.0, -2.0}, {2.0, 2.0}}, {{20.0, 20.0}, {30.0, 30.0}}};
  cfg.n_per_cluster = per_cluster;
  cfg.seed = seed;
  return generate_synthetic(cfg);
}

FitConfig small_fit(Variant variant) {
  FitConfig cfg;
  cfg.variant = variant;
  cfg.m_estimators = 4;
  cfg.taus = {0.1, 1.0, 10.0};
  cfg.w_grid = {0.1, 1.0, 10.0};
  cfg.epsilon_grid = {0.5, 1.0};
  cfg.seed = 5;
  return cfg;
}

bool same_predictions(const EnsembleModel& a, const EnsembleModel& b, const Dataset& ds) {
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto sa = a.predict_sf(ds.features(i));
    const auto sb = b.predict_sf(ds.features(i));
    if (sa.times() != sb.times() || sa.values() != sb.values()) return false;
  }
  return true;
}

double best_val(const FitReport& r) {
  double best = -1.0;
  for (const auto& p : r.grid) best = std::max(best, p.val_cindex);
  return best;
}

}  // namespace

TEST_CASE("every variant fits and picks the best validation point") {
  const Dataset pool = small_pool(1);
  for (Variant v : {Variant::BeranSingle, Variant::SurvbetaNoopt, Variant::SurvbetaOpt, Variant::Bagging}) {
    CAPTURE(to_string(v));
    const auto res = fit_survbeta(pool, small_fit(v));
    REQUIRE_FALSE(res.report.grid.empty());
    CHECK(res.report.n_train + res.report.n_val == pool.size());
    CHECK(res.report.grid[res.report.chosen].val_cindex == best_val(res.report));
    const auto& point = res.report.grid[res.report.chosen];
    CHECK(res.model.w() == point.w);
    CHECK(res.model.epsilon() == point.epsilon);
    CHECK(res.model.v() == point.v);
    for (std::size_t i = 0; i < 5; ++i) CHECK(sf_is_valid(res.model.predict_sf(pool.features(i))));
    if (v == Variant::BeranSingle) CHECK(res.model.size() == 1);
    if (v == Variant::SurvbetaNoopt) {
      CHECK(res.model.epsilon() == 0.0);
      CHECK(res.model.v() == Vector(4, 0.25));
    }
    if (v == Variant::Bagging) {
      CHECK(res.model.epsilon() == 1.0);
      CHECK(res.model.v() == Vector(4, 0.25));
    }
  }
}

TEST_CASE("optimized fit is never worse on validation than the uniform-weight points") {
  const Dataset pool = small_pool(2);
  const auto res = fit_survbeta(pool, small_fit(Variant::SurvbetaOpt));
  double uniform_best = -1.0;
  bool has_lp_point = false;
  for (const auto& p : res.report.grid) {
    if (p.epsilon == 0.0) uniform_best = std::max(uniform_best, p.val_cindex);
    has_lp_point = has_lp_point || p.epsilon > 0.0;
  }
  CHECK(has_lp_point);
  CHECK(res.report.grid[res.report.chosen].val_cindex >= uniform_best);
  for (const auto& p : res.report.grid) {
    double total = 0.0;
    for (double x : p.v) total += x;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("one learner with the whole pool is the plain Beran estimator") {
  const Dataset pool = small_pool(3);
  auto cfg = small_fit(Variant::SurvbetaNoopt);
  cfg.m_estimators = 1;
  cfg.k_fraction = 1.0;
  const auto res = fit_survbeta(pool, cfg);
  REQUIRE(res.model.size() == 1);
  for (std::size_t i = 0; i < 10; ++i) {
    const auto z = res.model.to_model_space(pool.features(i));
    const auto direct = beran_sf(res.model.learner(0), z);
    const auto ens = res.model.predict_sf(pool.features(i));
    for (double t : probe_points(distinct_times(pool))) CHECK(std::abs(direct(t) - ens(t)) <= 1e-12);
  }
}

TEST_CASE("fits are deterministic for a seed") {
  const Dataset pool = small_pool(4);
  for (Variant v : {Variant::SurvbetaNoopt, Variant::SurvbetaOpt}) {
    const auto a = fit_survbeta(pool, small_fit(v));
    const auto b = fit_survbeta(pool, small_fit(v));
    CHECK(a.report.chosen == b.report.chosen);
    CHECK(same_predictions(a.model, b.model, pool));
  }
}

TEST_CASE("local tau picks each learner's best leave-one-out bandwidth") {
  const Dataset pool = small_pool(6);
  auto cfg = small_fit(Variant::SurvbetaNoopt);
  cfg.tau_mode = TauMode::Local;
  const auto res = fit_survbeta(pool, cfg);
  for (const auto& p : res.report.grid) CHECK(p.tau == 0.0);
  for (std::size_t k = 0; k < res.model.size(); ++k) {
    const BeranModel& learner = res.model.learner(k);
    std::vector<SurvivalRecord> records;
    for (std::size_t q = 0; q < learner.size(); ++q) {
      const auto f = learner.sorted_features(q);
      records.push_back({Vector(f.begin(), f.end()), learner.sorted_times()[q], learner.sorted_events()[q]});
    }
    const Dataset own(records);
    std::vector<std::size_t> idx(own.size());
    for (std::size_t q = 0; q < idx.size(); ++q) idx[q] = q;
    // Brute force over the tau set with the learner's kernel family.
    double best = -1.0;
    double best_tau = 0.0;
    for (double tau : cfg.taus) {
      const BeranModel m(own, idx, Kernel(learner.kernel().family(), tau));
      Vector pred;
      for (std::size_t i : idx) pred.push_back(expected_time(m.sf(own.features(i), i)));
      const double c = concordance_index(pred, own);
      if (c > best) {
        best = c;
        best_tau = tau;
      }
    }
    CHECK(learner.kernel().bandwidth() == best_tau);
  }
}

TEST_CASE("model serialization round trip is exact") {
  const Dataset pool = small_pool(5);
  const auto res = fit_survbeta(pool, small_fit(Variant::SurvbetaOpt));
  const auto doc = nlohmann::json::parse(model_to_json(res.model).dump());
  const EnsembleModel back = model_from_json(doc);
  CHECK(same_predictions(res.model, back, pool));
  CHECK(back.v() == res.model.v());
  CHECK(back.w() == res.model.w());

  const auto path = std::filesystem::temp_directory_path() / ("survbeta_model_" + std::to_string(::getpid()) + ".json");
  save_model(res.model, path);
  const EnsembleModel loaded = load_model(path);
  std::filesystem::remove(path);
  CHECK(same_predictions(res.model, loaded, pool));

  auto broken = doc;
  broken["version"] = kModelFormatVersion + 1;
  CHECK_THROWS_AS(model_from_json(broken), DataError);
  CHECK_THROWS_AS(model_from_json(nlohmann::json::object()), DataError);

  const auto report = report_to_json(res.report);
  CHECK(report["grid"].size() == res.report.grid.size());
}

TEST_CASE("fit configuration checks") {
  CHECK_THROWS_AS(parse_variant("forest"), ConfigError);
  CHECK(parse_variant("survbeta-opt") == Variant::SurvbetaOpt);
  CHECK(parse_tau_mode("per-learner") == TauMode::PerLearner);
  CHECK(parse_tau_mode("local") == TauMode::Local);
  CHECK(to_string(TauMode::Local) == "local");
  CHECK_THROWS_AS(parse_tau_mode("global"), ConfigError);
  CHECK_THROWS_AS(parse_train_objective("rmse"), ConfigError);
  auto cfg = small_fit(Variant::SurvbetaOpt);
  cfg.w_grid.clear();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_fit(Variant::SurvbetaOpt);
  cfg.epsilon_grid = {1.5};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_fit(Variant::SurvbetaOpt);
  cfg.m_estimators = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("experiment config json is strict and round-trips") {
  ExperimentConfig cfg;
  cfg.repetitions = 3;
  cfg.fit = small_fit(Variant::SurvbetaOpt);
  cfg.fit.tau_mode = TauMode::PerLearner;
  const auto doc = config_to_json(cfg);
  CHECK(config_to_json(config_from_json(doc)) == doc);

  auto extra = doc;
  extra["bogus"] = 1;
  CHECK_THROWS_AS(config_from_json(extra), ConfigError);
  auto nested = doc;
  nested["fit"]["bogus"] = 1;
  CHECK_THROWS_AS(config_from_json(nested), ConfigError);
  auto wrong_type = doc;
  wrong_type["repetitions"] = "many";
  CHECK_THROWS_AS(config_from_json(wrong_type), ConfigError);
}

TEST_CASE("sweep rows and determinism") {
  ExperimentConfig cfg;
  cfg.variants = {Variant::BeranSingle, Variant::SurvbetaNoopt};
  cfg.datasets[0].n_per_cluster = 40;
  cfg.datasets[0].preset = "paper-default";
  cfg.fit = small_fit(Variant::SurvbetaNoopt);
  cfg.axis = "estimators";
  cfg.values = {2.0, 3.0};
  cfg.repetitions = 2;
  cfg.seed = 11;
  const auto a = run_sweep(cfg);
  const auto b = run_sweep(cfg);
  REQUIRE(a.size() == 8);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].cindex == b[i].cindex);
    CHECK(a[i].seed == b[i].seed);
    CHECK(a[i].cindex >= 0.0);
    CHECK(a[i].cindex <= 1.0);
  }
  cfg.axis = "colour";
  CHECK_THROWS_AS(run_sweep(cfg), ConfigError);
}

TEST_CASE("paired comparison matches a direct t statistic") {
  const std::vector<double> a{0.71, 0.65, 0.80, 0.58};
  const std::vector<double> b{0.69, 0.66, 0.75, 0.55};
  std::vector<BenchmarkCell> cells;
  for (std::size_t d = 0; d < a.size(); ++d) {
    cells.push_back({"d" + std::to_string(d), Variant::SurvbetaOpt, a[d], 0.0, 5});
    cells.push_back({"d" + std::to_string(d), Variant::BeranSingle, b[d], 0.0, 5});
  }
  const auto rows = run_compare(cells);
  REQUIRE(rows.size() == 1);
  const auto& row = rows[0];
  double mean = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) mean += a[d] - b[d];
  mean /= 4.0;
  double ss = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) ss += (a[d] - b[d] - mean) * (a[d] - b[d] - mean);
  const double t = mean / std::sqrt(ss / 3.0 / 4.0);
  CHECK(row.datasets == 4);
  CHECK(std::abs(row.mean_difference) == doctest::Approx(std::abs(mean)).epsilon(1e-12));
  CHECK(std::abs(row.t_statistic) == doctest::Approx(std::abs(t)).epsilon(1e-10));
  CHECK(row.p_value == doctest::Approx(t_two_sided_p(t, 3.0)).epsilon(1e-6));
}

TEST_CASE("worker pool stores results by index and rethrows") {
  std::vector<int> out(10, 0);
  run_pool(10, 3, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
  for (std::size_t i = 0; i < 10; ++i) CHECK(out[i] == static_cast<int>(i * i));
  CHECK_THROWS_AS(run_pool(4, 2,
                           [](std::size_t i) {
                             if (i == 2) throw std::runtime_error("boom");
                           }),
                  std::runtime_error);
}
