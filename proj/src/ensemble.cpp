#include "survbeta/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "survbeta/error.hpp"

namespace survbeta {

std::string_view to_string(PrototypeMode mode) {
  return mode == PrototypeMode::Mean ? "mean" : "nadaraya-watson";
}

std::vector<Subsample> generate_subsamples(const Dataset& ds, std::size_t m_count, std::size_t k_neighbors,
                                           std::uint64_t seed, const SubsampleOptions& options) {
  const std::size_t n = ds.size();
  if (m_count == 0) throw InvalidInput("ensemble needs at least one subsample");
  if (k_neighbors == 0 || k_neighbors > n) throw InvalidInput("subsample size must lie in [1, n]");
  if (options.taus.empty()) throw InvalidInput("at least one Beran bandwidth is required");

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> centers;
  if (m_count <= n) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = 0; i < m_count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(perm[i], perm[pick(rng)]);
    }
    centers.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(m_count));
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t i = 0; i < m_count; ++i) centers.push_back(pick(rng));
  }

  std::uniform_int_distribution<std::size_t> pick_family(0, kAllKernelFamilies.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_tau(0, options.taus.size() - 1);
  std::vector<Subsample> out;
  out.reserve(m_count);
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t center : centers) {
    for (std::size_t i = 0; i < n; ++i) dist[i] = {squared_distance(ds.features(center), ds.features(i)), i};
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_neighbors), dist.end());
    std::vector<std::size_t> members(k_neighbors);
    for (std::size_t i = 0; i < k_neighbors; ++i) members[i] = dist[i].second;
    std::sort(members.begin(), members.end());
    const KernelFamily family = kAllKernelFamilies[pick_family(rng)];
    const double tau = options.taus[pick_tau(rng)];
    out.push_back(Subsample{std::move(members), Kernel(family, tau), options.eta});
  }
  return out;
}

Vector prototype(const Subsample& s, const Dataset& ds, std::span<const double> x) {
  if (x.size() != ds.dim()) throw InvalidInput("query dimension does not match the dataset");
  Vector dist(s.indices.size());
  for (std::size_t j = 0; j < s.indices.size(); ++j) dist[j] = squared_distance(x, ds.features(s.indices[j]));
  const Vector mu = weights_from_sq_distances(Kernel(s.kernel.family(), s.eta), dist);
  Vector e(ds.dim(), 0.0);
  for (std::size_t j = 0; j < s.indices.size(); ++j) {
    if (mu[j] == 0.0) continue;
    const auto xj = ds.features(s.indices[j]);
    for (std::size_t c = 0; c < e.size(); ++c) e[c] += mu[j] * xj[c];
  }
  return e;
}

Vector mean_prototype(const Subsample& s, const Dataset& ds) {
  if (s.indices.empty()) throw InvalidInput("subsample is empty");
  Vector e(ds.dim(), 0.0);
  for (std::size_t i : s.indices) {
    const auto xi = ds.features(i);
    for (std::size_t c = 0; c < e.size(); ++c) e[c] += xi[c];
  }
  for (double& c : e) c /= static_cast<double>(s.indices.size());
  return e;
}

void check_simplex(std::span<const double> v, std::size_t m) {
  if (v.size() != m) throw InvalidInput("weight vector length does not match the ensemble size");
  double total = 0.0;
  for (double x : v) {
    if (!(x >= -1e-12)) throw InvalidInput("weight vector has a negative entry");
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidInput("weight vector does not sum to one");
}

EnsembleModel::EnsembleModel(Dataset train, std::vector<Subsample> subsamples, double w, double epsilon, Vector v,
                             PrototypeMode mode, Standardizer standardizer)
    : train_(std::move(train)),
      subsamples_(std::move(subsamples)),
      w_(w),
      epsilon_(epsilon),
      v_(std::move(v)),
      mode_(mode),
      standardizer_(std::move(standardizer)) {
  if (subsamples_.empty()) throw InvalidInput("ensemble needs at least one subsample");
  if (standardizer_.mean.size() != train_.dim()) throw InvalidInput("standardizer dimension mismatch");
  set_attention(w_, epsilon_, v_);
  learners_.reserve(subsamples_.size());
  for (const auto& s : subsamples_) {
    for (std::size_t i : s.indices) {
      if (i >= train_.size()) throw InvalidInput("subsample index out of range");
    }
    if (!(s.eta > 0.0)) throw InvalidInput("prototype bandwidth must be positive");
    learners_.emplace_back(train_, s.indices, s.kernel);
    mean_prototypes_.push_back(mean_prototype(s, train_));
  }
}

void EnsembleModel::set_attention(double w, double epsilon, Vector v) {
  if (!(w > 0.0) || !std::isfinite(w)) throw InvalidInput("attention temperature w must be positive");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InvalidInput("contamination epsilon must lie in [0, 1]");
  check_simplex(v, subsamples_.size());
  w_ = w;
  epsilon_ = epsilon;
  v_ = std::move(v);
}

Vector EnsembleModel::to_model_space(std::span<const double> x) const { return standardizer_.transform(x); }

Vector EnsembleModel::prototype_sq_distances(std::span<const double> z) const {
  Vector d(size());
  for (std::size_t k = 0; k < size(); ++k) {
    d[k] = mode_ == PrototypeMode::Mean ? squared_distance(z, mean_prototypes_[k])
                                        : squared_distance(z, prototype(subsamples_[k], train_, z));
  }
  return d;
}

Vector EnsembleModel::attention_from_model_space(std::span<const double> z) const {
  Vector gamma = softmax_neg_scaled(prototype_sq_distances(z), w_);
  for (std::size_t k = 0; k < gamma.size(); ++k) gamma[k] = (1.0 - epsilon_) * gamma[k] + epsilon_ * v_[k];
  return gamma;
}

Vector EnsembleModel::attention_weights(std::span<const double> x) const {
  return attention_from_model_space(to_model_space(x));
}

std::vector<StepSurvivalFunction> EnsembleModel::weak_sfs(std::span<const double> x) const {
  const Vector z = to_model_space(x);
  std::vector<StepSurvivalFunction> out;
  out.reserve(size());
  for (const auto& learner : learners_) out.push_back(learner.sf(z));
  return out;
}

StepSurvivalFunction EnsembleModel::predict_sf(std::span<const double> x) const {
  const Vector z = to_model_space(x);
  std::vector<StepSurvivalFunction> sfs;
  sfs.reserve(size());
  for (const auto& learner : learners_) sfs.push_back(learner.sf(z));
  return mix(sfs, attention_from_model_space(z));
}

double EnsembleModel::predict_expected_time(std::span<const double> x) const {
  const Vector z = to_model_space(x);
  const Vector gamma = attention_from_model_space(z);
  double t = 0.0;
  for (std::size_t k = 0; k < size(); ++k) t += gamma[k] * expected_time(learners_[k].sf(z));
  return t;
}

Vector EnsembleModel::predict_expected_times(const Dataset& ds) const {
  Vector out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) out[i] = predict_expected_time(ds.features(i));
  return out;
}

Vector attention_weights(const EnsembleModel& model, std::span<const double> x) { return model.attention_weights(x); }

StepSurvivalFunction predict_sf(const EnsembleModel& model, std::span<const double> x) { return model.predict_sf(x); }

double predict_expected_time(const EnsembleModel& model, std::span<const double> x) {
  return model.predict_expected_time(x);
}

StepSurvivalFunction bagging_predict_sf(std::span<const BeranModel> weak_models, std::span<const double> x) {
  if (weak_models.empty()) throw InvalidInput("bagging needs at least one weak model");
  std::vector<StepSurvivalFunction> sfs;
  sfs.reserve(weak_models.size());
  for (const auto& m : weak_models) sfs.push_back(m.sf(x));
  const Vector uniform(weak_models.size(), 1.0 / static_cast<double>(weak_models.size()));
  return mix(sfs, uniform);
}

}  // namespace survbeta
