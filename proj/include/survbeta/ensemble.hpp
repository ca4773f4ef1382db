#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "survbeta/beran.hpp"
#include "survbeta/core.hpp"
#include "survbeta/data.hpp"
#include "survbeta/kernel.hpp"
#include "survbeta/step_function.hpp"

namespace survbeta {

enum class PrototypeMode { NadarayaWatson, Mean };

std::string_view to_string(PrototypeMode mode);

/// Training indices of one weak learner, the kernel shared by its Beran
/// estimator and its prototype weights, and the prototype bandwidth eta.
struct Subsample {
  std::vector<std::size_t> indices;
  Kernel kernel;
  double eta = 1.0;
};

struct SubsampleOptions {
  /// Beran bandwidths; each subsample draws one uniformly.
  Vector taus = {1.0};
  /// Prototype bandwidth shared by every subsample.
  double eta = 1.0;
};

/// M subsamples, each the K records nearest (Euclidean, ties by lower index) to
/// a randomly drawn center. Centers are drawn without replacement when M <= n.
/// Every subsample draws its kernel family uniformly from the four families.
std::vector<Subsample> generate_subsamples(const Dataset& ds, std::size_t m_count, std::size_t k_neighbors,
                                           std::uint64_t seed, const SubsampleOptions& options = {});

/// Nadaraya-Watson prototype e(A_k, x) = sum_j mu_k(x, x_j) x_j with mu_k from
/// the subsample's kernel family at bandwidth eta.
Vector prototype(const Subsample& s, const Dataset& ds, std::span<const double> x);

/// Arithmetic mean of the subsample's feature vectors.
Vector mean_prototype(const Subsample& s, const Dataset& ds);

/// Fitted ensemble of Beran estimators with contaminated-softmax aggregation
///
///   gamma_k(x) = (1 - eps) softmax_k(-||x - e_k(x)||^2 / w) + eps v_k.
///
/// `train` holds the records in model space (after standardization); public
/// prediction methods take raw feature vectors and apply the standardizer.
class EnsembleModel {
 public:
  EnsembleModel(Dataset train, std::vector<Subsample> subsamples, double w, double epsilon, Vector v,
                PrototypeMode mode, Standardizer standardizer);

  std::size_t size() const { return learners_.size(); }
  const Dataset& train() const { return train_; }
  const std::vector<Subsample>& subsamples() const { return subsamples_; }
  const BeranModel& learner(std::size_t k) const { return learners_[k]; }
  double w() const { return w_; }
  double epsilon() const { return epsilon_; }
  const Vector& v() const { return v_; }
  PrototypeMode prototype_mode() const { return mode_; }
  const Standardizer& standardizer() const { return standardizer_; }

  /// Replaces (w, eps, v) after validating them.
  void set_attention(double w, double epsilon, Vector v);

  Vector to_model_space(std::span<const double> x) const;

  /// ||z - e_k(z)||^2 for every learner, z already in model space.
  Vector prototype_sq_distances(std::span<const double> z) const;

  Vector attention_weights(std::span<const double> x) const;
  std::vector<StepSurvivalFunction> weak_sfs(std::span<const double> x) const;
  StepSurvivalFunction predict_sf(std::span<const double> x) const;
  double predict_expected_time(std::span<const double> x) const;
  /// Expected times for every record of a raw-space dataset.
  Vector predict_expected_times(const Dataset& ds) const;

 private:
  Vector attention_from_model_space(std::span<const double> z) const;

  Dataset train_;
  std::vector<Subsample> subsamples_;
  std::vector<BeranModel> learners_;
  std::vector<Vector> mean_prototypes_;
  double w_;
  double epsilon_;
  Vector v_;
  PrototypeMode mode_;
  Standardizer standardizer_;
};

/// Validates that v is a probability vector of length m (tolerance 1e-9).
void check_simplex(std::span<const double> v, std::size_t m);

Vector attention_weights(const EnsembleModel& model, std::span<const double> x);
StepSurvivalFunction predict_sf(const EnsembleModel& model, std::span<const double> x);
double predict_expected_time(const EnsembleModel& model, std::span<const double> x);

/// Plain bagging: the uniform mean of the weak survival functions.
StepSurvivalFunction bagging_predict_sf(std::span<const BeranModel> weak_models, std::span<const double> x);

}  // namespace survbeta
