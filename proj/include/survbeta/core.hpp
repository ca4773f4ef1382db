#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace survbeta {

using Vector = std::vector<double>;

/// Dense row-major matrix. Rows are exposed as spans so feature vectors can be
/// passed around without copies.
class RowMatrix {
 public:
  RowMatrix() = default;
  RowMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// One observation (x_i, delta_i, T_i). `event` is true for an observed
/// (uncensored) event time.
struct SurvivalRecord {
  Vector features;
  double time = 0.0;
  bool event = false;
};

/// Ordered collection of records sharing one feature dimension.
///
/// Construction validates every record: finite features of equal length and a
/// finite nonnegative time. Whether at least one event is present is checked by
/// the operations that need comparable pairs (see require_event()).
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<SurvivalRecord> records);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::size_t dim() const { return dim_; }

  const SurvivalRecord& operator[](std::size_t i) const { return records_[i]; }
  const std::vector<SurvivalRecord>& records() const { return records_; }
  auto begin() const { return records_.begin(); }
  auto end() const { return records_.end(); }

  std::span<const double> features(std::size_t i) const { return records_[i].features; }

  bool has_event() const;
  std::size_t event_count() const;

  /// Throws DegenerateInput when no record is uncensored.
  void require_event() const;

  /// Records at the given positions, in the given order.
  Dataset subset(std::span<const std::size_t> indices) const;

 private:
  std::vector<SurvivalRecord> records_;
  std::size_t dim_ = 0;
};

double squared_distance(std::span<const double> a, std::span<const double> b);

/// splitmix64 mix of (seed, index); used to give every task of a batch run an
/// independent, order-free seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace survbeta
