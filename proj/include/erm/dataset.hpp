#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "erm/error.hpp"

namespace erm {

using Vector = std::vector<double>;
using Index = std::uint32_t;

/// View of one compressed row: parallel arrays of column indices and values.
struct SparseRow {
  std::span<const Index> index;
  std::span<const double> value;

  std::size_t nnz() const { return index.size(); }

  double dot(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t p = 0; p < index.size(); ++p) s += value[p] * x[index[p]];
    return s;
  }

  double squared_norm() const {
    double s = 0.0;
    for (double v : value) s += v * v;
    return s;
  }

  /// out += alpha * row
  void axpy(double alpha, std::span<double> out) const {
    for (std::size_t p = 0; p < index.size(); ++p) out[index[p]] += alpha * value[p];
  }
};

/// Immutable CSR feature matrix with one label per row.
///
/// Construction validates the storage invariants: at least one row and one
/// column, column indices in range and strictly increasing within a row, no
/// stored zeros, finite values.
class Dataset {
 public:
  Dataset(std::size_t cols, std::vector<std::size_t> row_ptr, std::vector<Index> col_idx,
          std::vector<double> values, Vector labels)
      : cols_(cols),
        row_ptr_(std::move(row_ptr)),
        col_idx_(std::move(col_idx)),
        values_(std::move(values)),
        labels_(std::move(labels)) {
    validate();
  }

  std::size_t rows() const { return labels_.size(); }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  double density() const {
    return static_cast<double>(nnz()) / (static_cast<double>(rows()) * static_cast<double>(cols()));
  }

  SparseRow row(std::size_t i) const {
    const std::size_t b = row_ptr_[i], e = row_ptr_[i + 1];
    return {std::span<const Index>(col_idx_.data() + b, e - b),
            std::span<const double>(values_.data() + b, e - b)};
  }

  double label(std::size_t i) const { return labels_[i]; }
  const Vector& labels() const { return labels_; }
  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<Index>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }

  std::size_t max_row_nnz() const {
    std::size_t best = 0;
    for (std::size_t i = 0; i < rows(); ++i) best = std::max(best, row_ptr_[i + 1] - row_ptr_[i]);
    return best;
  }

  /// Copy with every nonzero row scaled to unit Euclidean norm.
  Dataset normalized_rows() const {
    std::vector<double> v = values_;
    for (std::size_t i = 0; i < rows(); ++i) {
      const double norm = std::sqrt(row(i).squared_norm());
      if (norm == 0.0) continue;
      for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) v[p] /= norm;
    }
    return Dataset(cols_, row_ptr_, col_idx_, std::move(v), labels_);
  }

  /// Copy with a larger feature dimension (no data change).
  Dataset with_cols(std::size_t cols) const {
    return Dataset(cols, row_ptr_, col_idx_, values_, labels_);
  }

 private:
  void validate() const {
    using detail::require;
    require(!labels_.empty(), "dataset must have at least one row");
    require(cols_ >= 1, "dataset must have at least one column");
    require(row_ptr_.size() == labels_.size() + 1, "row_ptr length must be rows + 1");
    require(row_ptr_.front() == 0 && row_ptr_.back() == values_.size(),
            "row_ptr must span the value array");
    require(col_idx_.size() == values_.size(), "index/value length mismatch");
    for (std::size_t i = 0; i < rows(); ++i) {
      require(row_ptr_[i] <= row_ptr_[i + 1], "row_ptr must be nondecreasing");
      for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
        require(col_idx_[p] < cols_, "column index out of range in row " + std::to_string(i));
        require(p == row_ptr_[i] || col_idx_[p - 1] < col_idx_[p],
                "column indices must be strictly increasing in row " + std::to_string(i));
        require(values_[p] != 0.0, "explicit zero stored in row " + std::to_string(i));
        require(std::isfinite(values_[p]), "non-finite value in row " + std::to_string(i));
      }
      require(std::isfinite(labels_[i]), "non-finite label in row " + std::to_string(i));
    }
  }

  std::size_t cols_;
  std::vector<std::size_t> row_ptr_;
  std::vector<Index> col_idx_;
  std::vector<double> values_;
  Vector labels_;
};

/// Incremental row-by-row construction of a Dataset. Zero values are dropped.
class DatasetBuilder {
 public:
  DatasetBuilder() { row_ptr_.push_back(0); }

  /// Entries must be sorted by strictly increasing column.
  void add_row(std::span<const std::pair<Index, double>> entries, double label) {
    for (const auto& [j, v] : entries) {
      if (v == 0.0) continue;
      col_idx_.push_back(j);
      values_.push_back(v);
      max_col_ = std::max<std::size_t>(max_col_, static_cast<std::size_t>(j) + 1);
    }
    row_ptr_.push_back(values_.size());
    labels_.push_back(label);
  }

  void add_dense_row(std::span<const double> x, double label) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (x[j] == 0.0) continue;
      col_idx_.push_back(static_cast<Index>(j));
      values_.push_back(x[j]);
    }
    max_col_ = std::max(max_col_, x.size());
    row_ptr_.push_back(values_.size());
    labels_.push_back(label);
  }

  std::size_t rows() const { return labels_.size(); }

  /// `cols == 0` uses the largest column seen.
  Dataset build(std::size_t cols = 0) && {
    return Dataset(cols == 0 ? max_col_ : cols, std::move(row_ptr_), std::move(col_idx_),
                   std::move(values_), std::move(labels_));
  }

 private:
  std::vector<std::size_t> row_ptr_;
  std::vector<Index> col_idx_;
  std::vector<double> values_;
  Vector labels_;
  std::size_t max_col_ = 0;
};

}  // namespace erm
