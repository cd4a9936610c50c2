#pragma once

// Compressed-row sparse matrices for the finite element operators.

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <span>
#include <vector>

#include "fracstep/errors.hpp"

namespace fracstep {

template <std::floating_point Real = double>
class BasicSparseOperator {
 public:
  struct Entry {
    int row;
    int col;
    Real value;
  };

  BasicSparseOperator() = default;

  /// Duplicate (row, col) pairs are summed. Column indices within a row end up sorted.
  static BasicSparseOperator from_triplets(int dim, std::vector<Entry> entries) {
    for (const auto& e : entries)
      if (e.row < 0 || e.row >= dim || e.col < 0 || e.col >= dim)
        throw PreconditionError("from_triplets: index out of range");
    // Stable, so duplicates are summed in insertion order and (i,j), (j,i) stay bitwise equal.
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    BasicSparseOperator op;
    op.dim_ = dim;
    op.offsets_.assign(dim + 1, 0);
    for (std::size_t k = 0; k < entries.size();) {
      const Entry& head = entries[k];
      Real sum = 0;
      while (k < entries.size() && entries[k].row == head.row && entries[k].col == head.col)
        sum += entries[k++].value;
      op.cols_.push_back(head.col);
      op.vals_.push_back(sum);
      ++op.offsets_[head.row + 1];
    }
    for (int i = 0; i < dim; ++i) op.offsets_[i + 1] += op.offsets_[i];
    op.symmetric_ = op.check_symmetric();
    return op;
  }

  static BasicSparseOperator diagonal(std::span<const Real> d) {
    std::vector<Entry> e;
    e.reserve(d.size());
    for (std::size_t i = 0; i < d.size(); ++i)
      e.push_back({static_cast<int>(i), static_cast<int>(i), d[i]});
    return from_triplets(static_cast<int>(d.size()), std::move(e));
  }

  static BasicSparseOperator identity(int dim) {
    std::vector<Real> ones(dim, Real(1));
    return diagonal(ones);
  }

  int dim() const { return dim_; }
  std::size_t nonzeros() const { return vals_.size(); }
  bool symmetric() const { return symmetric_; }

  std::span<const int> row_offsets() const { return offsets_; }
  std::span<const int> columns() const { return cols_; }
  std::span<const Real> values() const { return vals_; }

  Real at(int i, int j) const {
    const auto first = cols_.begin() + offsets_[i];
    const auto last = cols_.begin() + offsets_[i + 1];
    const auto it = std::lower_bound(first, last, j);
    return (it != last && *it == j) ? vals_[it - cols_.begin()] : Real(0);
  }

  /// y = A x
  void apply(std::span<const Real> x, std::span<Real> y) const {
    for (int i = 0; i < dim_; ++i) {
      Real s = 0;
      for (int k = offsets_[i]; k < offsets_[i + 1]; ++k) s += vals_[k] * x[cols_[k]];
      y[i] = s;
    }
  }

  std::vector<Real> apply(std::span<const Real> x) const {
    std::vector<Real> y(dim_);
    apply(x, y);
    return y;
  }

  /// y += s A x
  void apply_add(Real s, std::span<const Real> x, std::span<Real> y) const {
    for (int i = 0; i < dim_; ++i) {
      Real acc = 0;
      for (int k = offsets_[i]; k < offsets_[i + 1]; ++k) acc += vals_[k] * x[cols_[k]];
      y[i] += s * acc;
    }
  }

  /// x^T A x
  Real quadratic_form(std::span<const Real> x) const {
    Real s = 0;
    for (int i = 0; i < dim_; ++i) {
      Real row = 0;
      for (int k = offsets_[i]; k < offsets_[i + 1]; ++k) row += vals_[k] * x[cols_[k]];
      s += x[i] * row;
    }
    return s;
  }

  /// max |i - j| over stored entries.
  int bandwidth() const {
    int bw = 0;
    for (int i = 0; i < dim_; ++i)
      for (int k = offsets_[i]; k < offsets_[i + 1]; ++k) bw = std::max(bw, std::abs(i - cols_[k]));
    return bw;
  }

  bool is_diagonal() const { return bandwidth() == 0; }

  std::vector<Real> row_sums() const {
    std::vector<Real> s(dim_, Real(0));
    for (int i = 0; i < dim_; ++i)
      for (int k = offsets_[i]; k < offsets_[i + 1]; ++k) s[i] += vals_[k];
    return s;
  }

  /// a * this + b * other.
  BasicSparseOperator combine(Real a, const BasicSparseOperator& other, Real b) const {
    if (other.dim_ != dim_) throw PreconditionError("combine: dimension mismatch");
    std::vector<Entry> e;
    e.reserve(nonzeros() + other.nonzeros());
    append_scaled(e, a);
    other.append_scaled(e, b);
    return from_triplets(dim_, std::move(e));
  }

  template <std::floating_point To>
  BasicSparseOperator<To> cast() const {
    std::vector<typename BasicSparseOperator<To>::Entry> e;
    e.reserve(nonzeros());
    for (int i = 0; i < dim_; ++i)
      for (int k = offsets_[i]; k < offsets_[i + 1]; ++k)
        e.push_back({i, cols_[k], static_cast<To>(vals_[k])});
    return BasicSparseOperator<To>::from_triplets(dim_, std::move(e));
  }

 private:
  void append_scaled(std::vector<Entry>& e, Real s) const {
    for (int i = 0; i < dim_; ++i)
      for (int k = offsets_[i]; k < offsets_[i + 1]; ++k) e.push_back({i, cols_[k], s * vals_[k]});
  }

  bool check_symmetric() const {
    for (int i = 0; i < dim_; ++i)
      for (int k = offsets_[i]; k < offsets_[i + 1]; ++k)
        if (at(cols_[k], i) != vals_[k]) return false;
    return true;
  }

  int dim_ = 0;
  std::vector<int> offsets_{0};
  std::vector<int> cols_;
  std::vector<Real> vals_;
  bool symmetric_ = true;
};

using SparseOperator = BasicSparseOperator<double>;

}  // namespace fracstep
