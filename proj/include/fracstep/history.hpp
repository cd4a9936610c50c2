#pragma once

// Discrete history convolutions  H_m = sum_{i<m} w_{m-i} x_i  over stored vectors x_0, x_1, ...
//
// Every time stepper spends almost all of its time here: the sum has m terms at step m, so a
// run of N steps costs O(N^2 dim). Two kernels evaluate it:
//   Serial   straightforward per-step sum, kept as the reference implementation;
//   Blocked  for steps m0..m0+B-1 the far part (i < m0) is one product of a B x m0 Toeplitz
//            block of weights with the stored history, so each stored vector is read once per
//            block instead of once per step. In double precision the product goes to BLAS
//            dgemm; otherwise the dimension is split into chunks over OpenMP threads. The near
//            part (m0 <= i < m) is added per step, chunked over OpenMP threads.

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <span>
#include <type_traits>
#include <vector>

#include "fracstep/errors.hpp"

namespace fracstep {

namespace detail {
/// far = toeplitz * history with toeplitz rows x m0 and history m0 x dim, all row-major.
void far_product(int rows, int m0, int dim, const double* toeplitz, const double* history,
                 double* far);
}  // namespace detail

enum class HistoryKernel { Serial, Blocked };

template <std::floating_point Real>
class HistorySum {
 public:
  static constexpr int kDefaultBlock = 64;
  static constexpr int kChunk = 256;

  /// weights[j] multiplies x_{m-j}; weights[0] is never used.
  HistorySum(std::vector<Real> weights, int dim, HistoryKernel kernel = HistoryKernel::Blocked,
             int block = kDefaultBlock)
      : weights_(std::move(weights)), dim_(dim), kernel_(kernel), block_(std::max(1, block)) {
    if (dim_ < 0) throw PreconditionError("HistorySum: negative dimension");
  }

  int dim() const { return dim_; }
  int size() const { return size_; }
  HistoryKernel kernel() const { return kernel_; }

  void reserve(int steps) { data_.reserve(static_cast<std::size_t>(steps) * dim_); }

  void push(std::span<const Real> x) {
    if (static_cast<int>(x.size()) != dim_) throw PreconditionError("HistorySum: size mismatch");
    data_.insert(data_.end(), x.begin(), x.end());
    ++size_;
  }

  std::span<const Real> operator[](int i) const {
    return {data_.data() + static_cast<std::size_t>(i) * dim_, static_cast<std::size_t>(dim_)};
  }

  /// out = sum_{i < size()} weights[size() - i] x_i
  void evaluate(std::span<Real> out) {
    const int m = size_;
    if (m >= static_cast<int>(weights_.size()))
      throw PreconditionError("HistorySum: history longer than the weight table");
    if (kernel_ == HistoryKernel::Serial) {
      evaluate_serial(out);
      return;
    }
    const int m0 = (m / block_) * block_;
    if (far_start_ != m0) fill_far(m0);
    const Real* far = far_.data() + static_cast<std::size_t>(m - m0) * dim_;
    const int chunks = (dim_ + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(static) if (static_cast<long>(dim_) * (m - m0) > 32768)
    for (int c = 0; c < chunks; ++c) {
      const int lo = c * kChunk, hi = std::min(dim_, lo + kChunk);
      for (int k = lo; k < hi; ++k) out[k] = far[k];
      for (int i = m0; i < m; ++i) {
        const Real w = weights_[m - i];
        const Real* x = data_.data() + static_cast<std::size_t>(i) * dim_;
        for (int k = lo; k < hi; ++k) out[k] += w * x[k];
      }
    }
  }

  /// Reference kernel, independent of the blocking state.
  void evaluate_serial(std::span<Real> out) const {
    const int m = size_;
    std::fill(out.begin(), out.end(), Real(0));
    for (int i = 0; i < m; ++i) {
      const Real w = weights_[m - i];
      const Real* x = data_.data() + static_cast<std::size_t>(i) * dim_;
      for (int k = 0; k < dim_; ++k) out[k] += w * x[k];
    }
  }

 private:
  // far_[r] = sum_{i < m0} weights[m0 + r - i] x_i for the rows r the weight table covers.
  void fill_far(int m0) {
    const int rows = std::min(block_, static_cast<int>(weights_.size()) - m0);
    far_.assign(static_cast<std::size_t>(block_) * dim_, Real(0));
    if (m0 == 0 || rows <= 0) {
      far_start_ = m0;
      return;
    }
    if constexpr (std::is_same_v<Real, double>) {
      toeplitz_.resize(static_cast<std::size_t>(rows) * m0);
      for (int r = 0; r < rows; ++r)
        for (int i = 0; i < m0; ++i)
          toeplitz_[static_cast<std::size_t>(r) * m0 + i] = weights_[m0 + r - i];
      detail::far_product(rows, m0, dim_, toeplitz_.data(), data_.data(), far_.data());
    } else {
      const int chunks = (dim_ + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(static) if (static_cast<long>(dim_) * m0 > 32768)
      for (int c = 0; c < chunks; ++c) {
        const int lo = c * kChunk, hi = std::min(dim_, lo + kChunk);
        for (int i = 0; i < m0; ++i) {
          const Real* x = data_.data() + static_cast<std::size_t>(i) * dim_;
          const Real* w = weights_.data() + (m0 - i);
          for (int r = 0; r < rows; ++r) {
            Real* f = far_.data() + static_cast<std::size_t>(r) * dim_;
            const Real wr = w[r];
            for (int k = lo; k < hi; ++k) f[k] += wr * x[k];
          }
        }
      }
    }
    far_start_ = m0;
  }

  std::vector<Real> weights_;
  int dim_;
  HistoryKernel kernel_;
  int block_;
  int size_ = 0;
  std::vector<Real> data_;
  std::vector<Real> far_;
  std::vector<Real> toeplitz_;
  int far_start_ = -1;
};

}  // namespace fracstep
