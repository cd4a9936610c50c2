#pragma once

// Cyclic Jacobi eigensolver for small dense symmetric matrices.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <numeric>
#include <vector>

#include "fracstep/errors.hpp"

namespace fracstep {

/// Row-major square matrix.
template <std::floating_point Real>
struct DenseMatrix {
  int n = 0;
  std::vector<Real> a;

  DenseMatrix() = default;
  explicit DenseMatrix(int size) : n(size), a(static_cast<std::size_t>(size) * size, Real(0)) {}

  Real& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
  Real operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
};

/// rows x cols, column-major: column j is one basis vector.
template <std::floating_point Real>
struct DenseBasis {
  int rows = 0;
  int cols = 0;
  std::vector<Real> data;

  DenseBasis() = default;
  DenseBasis(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, Real(0)) {}

  Real* column(int j) { return data.data() + static_cast<std::size_t>(j) * rows; }
  const Real* column(int j) const { return data.data() + static_cast<std::size_t>(j) * rows; }
};

template <std::floating_point Real>
struct SymmetricEigen {
  std::vector<Real> values;  // ascending
  DenseMatrix<Real> vectors;  // column j belongs to values[j]
};

/// Sweeps until the off-diagonal Frobenius norm is at most tol * ||A||_F (default: a few ulp).
template <std::floating_point Real>
SymmetricEigen<Real> jacobi_eigen(DenseMatrix<Real> a, Real tol = 0) {
  const int n = a.n;
  if (tol <= 0) tol = 4 * std::numeric_limits<Real>::epsilon();
  DenseMatrix<Real> v(n);
  for (int i = 0; i < n; ++i) v(i, i) = 1;

  Real total = 0;
  for (Real x : a.a) total += x * x;
  const Real target = tol * tol * total;
  auto off_norm2 = [&] {
    Real s = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) s += 2 * a(i, j) * a(i, j);
    return s;
  };

  constexpr int kMaxSweeps = 60;
  int sweep = 0;
  for (; sweep < kMaxSweeps && off_norm2() > target; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const Real apq = a(p, q);
        if (apq == 0) continue;
        const Real theta = (a(q, q) - a(p, p)) / (2 * apq);
        const Real t = (theta >= 0 ? 1 : -1) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const Real c = 1 / std::sqrt(t * t + 1);
        const Real s = t * c;
        for (int k = 0; k < n; ++k) {
          const Real akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const Real apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const Real vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (off_norm2() > target) throw SolverError("jacobi_eigen: no convergence");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) < a(j, j); });
  SymmetricEigen<Real> out;
  out.values.resize(n);
  out.vectors = DenseMatrix<Real>(n);
  for (int j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (int i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
  }
  return out;
}

}  // namespace fracstep
