#pragma once

// Factor-once, solve-many SPD solvers: tridiagonal LDL^T, banded Cholesky, and Jacobi-
// preconditioned conjugate gradients for systems too large to factor.

#include <cmath>
#include <concepts>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fracstep/errors.hpp"
#include "fracstep/sparse.hpp"

namespace fracstep {

enum class SpdMethod { Auto, Tridiagonal, BandedCholesky, ConjugateGradient };

template <std::floating_point Real>
class SpdSolver {
 public:
  /// Above this many unknowns Auto switches from banded Cholesky to CG.
  static constexpr int kCholeskyMaxDim = 300 * 300;

  explicit SpdSolver(BasicSparseOperator<Real> op, SpdMethod method = SpdMethod::Auto)
      : op_(std::move(op)), method_(method) {
    if (!op_.symmetric()) throw PreconditionError("SpdSolver: operator is not symmetric");
    const int n = op_.dim();
    bw_ = op_.bandwidth();
    if (method_ == SpdMethod::Auto) {
      if (bw_ <= 1)
        method_ = SpdMethod::Tridiagonal;
      else if (n <= kCholeskyMaxDim)
        method_ = SpdMethod::BandedCholesky;
      else
        method_ = SpdMethod::ConjugateGradient;
    }
    switch (method_) {
      case SpdMethod::Tridiagonal:
        if (bw_ > 1) throw PreconditionError("SpdSolver: operator is not tridiagonal");
        factor_tridiagonal();
        break;
      case SpdMethod::BandedCholesky:
        factor_banded();
        break;
      case SpdMethod::ConjugateGradient:
        inv_diag_.resize(n);
        for (int i = 0; i < n; ++i) {
          const Real d = op_.at(i, i);
          if (!(d > 0)) throw SolverError("SpdSolver: non-positive diagonal");
          inv_diag_[i] = 1 / d;
        }
        break;
      case SpdMethod::Auto:
        break;
    }
  }

  int dim() const { return op_.dim(); }
  SpdMethod method() const { return method_; }
  const BasicSparseOperator<Real>& op() const { return op_; }

  /// Safe to call concurrently: solve() only reads the factorization.
  void solve(std::span<const Real> rhs, std::span<Real> x) const {
    if (static_cast<int>(rhs.size()) != dim() || static_cast<int>(x.size()) != dim())
      throw PreconditionError("SpdSolver::solve: size mismatch");
    switch (method_) {
      case SpdMethod::Tridiagonal:
        solve_tridiagonal(rhs, x);
        return;
      case SpdMethod::BandedCholesky:
        solve_banded(rhs, x);
        return;
      default:
        solve_cg(rhs, x);
        return;
    }
  }

  std::vector<Real> solve(std::span<const Real> rhs) const {
    std::vector<Real> x(rhs.size());
    solve(rhs, x);
    return x;
  }

 private:
  void factor_tridiagonal() {
    const int n = op_.dim();
    d_.resize(n);
    l_.assign(n, Real(0));
    for (int i = 0; i < n; ++i) {
      Real di = op_.at(i, i);
      if (i > 0) {
        const Real a = op_.at(i, i - 1);
        l_[i] = a / d_[i - 1];
        di -= l_[i] * a;
      }
      if (!(di > 0)) throw SolverError("SpdSolver: matrix is not positive definite");
      d_[i] = di;
    }
  }

  void solve_tridiagonal(std::span<const Real> rhs, std::span<Real> x) const {
    const int n = dim();
    for (int i = 0; i < n; ++i) x[i] = rhs[i] - (i > 0 ? l_[i] * x[i - 1] : Real(0));
    for (int i = 0; i < n; ++i) x[i] /= d_[i];
    for (int i = n - 2; i >= 0; --i) x[i] -= l_[i + 1] * x[i + 1];
  }

  // Lower band stored row-wise: L(i, i - k) at band_[i * (bw + 1) + k].
  Real& band(int i, int j) { return band_[static_cast<std::size_t>(i) * (bw_ + 1) + (i - j)]; }
  Real band(int i, int j) const {
    return band_[static_cast<std::size_t>(i) * (bw_ + 1) + (i - j)];
  }

  void factor_banded() {
    const int n = op_.dim();
    band_.assign(static_cast<std::size_t>(n) * (bw_ + 1), Real(0));
    const auto offsets = op_.row_offsets();
    const auto cols = op_.columns();
    const auto vals = op_.values();
    for (int i = 0; i < n; ++i)
      for (int k = offsets[i]; k < offsets[i + 1]; ++k)
        if (cols[k] <= i) band(i, cols[k]) = vals[k];
    for (int i = 0; i < n; ++i) {
      const int lo = std::max(0, i - bw_);
      for (int j = lo; j <= i; ++j) {
        Real s = band(i, j);
        const int kl = std::max(lo, j - bw_);
        for (int k = kl; k < j; ++k) s -= band(i, k) * band(j, k);
        if (j < i) {
          band(i, j) = s / band(j, j);
        } else {
          if (!(s > 0)) throw SolverError("SpdSolver: matrix is not positive definite");
          band(i, i) = std::sqrt(s);
        }
      }
    }
  }

  void solve_banded(std::span<const Real> rhs, std::span<Real> x) const {
    const int n = dim();
    for (int i = 0; i < n; ++i) {
      Real s = rhs[i];
      for (int k = std::max(0, i - bw_); k < i; ++k) s -= band(i, k) * x[k];
      x[i] = s / band(i, i);
    }
    for (int i = n - 1; i >= 0; --i) {
      Real s = x[i];
      for (int k = i + 1; k <= std::min(n - 1, i + bw_); ++k) s -= band(k, i) * x[k];
      x[i] = s / band(i, i);
    }
  }

  void solve_cg(std::span<const Real> rhs, std::span<Real> x) const {
    const int n = dim();
    const Real tol = std::max(Real(1e-12), 100 * std::numeric_limits<Real>::epsilon());
    std::vector<Real> r(rhs.begin(), rhs.end());
    std::vector<Real> z(n), p(n), q(n);
    std::fill(x.begin(), x.end(), Real(0));
    Real bnorm = 0;
    for (Real v : r) bnorm += v * v;
    bnorm = std::sqrt(bnorm);
    if (bnorm == 0) return;
    for (int i = 0; i < n; ++i) z[i] = inv_diag_[i] * r[i];
    p = z;
    Real rz = 0;
    for (int i = 0; i < n; ++i) rz += r[i] * z[i];
    for (int it = 0; it < 10 * n + 100; ++it) {
      op_.apply(p, q);
      Real pq = 0;
      for (int i = 0; i < n; ++i) pq += p[i] * q[i];
      if (!(pq > 0)) throw SolverError("SpdSolver: CG breakdown");
      const Real a = rz / pq;
      Real rnorm = 0;
      for (int i = 0; i < n; ++i) {
        x[i] += a * p[i];
        r[i] -= a * q[i];
        rnorm += r[i] * r[i];
      }
      if (std::sqrt(rnorm) <= tol * bnorm) return;
      Real rz_new = 0;
      for (int i = 0; i < n; ++i) {
        z[i] = inv_diag_[i] * r[i];
        rz_new += r[i] * z[i];
      }
      const Real beta = rz_new / rz;
      rz = rz_new;
      for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    throw SolverError("SpdSolver: CG did not converge");
  }

  BasicSparseOperator<Real> op_;
  SpdMethod method_;
  int bw_ = 0;
  std::vector<Real> d_, l_;   // tridiagonal LDL^T
  std::vector<Real> band_;    // banded Cholesky factor
  std::vector<Real> inv_diag_;
};

}  // namespace fracstep
