#pragma once

// Convolution quadrature generated by BDF-k, k = 1..6, with optional initial correction.
//
// The discrete derivative is  dbar^a phi^n = tau^-a sum_{j<=n} b_j phi^{n-j}  where b_j are the
// power-series coefficients of delta(z)^a, delta(z) = sum_{l=1}^k (1 - z)^l / l. Each step solves
//   (tau^-a b_0 M + A) U^n = M f^n + tau^-a M (b_0 v - sum_{j>=1} b_j (U^{n-j} - v)) + c^n,
// and the correction c^n is nonzero only for n <= k - 1:
//   c^n = a_n (M f(0) - A v) + sum_{l=1}^{k-2} b_{l,n} tau^l M f^(l)(0).

#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fracstep/mesh_fem.hpp"
#include "fracstep/problem.hpp"
#include "fracstep/trajectory.hpp"

namespace fracstep {

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  template <std::floating_point Real>
  Real as() const {
    return static_cast<Real>(num) / static_cast<Real>(den);
  }
  friend bool operator==(const Rational&, const Rational&) = default;
};

inline constexpr int kMaxBdfOrder = 6;

/// Coefficients p_0..p_k of delta(z) = sum_{l=1}^k (1 - z)^l / l in lowest terms.
std::vector<Rational> bdf_symbol(int k);

/// b_0..b_N, without the tau^-a factor. Throws PreconditionError outside
/// 0 < alpha <= 1, 1 <= k <= 6, N >= 0.
template <std::floating_point Real>
std::vector<Real> cq_weights(Real alpha, int k, int N);

/// Starting-step correction coefficients for BDF-k.
struct CorrectionTable {
  /// a_n^{(k)}, 1 <= n <= k-1.
  static Rational a(int k, int n);
  /// b_{l,n}^{(k)}, 1 <= l <= k-2, 1 <= n <= k-1.
  static Rational b(int k, int l, int n);
};

/// Correction coefficients in the form the stepper consumes; b[l-1][n-1]. Long double so the
/// extended-precision stepper does not inherit double rounding.
struct CorrectionCoefficients {
  std::vector<long double> a;
  std::vector<std::vector<long double>> b;

  static CorrectionCoefficients bdf(int k);
  static CorrectionCoefficients zero(int k);
};

struct CqOptions : StepperOptions {
  /// Replaces the table coefficients when corrected = true (used by property tests).
  std::optional<CorrectionCoefficients> correction;
};

/// Fully discrete CQ-BDFk solution on t_n = n T / N, U^0 = v_h.
/// corrected = true requires every source time factor to have k-1 derivatives at t = 0.
template <std::floating_point Real>
Trajectory<Real> solve_cq(const ProblemSpec& spec, const FemOperators& ops, FemKind fem,
                          std::span<const Real> v_h, int k, int N, bool corrected,
                          const CqOptions& options = {});

/// Correction vector c^n of the corrected scheme (zero vector for n >= k).
template <std::floating_point Real>
std::vector<Real> cq_correction(const ProblemSpec& spec, const FemOperators& ops, FemKind fem,
                                std::span<const Real> v_h, int k, int n, double tau,
                                const CorrectionCoefficients& coeffs);

}  // namespace fracstep
