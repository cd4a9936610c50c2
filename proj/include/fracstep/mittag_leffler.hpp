#pragma once

// Two-parameter Mittag-Leffler function E_{a,b}(x) for real arguments.
//
// For 0 < alpha < 1 three regimes are used:
//   |x| <= 1 + 2 alpha          truncated power series  sum x^k / Gamma(alpha k + beta),
//                               unless cancellation on the negative axis is severe
//   x <= -r1 (see below)        asymptotic series       -sum_{k>=1} x^-k / Gamma(beta - alpha k)
//   otherwise                   real-line integral representation (Gorenflo/Loutchko/Luchko)
//                               evaluated by adaptive Gauss-Kronrod, with the beta
//                               recurrence used to bring beta down to at most 1 first.
// alpha = 1 and alpha = 2 use closed forms (exp, cos/sin) plus the beta recurrence for
// integer beta. Other alpha in (1, 2] are only supported inside the series radius.
//
// Everything is templated on the floating type so the reference solutions can run
// in extended precision.

#include <concepts>
#include <vector>

namespace fracstep {

/// Gamma function. Throws DomainError at the poles 0, -1, -2, ...
double gamma_fn(double z);

/// 1 / Gamma(z), equal to 0 at the poles.
template <std::floating_point Real>
Real rgamma(Real z);

struct MlfParams {
  double alpha = 1.0;
  double beta = 1.0;
};

enum class MlfRegime { Series, Asymptotic, Integral, ClosedForm };

template <std::floating_point Real>
class MittagLeffler {
 public:
  MittagLeffler(Real alpha, Real beta);

  Real operator()(Real x) const;

  Real alpha() const { return alpha_; }
  Real beta() const { return beta_; }

  /// Regime operator() would pick for x.
  MlfRegime regime(Real x) const;

  // Individual evaluation routes; exposed for the regime-consistency tests.
  /// Power series. *condition receives sum |t_k| / |sum t_k|.
  Real series(Real x, Real* condition = nullptr) const;
  /// Asymptotic expansion with smallest-term truncation. Sets *converged to whether the
  /// truncation error estimate met the working tolerance.
  Real asymptotic(Real x, bool* converged = nullptr) const;
  Real integral(Real x) const;

  /// Series radius r0 = 1 + 2 alpha.
  Real series_radius() const { return series_radius_; }
  /// Asymptotic threshold r1; asymptotic series is used for x <= -r1 when it converges.
  Real asymptotic_radius() const { return asymptotic_radius_; }

 private:
  Real closed_form(Real x) const;
  bool has_closed_form() const;

  Real alpha_;
  Real beta_;
  Real series_radius_;
  Real asymptotic_radius_;
  std::vector<Real> series_rg_;  // 1 / Gamma(alpha k + beta)
  std::vector<Real> asym_rg_;    // 1 / Gamma(beta - alpha k), index k
  std::vector<Real> asym_env_;   // bound on |asym_rg_[k]|
};

/// Convenience wrapper: E_{alpha,beta}(x).
template <std::floating_point Real>
Real mittag_leffler(Real alpha, Real beta, Real x) {
  return MittagLeffler<Real>(alpha, beta)(x);
}

/// Validating entry point used by the CLI.
double mlf(const MlfParams& params, double x);

extern template class MittagLeffler<double>;
extern template class MittagLeffler<long double>;

}  // namespace fracstep
