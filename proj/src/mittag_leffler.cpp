#include "fracstep/mittag_leffler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fracstep/errors.hpp"

namespace fracstep {
namespace {

template <class Real>
bool is_nonpositive_integer(Real z) {
  return z <= 0 && z == std::floor(z);
}

template <class Real>
bool is_integer(Real z) {
  return z == std::floor(z);
}

// sin(pi z) with exact zeros at the integers.
template <class Real>
Real sinpi(Real z) {
  const Real r = z - 2 * std::round(z / 2);  // r in [-1, 1]
  if (r == std::floor(r)) return Real(0);
  return std::sin(std::numbers::pi_v<Real> * r);
}

template <class Real>
struct Limits {
  static constexpr Real eps = std::numeric_limits<Real>::epsilon();
  // Relative tolerance requested from the quadrature route.
  static constexpr Real quad_tol = std::is_same_v<Real, double> ? Real(2e-14) : Real(2e-17);
  // Acceptable truncation error of the asymptotic expansion relative to the result.
  static constexpr Real asym_tol = 4 * eps;
  // u such that exp(-u) is negligible against the integrand scale.
  static constexpr Real tail_exponent = std::is_same_v<Real, double> ? Real(80) : Real(95);
  static constexpr Real gamma_max = std::is_same_v<Real, double> ? Real(170) : Real(1700);
};

// Above this alpha the exponentially small remainder of the asymptotic expansion on the
// negative axis is no longer negligible at moderate |x|; the integral route is used.
constexpr double kAsymptoticAlphaMax = 0.95;
constexpr int kSeriesTermsMin = 500;
// Cancellation factor sum|t_k| / |sum t_k| above which the series hands over to the integral.
constexpr double kSeriesConditionMax = 64;
constexpr int kAsymptoticTerms = 160;

template <class Real, class F>
Real adaptive_integrate(F f, Real a, Real b) {
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<Real, 31>::integrate(f, a, b, 15, Limits<Real>::quad_tol);
}

// Adaptive integration to an absolute accuracy of quad_tol * scale. A piece that is negligible
// against `scale` stops after one rule instead of resolving its own relative accuracy.
template <class Real, class F>
Real adaptive_integrate_abs(F f, Real a, Real b, Real scale) {
  using boost::math::quadrature::gauss_kronrod;
  Real l1 = 0;
  const Real first = gauss_kronrod<Real, 31>::integrate(f, a, b, 0, Real(0), nullptr, &l1);
  if (!(l1 > 0)) return first;
  const Real tol = std::max(Limits<Real>::quad_tol, Limits<Real>::quad_tol * std::abs(scale) / l1);
  if (tol >= 1) return first;
  return gauss_kronrod<Real, 31>::integrate(f, a, b, 15, tol);
}

}  // namespace

double gamma_fn(double z) {
  if (!std::isfinite(z)) throw DomainError("gamma_fn: non-finite argument");
  if (is_nonpositive_integer(z)) {
    std::ostringstream os;
    os << "gamma_fn: pole at z = " << z;
    throw DomainError(os.str());
  }
  return std::tgamma(z);
}

template <std::floating_point Real>
Real rgamma(Real z) {
  if (is_nonpositive_integer(z)) return Real(0);
  if (z > Limits<Real>::gamma_max) return std::exp(-std::lgamma(z));
  if (z < -Limits<Real>::gamma_max) {
    // 1/Gamma(z) = Gamma(1 - z) sin(pi z) / pi
    return std::exp(std::lgamma(1 - z)) * sinpi(z) / std::numbers::pi_v<Real>;
  }
  return Real(1) / std::tgamma(z);
}

template float rgamma<float>(float);
template double rgamma<double>(double);
template long double rgamma<long double>(long double);

template <std::floating_point Real>
MittagLeffler<Real>::MittagLeffler(Real alpha, Real beta) : alpha_(alpha), beta_(beta) {
  if (!std::isfinite(alpha) || !std::isfinite(beta))
    throw DomainError("mittag_leffler: non-finite parameter");
  if (!(alpha > 0)) throw DomainError("mittag_leffler: alpha must be positive");
  if (alpha > 2) throw DomainError("mittag_leffler: alpha > 2 is not supported");

  series_radius_ = 1 + 2 * alpha_;
  asymptotic_radius_ = std::max(Real(10), std::pow(Real(25), alpha_));

  // Small alpha needs about |x|^{1/alpha} / alpha terms before they decay.
  const int series_terms = std::max(kSeriesTermsMin, static_cast<int>(std::ceil(100 / alpha_)));
  series_rg_.resize(series_terms + 1);
  for (int k = 0; k <= series_terms; ++k) series_rg_[k] = rgamma(alpha_ * k + beta_);

  asym_rg_.assign(1, Real(0));
  asym_env_.assign(1, Real(0));
  for (int k = 1; k <= kAsymptoticTerms; ++k) {
    const Real c = rgamma(beta_ - alpha_ * k);
    // |1/Gamma(beta - alpha k)| <= Gamma(s) / pi for s = 1 - beta + alpha k >= 1; for s < 1 the
    // argument of 1/Gamma is positive and the coefficient has no zeros.
    const Real s = 1 - beta_ + alpha_ * k;
    const Real env = s >= 1 ? std::exp(std::lgamma(s)) / std::numbers::pi_v<Real> : std::abs(c);
    if (!std::isfinite(c) || !std::isfinite(env) || env > Real(1e280)) break;
    asym_rg_.push_back(c);
    asym_env_.push_back(std::max(env, std::abs(c)));
  }
}

template <std::floating_point Real>
bool MittagLeffler<Real>::has_closed_form() const {
  return (alpha_ == 1 || alpha_ == 2) && beta_ >= 1 && is_integer(beta_);
}

template <std::floating_point Real>
Real MittagLeffler<Real>::series(Real x, Real* condition) const {
  const Real tol = Limits<Real>::eps / 8;
  Real sum = series_rg_[0];
  Real abs_sum = std::abs(sum);
  Real power = 1;
  const int terms = static_cast<int>(series_rg_.size()) - 1;
  for (int k = 1; k <= terms; ++k) {
    power *= x;
    const Real term = power * series_rg_[k];
    sum += term;
    abs_sum += std::abs(term);
    if (alpha_ * k + beta_ > 1 && std::abs(term) <= tol * std::abs(sum)) break;
    if (power == 0) break;
  }
  if (condition) *condition = sum != 0 ? abs_sum / std::abs(sum) : std::numeric_limits<Real>::infinity();
  return sum;
}

template <std::floating_point Real>
Real MittagLeffler<Real>::asymptotic(Real x, bool* converged) const {
  // E(x) ~ -sum_{k>=1} x^{-k} / Gamma(beta - alpha k). Truncation is driven by the envelope
  // |x|^-k Gamma(1 - beta + alpha k) / pi of the terms, so that a coefficient close to a
  // zero of 1/Gamma is not mistaken for the smallest term.
  const Real xinv = 1 / x;
  const Real axinv = std::abs(xinv);
  Real power = 1;
  Real scale = 1;
  Real sum = 0;
  Real last = std::numeric_limits<Real>::infinity();
  Real remainder = std::numeric_limits<Real>::infinity();
  for (std::size_t k = 1; k < asym_rg_.size(); ++k) {
    power *= xinv;
    scale *= axinv;
    const Real env = scale * asym_env_[k];
    if (env > last) break;
    remainder = env;
    if (env <= Limits<Real>::eps / 8 * std::abs(sum)) break;
    sum -= power * asym_rg_[k];
    last = env;
  }
  if (converged) {
    *converged = alpha_ < 1 && std::isfinite(remainder) && sum != 0 &&
                 remainder <= Limits<Real>::asym_tol * std::abs(sum);
  }
  return sum;
}

namespace {

// Integral representation for 0 < alpha < 1, beta <= 1, x != 0 (valid for beta < 1 + alpha;
// beta <= 1 keeps the integrand bounded at r = 0):
//   E(x) = int_0^inf K(r) dr  [+ x^{(1-beta)/alpha} exp(x^{1/alpha}) / alpha  if x > 0]
//   K(r) = r^{(1-beta)/alpha} exp(-r^{1/alpha}) (r sin(pi(1-beta)) - x sin(pi(1-beta+alpha)))
//          / (alpha pi (r^2 - 2 r x cos(alpha pi) + x^2))
template <class Real>
Real ml_integral_base(Real alpha, Real beta, Real x) {
  const Real pi = std::numbers::pi_v<Real>;
  const Real scale = 1 / (alpha * pi);
  const Real s1 = sinpi(1 - beta);
  const Real s2 = sinpi(1 - beta + alpha);
  const Real c = std::cos(alpha * pi);
  const Real p = (1 - beta) / alpha;
  const Real inv_alpha = 1 / alpha;

  auto kernel = [&](Real r) -> Real {
    const Real num = r * s1 - x * s2;
    const Real den = (r - x * c) * (r - x * c) + x * x * (1 - c * c);
    return scale * std::pow(r, p) * std::exp(-std::pow(r, inv_alpha)) * num / den;
  };

  const Real upper = std::pow(Limits<Real>::tail_exponent, alpha);
  const Real ax = std::abs(x);
  // r = len w^4 on the first piece removes the r^p endpoint singularity.
  const Real len = std::min(ax, upper);
  auto smoothed = [&](Real w) -> Real {
    const Real w3 = w * w * w;
    return 4 * len * w3 * kernel(len * w3 * w);
  };
  Real total = adaptive_integrate(smoothed, Real(0), Real(1));
  if (ax < upper) total += adaptive_integrate_abs(kernel, ax, upper, total);

  if (x > 0) {
    const Real e = std::pow(x, inv_alpha);
    if (e > std::log(std::numeric_limits<Real>::max()) - 1)
      throw std::overflow_error("mittag_leffler: result overflows for large positive x");
    total += std::pow(x, p) * std::exp(e) / alpha;
  }
  return total;
}

}  // namespace

template <std::floating_point Real>
Real MittagLeffler<Real>::integral(Real x) const {
  if (!(alpha_ < 1)) throw DomainError("mittag_leffler: integral route requires alpha < 1");
  if (x == 0) return series_rg_[0];
  // Lower beta with E_{a,b}(x) = x E_{a,a+b}(x) + 1/Gamma(b) until beta <= 1.
  int steps = 0;
  Real b = beta_;
  while (b > 1) {
    b -= alpha_;
    ++steps;
  }
  Real value = ml_integral_base(alpha_, b, x);
  for (int i = 0; i < steps; ++i) {
    value = (value - rgamma(b)) / x;
    b += alpha_;
  }
  return value;
}

template <std::floating_point Real>
Real MittagLeffler<Real>::closed_form(Real x) const {
  const int b = static_cast<int>(beta_);
  if (alpha_ == 1) {
    if (x > std::log(std::numeric_limits<Real>::max()))
      throw std::overflow_error("mittag_leffler: result overflows for large positive x");
    Real value = std::exp(x);  // E_{1,1}
    for (int j = 1; j < b; ++j) value = (value - rgamma(Real(j))) / x;
    return value;
  }
  // alpha == 2
  Real e1;
  Real e2;
  if (x < 0) {
    const Real s = std::sqrt(-x);
    e1 = std::cos(s);
    e2 = std::sin(s) / s;
  } else {
    const Real s = std::sqrt(x);
    if (s > std::log(std::numeric_limits<Real>::max()))
      throw std::overflow_error("mittag_leffler: result overflows for large positive x");
    e1 = std::cosh(s);
    e2 = std::sinh(s) / s;
  }
  // E_{2,j+2}(x) = (E_{2,j}(x) - 1/Gamma(j)) / x
  Real lo = e1;
  Real hi = e2;
  int j = 1;
  while (j + 1 < b) {
    const Real next = (lo - rgamma(Real(j))) / x;
    lo = hi;
    hi = next;
    ++j;
  }
  return b == 1 ? e1 : hi;
}

template <std::floating_point Real>
MlfRegime MittagLeffler<Real>::regime(Real x) const {
  if (std::abs(x) <= series_radius_) {
    if (alpha_ < 1 && x < 0) {
      Real cond = 0;
      series(x, &cond);
      if (cond > kSeriesConditionMax) return MlfRegime::Integral;
    }
    return MlfRegime::Series;
  }
  if (has_closed_form()) return MlfRegime::ClosedForm;
  if (alpha_ < 1) {
    if (x <= -asymptotic_radius_ && alpha_ <= Real(kAsymptoticAlphaMax)) {
      bool ok = false;
      asymptotic(x, &ok);
      if (ok) return MlfRegime::Asymptotic;
    }
    return MlfRegime::Integral;
  }
  // alpha in (1, 2) or alpha = 1 with non-integer beta: only the series is available.
  // It stays accurate while the largest term exp(|x|^{1/alpha}) is moderate.
  if (std::pow(std::abs(x), 1 / alpha_) <= 9) return MlfRegime::Series;
  throw DomainError("mittag_leffler: argument outside the supported range for this alpha");
}

template <std::floating_point Real>
Real MittagLeffler<Real>::operator()(Real x) const {
  if (!std::isfinite(x)) throw DomainError("mittag_leffler: non-finite argument");
  if (std::abs(x) <= series_radius_) {
    Real cond = 0;
    const Real value = series(x, &cond);
    if (alpha_ < 1 && x < 0 && cond > kSeriesConditionMax) return integral(x);
    return value;
  }
  if (has_closed_form()) return closed_form(x);
  if (alpha_ < 1) {
    if (x <= -asymptotic_radius_ && alpha_ <= Real(kAsymptoticAlphaMax)) {
      bool ok = false;
      const Real value = asymptotic(x, &ok);
      if (ok) return value;
    }
    return integral(x);
  }
  if (std::pow(std::abs(x), 1 / alpha_) <= 9) return series(x);
  throw DomainError("mittag_leffler: argument outside the supported range for this alpha");
}

double mlf(const MlfParams& params, double x) {
  return MittagLeffler<double>(params.alpha, params.beta)(x);
}

template class MittagLeffler<double>;
template class MittagLeffler<long double>;

}  // namespace fracstep
