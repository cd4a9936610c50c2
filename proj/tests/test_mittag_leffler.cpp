#include <cmath>
#include <numbers>
#include <random>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

#include "fracstep/errors.hpp"
#include "fracstep/mittag_leffler.hpp"

namespace {

using fracstep::MittagLeffler;
using fracstep::MlfParams;
using fracstep::MlfRegime;
using fracstep::mlf;

// e^{x^2} erfc(-x) in 50 digits, independent of the library under test.
double e_erfc_oracle(double x) {
  using Big = boost::multiprecision::cpp_bin_float_50;
  const Big z = x;
  return static_cast<double>(exp(z * z) * erfc(-z));
}

TEST(GammaFn, KnownValues) {
  EXPECT_DOUBLE_EQ(fracstep::gamma_fn(1.0), 1.0);
  EXPECT_NEAR(fracstep::gamma_fn(0.5), std::sqrt(std::numbers::pi), 1e-14);
  EXPECT_NEAR(fracstep::gamma_fn(5.0), 24.0, 24.0 * 1e-14);
  EXPECT_NEAR(fracstep::gamma_fn(-0.5), -2.0 * std::sqrt(std::numbers::pi), 1e-13);
}

TEST(GammaFn, PolesThrow) {
  for (double z : {0.0, -1.0, -2.0, -17.0}) EXPECT_THROW(fracstep::gamma_fn(z), fracstep::DomainError);
}

TEST(Mlf, SpecExamples) {
  EXPECT_NEAR(mlf({1.0, 1.0}, 1.0), 2.718281828459045, 1e-15);
  EXPECT_NEAR(mlf({0.7, 1.3}, 0.0), 1.0 / std::tgamma(1.3), 1e-15);
  EXPECT_NEAR(mlf({2.0, 1.0}, -std::pow(std::numbers::pi / 2, 2)), 0.0, 1e-12);
  EXPECT_NEAR(mlf({0.5, 1.0}, -1.0), e_erfc_oracle(-1.0), 1e-15);
  const double far = mlf({0.5, 1.0}, -1e4);
  const double lead = 1.0 / (1e4 * std::tgamma(0.5));
  // k = 2 vanishes (pole of Gamma at beta - 2 alpha = 0); next term is k = 3.
  const double two_term = lead + 1.0 / (1e12 * std::tgamma(-0.5));
  EXPECT_NEAR(far, 5.6419e-5, 1e-9);
  EXPECT_NEAR(far, two_term, 1e-12);
}

TEST(Mlf, HalfOrderMatchesErfcOracle) {
  for (double x : {-0.01, -0.5, -1.0, -2.0, -3.5, -5.0, -8.0, -20.0, -100.0, 0.3, 1.0, 3.0}) {
    const double want = e_erfc_oracle(x);
    EXPECT_NEAR(mlf({0.5, 1.0}, x), want, 1e-13 * std::abs(want)) << "x = " << x;
  }
}

TEST(Mlf, ExponentialAndCosine) {
  for (double x = -30; x <= 5; x += 0.37)
    EXPECT_NEAR(mlf({1.0, 1.0}, x), std::exp(x), 1e-12 * std::max(1.0, std::exp(x)));
  for (double x = 0; x <= 20; x += 0.21)
    EXPECT_NEAR(mlf({2.0, 1.0}, -x * x), std::cos(x), 1e-10) << "x = " << x;
  // E_{1,2}(x) = (e^x - 1) / x
  EXPECT_NEAR(mlf({1.0, 2.0}, -3.0), (std::exp(-3.0) - 1.0) / -3.0, 1e-15);
}

TEST(Mlf, RejectsBadParameters) {
  EXPECT_THROW(mlf({0.0, 1.0}, -1.0), fracstep::DomainError);
  EXPECT_THROW(mlf({-0.5, 1.0}, -1.0), fracstep::DomainError);
  EXPECT_THROW(mlf({0.5, 1.0}, std::nan("")), fracstep::DomainError);
  EXPECT_THROW(mlf({0.5, 1.0}, 1e4), std::overflow_error);
}

TEST(Mlf, RecurrenceOnRandomPoints) {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> ua(0.02, 0.98);
  std::uniform_real_distribution<double> ub(0.05, 3.0);
  std::uniform_real_distribution<double> ux(-100.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double a = ua(rng);
    const double b = ub(rng);
    const double x = ux(rng);
    const double lhs = mlf({a, b}, x);
    const double rhs = x * mlf({a, a + b}, x) + 1.0 / std::tgamma(b);
    ASSERT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs)))
        << "alpha=" << a << " beta=" << b << " x=" << x;
  }
}

TEST(Mlf, RegimeConsistencyAtSwitchRadii) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ua(0.05, 0.98);
  std::uniform_real_distribution<double> ub(0.1, 2.5);
  for (int i = 0; i < 100; ++i) {
    const double a = ua(rng);
    const double b = ub(rng);
    MittagLeffler<double> e(a, b);
    const double x0 = -e.series_radius();
    double cond = 0;
    const double ser = e.series(x0, &cond);
    // A badly conditioned series hands over to the integral before r0.
    if (cond <= 64) {
      EXPECT_NEAR(ser, e.integral(x0), 1e-10 * std::abs(ser)) << a << " " << b;
    }
    EXPECT_NEAR(e(x0 * (1 - 1e-12)), e(x0 * (1 + 1e-12)), 1e-10 * std::abs(ser)) << a << " " << b;

    const double x1 = -e.asymptotic_radius();
    const double integ = e.integral(x1);
    bool converged = false;
    const double asym = e.asymptotic(x1, &converged);
    if (converged) {
      EXPECT_NEAR(asym, integ, 1e-10 * std::abs(integ)) << a << " " << b;
    }
    const double inside = e(x1 * (1 - 1e-12));
    const double outside = e(x1 * (1 + 1e-12));
    EXPECT_NEAR(inside, outside, 1e-10 * std::abs(integ)) << a << " " << b;
  }
}

TEST(Mlf, AsymptoticRegimeIsUsedFarOut) {
  MittagLeffler<double> e(0.5, 1.0);
  EXPECT_EQ(e.regime(-0.5), MlfRegime::Series);
  EXPECT_EQ(e.regime(-5.0), MlfRegime::Integral);
  EXPECT_EQ(e.regime(-50.0), MlfRegime::Asymptotic);
  EXPECT_EQ(MittagLeffler<double>(1.0, 1.0).regime(-50.0), MlfRegime::ClosedForm);
}

TEST(Mlf, MonotoneAndPositiveOnNegativeAxis) {
  for (double a : {0.1, 0.3, 0.5, 0.7, 0.9, 0.99}) {
    MittagLeffler<double> e(a, 1.0);
    double prev = e(0.0);
    EXPECT_DOUBLE_EQ(prev, 1.0);
    for (double x = -0.01; x >= -1e4; x *= 1.05) {
      const double v = e(x);
      EXPECT_GT(v, 0.0) << a << " " << x;
      EXPECT_LE(v, 1.0);
      EXPECT_LT(v, prev) << a << " " << x;
      prev = v;
    }
  }
}

TEST(Mlf, ExtendedPrecisionAgreesWithDouble) {
  for (double a : {0.25, 0.5, 0.75})
    for (double x : {-0.3, -4.0, -12.0, -40.0, -700.0}) {
      const long double ext = MittagLeffler<long double>(a, 1.0L)(x);
      EXPECT_NEAR(static_cast<double>(ext), mlf({a, 1.0}, x), 1e-13 * std::abs(static_cast<double>(ext)));
    }
  // Known identity in extended precision: E_{1/2,1}(-1) = e erfc(1).
  using Big = boost::multiprecision::cpp_bin_float_50;
  const long double want = static_cast<long double>(exp(Big(1)) * erfc(Big(1)));
  EXPECT_NEAR(MittagLeffler<long double>(0.5L, 1.0L)(-1.0L), want, 1e-18L);
}

TEST(Mlf, SeriesOnlyRangeForLargeAlpha) {
  // alpha in (1, 2): finite range only.
  EXPECT_NO_THROW(mlf({1.5, 1.0}, -10.0));
  EXPECT_THROW(mlf({1.5, 1.0}, -1e3), fracstep::DomainError);
}

}  // namespace
