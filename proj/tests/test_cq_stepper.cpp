#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "fracstep/cq_stepper.hpp"
#include "fracstep/errors.hpp"
#include "fracstep/spectral_reference.hpp"

using namespace fracstep;

namespace {

ProblemSpec sine_problem(double alpha, Field v, std::vector<SeparableTerm> source = {}) {
  ProblemSpec p;
  p.domain = DomainKind::Interval;
  p.alpha = alpha;
  p.initial = std::move(v);
  p.source = std::move(source);
  return p;
}

template <class Real>
Real m_norm(const FemOperators& ops, FemKind fem, std::span<const Real> a,
            std::span<const Real> b) {
  std::vector<Real> d(a.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a[i] - b[i];
  return std::sqrt(ops.time_mass(fem).template cast<Real>().quadratic_form(d));
}

// Weight b_j as the j-th Taylor coefficient of delta(z)^alpha, by the trapezoidal rule on
// |z| = rho. The aliasing error is about rho^L relative to b_0.
std::vector<double> cauchy_weights(double alpha, int k, int jmax) {
  constexpr int L = 4096;
  const double rho = std::pow(1e-15, 1.0 / L);
  std::vector<std::complex<double>> vals(L);
  for (int s = 0; s < L; ++s) {
    const auto z = std::polar(rho, 2 * std::numbers::pi * s / L);
    std::complex<double> delta = 0;
    for (int l = 1; l <= k; ++l) delta += std::pow(1.0 - z, l) / static_cast<double>(l);
    vals[s] = std::pow(delta, alpha);
  }
  std::vector<double> b(jmax + 1);
  for (int j = 0; j <= jmax; ++j) {
    std::complex<double> acc = 0;
    for (int s = 0; s < L; ++s) acc += vals[s] * std::polar(1.0, -2 * std::numbers::pi * s * j / L);
    b[j] = (acc / static_cast<double>(L)).real() * std::pow(rho, -j);
  }
  return b;
}

}  // namespace

TEST(CqWeights, BdfSymbol) {
  const auto p2 = bdf_symbol(2);
  ASSERT_EQ(p2.size(), 3u);
  EXPECT_EQ(p2[0], (Rational{3, 2}));
  EXPECT_EQ(p2[1], (Rational{-2, 1}));
  EXPECT_EQ(p2[2], (Rational{1, 2}));
  const auto p6 = bdf_symbol(6);
  EXPECT_EQ(p6[0], (Rational{49, 20}));
  EXPECT_EQ(p6[6], (Rational{1, 6}));
  EXPECT_THROW(bdf_symbol(7), PreconditionError);
}

TEST(CqWeights, BackwardEulerHalf) {
  const auto w = cq_weights<double>(0.5, 1, 3);
  EXPECT_DOUBLE_EQ(w[0], 1.0);
  EXPECT_DOUBLE_EQ(w[1], -0.5);
  EXPECT_DOUBLE_EQ(w[2], -0.125);
  EXPECT_DOUBLE_EQ(w[3], -0.0625);
}

TEST(CqWeights, BackwardEulerIsBinomial) {
  for (double alpha : {0.25, 0.5, 0.75}) {
    const auto w = cq_weights<double>(alpha, 1, 1000);
    for (int j = 1; j <= 1000; ++j) {
      // (-1)^j binom(alpha, j) = -alpha Gamma(j - alpha) / (Gamma(1 - alpha) Gamma(j + 1))
      const double ref =
          -alpha * std::exp(std::lgamma(j - alpha) - std::lgamma(1 - alpha) - std::lgamma(j + 1.0));
      ASSERT_NEAR(w[j], ref, 1e-13) << alpha << " " << j;
    }
  }
}

TEST(CqWeights, MatchCauchyIntegral) {
  for (int k = 2; k <= 6; ++k)
    for (double alpha : {0.3, 0.7}) {
      const auto ref = cauchy_weights(alpha, k, 200);
      const auto w = cq_weights<double>(alpha, k, 200);
      for (int j = 0; j <= 200; ++j) ASSERT_NEAR(w[j], ref[j], 1e-11) << k << " " << alpha << " " << j;
    }
}

TEST(CqWeights, AlphaOneGivesBdfCoefficients) {
  for (int k = 1; k <= 6; ++k) {
    const auto p = bdf_symbol(k);
    const auto w = cq_weights<double>(1.0, k, 12);
    for (int j = 0; j <= 12; ++j) {
      const double ref = j <= k ? p[j].as<double>() : 0.0;
      EXPECT_NEAR(w[j], ref, 1e-13) << k << " " << j;
    }
  }
}

TEST(CqWeights, PartialSumsDecay) {
  // sum_j b_j -> delta(1)^alpha = 0; for BDF1 the partial sums are positive and decreasing.
  const auto w = cq_weights<double>(0.4, 1, 2000);
  double s = 0, prev = 2;
  for (double x : w) {
    s += x;
    ASSERT_GT(s, 0.0);
    ASSERT_LT(s, prev);
    prev = s;
  }
  EXPECT_LT(s, 0.05);
}

TEST(CqWeights, Rejections) {
  EXPECT_THROW(cq_weights<double>(0.0, 2, 5), PreconditionError);
  EXPECT_THROW(cq_weights<double>(1.5, 2, 5), PreconditionError);
  EXPECT_THROW(cq_weights<double>(0.5, 0, 5), PreconditionError);
  EXPECT_THROW(cq_weights<double>(0.5, 2, -1), PreconditionError);
}

TEST(CorrectionTable, Consistency) {
  for (int k = 2; k <= 6; ++k) {
    double s = 0;
    for (int n = 1; n < k; ++n) s += CorrectionTable::a(k, n).as<double>();
    EXPECT_NEAR(s, 0.5, 1e-15) << k;
  }
  EXPECT_EQ(CorrectionTable::a(3, 2), (Rational{-5, 12}));
  EXPECT_EQ(CorrectionTable::b(5, 3, 1), (Rational{1, 720}));
  EXPECT_THROW(CorrectionTable::a(2, 2), PreconditionError);
  EXPECT_THROW(CorrectionTable::b(2, 1, 1), PreconditionError);
}

TEST(CqStepper, ScalarDecayBackwardEuler) {
  const Mesh mesh = Mesh::interval(2);  // one unknown
  const FemOperators ops(mesh);
  for (double alpha : {0.1, 0.5, 0.9})
    for (int N : {5, 50, 500}) {
      const auto spec = sine_problem(alpha, ConstantField{1.0});
      const std::vector<double> v{1.0};
      const auto traj = solve_cq<double>(spec, ops, FemKind::Galerkin, v, 1, N, false);
      for (std::size_t n = 1; n < traj.values.size(); ++n) {
        ASSERT_GT(traj.values[n][0], 0.0);
        ASSERT_LT(traj.values[n][0], traj.values[n - 1][0]);
      }
    }
}

TEST(CqStepper, KernelsAgree) {
  const Mesh mesh = Mesh::interval(16);
  const FemOperators ops(mesh);
  const auto spec = sine_problem(0.6, Bubble1D{}, {{PowerTime{1.0, 0.5}, ConstantField{1.0}}});
  const auto v = l2_project(mesh, Bubble1D{}, 2);
  CqOptions serial;
  serial.kernel = HistoryKernel::Serial;
  const auto a = solve_cq<double>(spec, ops, FemKind::Galerkin, v.values, 3, 300, false);
  const auto b = solve_cq<double>(spec, ops, FemKind::Galerkin, v.values, 3, 300, false, serial);
  for (std::size_t i = 0; i < a.final().size(); ++i) EXPECT_NEAR(a.final()[i], b.final()[i], 1e-13);
}

TEST(CqStepper, ZeroCorrectionTableIsUncorrected) {
  const Mesh mesh = Mesh::interval(8);
  const FemOperators ops(mesh);
  const auto spec = sine_problem(0.4, ConstantField{1.0}, {{ConstantTime{2.0}, XSin2PiX{}}});
  const auto v = l2_project(mesh, ConstantField{1.0}, 2);
  CqOptions zero;
  zero.correction = CorrectionCoefficients::zero(4);
  const auto a = solve_cq<double>(spec, ops, FemKind::LumpedMass, v.values, 4, 40, false);
  const auto b = solve_cq<double>(spec, ops, FemKind::LumpedMass, v.values, 4, 40, true, zero);
  ASSERT_EQ(a.values.size(), b.values.size());
  for (std::size_t n = 0; n < a.values.size(); ++n) EXPECT_EQ(a.values[n], b.values[n]);
}

TEST(CqStepper, CorrectionOnlyOnStartingSteps) {
  const Mesh mesh = Mesh::interval(8);
  const FemOperators ops(mesh);
  const auto spec = sine_problem(0.4, ConstantField{1.0}, {{ConstantTime{2.0}, XSin2PiX{}}});
  const auto v = l2_project(mesh, ConstantField{1.0}, 2);
  const auto table = CorrectionCoefficients::bdf(5);
  for (int n = 5; n < 8; ++n) {
    const auto c = cq_correction<double>(spec, ops, FemKind::Galerkin, v.values, 5, n, 0.1, table);
    for (double x : c) EXPECT_EQ(x, 0.0);
  }
  const auto c1 = cq_correction<double>(spec, ops, FemKind::Galerkin, v.values, 5, 1, 0.1, table);
  double norm = 0;
  for (double x : c1) norm += x * x;
  EXPECT_GT(norm, 0.0);
}

TEST(CqStepper, CorrectedNeedsSmoothSource) {
  const Mesh mesh = Mesh::interval(8);
  const FemOperators ops(mesh);
  const auto spec = sine_problem(0.5, ZeroField{}, {{PowerTime{1.0, 0.5}, ConstantField{1.0}}});
  const std::vector<double> v(7, 0.0);
  EXPECT_THROW(solve_cq<double>(spec, ops, FemKind::Galerkin, v, 3, 10, true), PreconditionError);
  EXPECT_NO_THROW(solve_cq<double>(spec, ops, FemKind::Galerkin, v, 3, 10, false));
  const std::vector<double> bad(5, 0.0);
  EXPECT_THROW(solve_cq<double>(spec, ops, FemKind::Galerkin, bad, 3, 10, false),
               PreconditionError);
}

TEST(CqStepper, AlphaNearOneApproachesClassicalBdf) {
  const Mesh mesh = Mesh::interval(10);
  const FemOperators ops(mesh);
  const auto v = l2_project(mesh, SineMode{1}, 2);
  auto p = sine_problem(0.999, SineMode{1});
  p.T = 0.1;
  const auto a = solve_cq<double>(p, ops, FemKind::Galerkin, v.values, 2, 50, false);
  p.alpha = 1.0;
  const auto b = solve_cq<double>(p, ops, FemKind::Galerkin, v.values, 2, 50, false);
  const double diff = m_norm<double>(ops, FemKind::Galerkin, a.final(), b.final());
  const double size = m_norm<double>(ops, FemKind::Galerkin, b.final(), std::vector<double>(9, 0.0));
  EXPECT_LT(diff, 0.02 * size);
}

TEST(CqStepper, CorrectedRatesAgainstSemidiscrete) {
  // Smooth source and nonsmooth initial data: the corrected scheme converges with order k
  // uniformly, measured against the exact semidiscrete solution.
  const Mesh mesh = Mesh::interval(16);
  const FemOperators ops(mesh);
  for (double alpha : {0.3, 0.7})
    for (int k = 1; k <= 5; ++k) {
      const auto spec =
          sine_problem(alpha, ConstantField{1.0}, {{ExpMinusOneTime{1.0}, Bubble1D{}}});
      const auto v = l2_project(mesh, ConstantField{1.0}, 2);
      std::vector<long double> vl(v.values.begin(), v.values.end());
      const auto exact = semidiscrete_exact_1d<long double>(spec, ops, FemKind::Galerkin, vl);
      const auto ref = exact.value(1.0L);
      std::vector<double> err;
      // BDF5 leaves its preasymptotic range later.
      const int N0 = k == 5 ? 80 : 20;
      for (int N : {N0, 2 * N0, 4 * N0}) {
        CqOptions opt;
        opt.keep_all = false;
        const auto traj =
            solve_cq<long double>(spec, ops, FemKind::Galerkin, vl, k, N, k > 1, opt);
        err.push_back(static_cast<double>(m_norm<long double>(ops, FemKind::Galerkin,
                                                              traj.final(), ref)));
      }
      const double rate = std::log2(err[1] / err[2]);
      EXPECT_NEAR(rate, k, 0.3) << "alpha " << alpha << " k " << k << " errors " << err[0] << " "
                                << err[1] << " " << err[2];
    }
}
