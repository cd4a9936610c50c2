#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "fracstep/errors.hpp"
#include "fracstep/spectral_reference.hpp"

using namespace fracstep;

namespace {

constexpr double kPi = std::numbers::pi;

double gk(auto f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 6, 1e-14);
}

double sine1d(int m, double x) { return std::numbers::sqrt2 * std::sin(m * kPi * x); }

// Duhamel convolution int_0^t g(s) (t-s)^(a-1) E_{a,a}(-lambda (t-s)^a) ds by tanh-sinh.
double duhamel(double alpha, double lambda, double t, auto g) {
  const MittagLeffler<double> e(alpha, alpha);
  boost::math::quadrature::tanh_sinh<double> ts;
  auto f = [&](double s, double tc) {
    // tc = t - s measured from the right endpoint without cancellation
    const double r = tc > 0 ? tc : t - s;
    return g(s) * std::pow(r, alpha - 1) * e(-lambda * std::pow(r, alpha));
  };
  return ts.integrate(f, 0.0, t, 1e-13);
}

ProblemSpec interval_problem(double alpha, Field v) {
  ProblemSpec p;
  p.domain = DomainKind::Interval;
  p.alpha = alpha;
  p.initial = std::move(v);
  return p;
}

}  // namespace

TEST(EigenCoeffs, Examples) {
  const auto sine = eigen_coeffs(SineMode{1}, DomainKind::Interval, 8).dense();
  EXPECT_EQ(sine[0], 1.0);
  for (int m = 1; m < 8; ++m) EXPECT_EQ(sine[m], 0.0);

  const auto dirac = eigen_coeffs(DiracPoint{0.5}, DomainKind::Interval, 4);
  EXPECT_NEAR(dirac(2), 0.0, 1e-15);
  EXPECT_NEAR(dirac(1), std::numbers::sqrt2, 1e-15);

  const auto bubble = eigen_coeffs(Bubble1D{}, DomainKind::Interval, 4);
  EXPECT_NEAR(bubble(1), 4 * std::numbers::sqrt2 / std::pow(kPi, 3), 1e-15);
  EXPECT_NEAR(bubble(1), 0.182442, 1e-6);
  EXPECT_EQ(bubble(2), 0.0);
}

TEST(EigenCoeffs, ClosedFormsMatchQuadrature) {
  const int M = 24;
  const std::vector<Field> fields{ConstantField{2.0}, Bubble1D{}, XSin2PiX{}, SineMode{3, 0, 0.5}};
  for (const auto& f : fields) {
    const auto c = eigen_coeffs(f, DomainKind::Interval, M);
    for (int m = 1; m <= M; ++m) {
      const double q = gk([&](double x) { return field_value(f, x) * sine1d(m, x); }, 0, 1);
      EXPECT_NEAR(c(m), q, 1e-13) << field_name(f) << " m=" << m;
    }
  }
}

TEST(EigenCoeffs, SquareData) {
  const int M = 12;
  const auto bubble = eigen_coeffs(Bubble2D{}, DomainKind::UnitSquare, M);
  const auto b1 = eigen_coeffs(Bubble1D{}, DomainKind::Interval, M);
  for (int m = 1; m <= M; ++m)
    for (int n = 1; n <= M; ++n) EXPECT_DOUBLE_EQ(bubble(m, n), b1(m) * b1(n));

  // Line integral of 2 sin(m pi x) sin(n pi y) over the boundary of [1/4, 3/4]^2.
  const auto line = eigen_coeffs(DiracLine{}, DomainKind::UnitSquare, M);
  for (int m = 1; m <= M; ++m)
    for (int n = 1; n <= M; ++n) {
      auto phi = [&](double x, double y) { return 2 * std::sin(m * kPi * x) * std::sin(n * kPi * y); };
      const double q = gk([&](double s) { return phi(s, 0.25) + phi(s, 0.75); }, 0.25, 0.75) +
                       gk([&](double s) { return phi(0.25, s) + phi(0.75, s); }, 0.25, 0.75);
      EXPECT_NEAR(line(m, n), q, 1e-13) << m << "," << n;
    }
  const auto dense = line.dense();
  EXPECT_DOUBLE_EQ(dense[2 * M + 5], line(3, 6));
}

TEST(EigenCoeffs, Rejections) {
  EXPECT_THROW(eigen_coeffs(NodalField{{1, 2}}, DomainKind::Interval, 4), PreconditionError);
  EXPECT_THROW(eigen_coeffs(DiracLine{}, DomainKind::Interval, 4), PreconditionError);
  EXPECT_THROW(eigen_coeffs(Bubble1D{}, DomainKind::UnitSquare, 4), PreconditionError);
  EXPECT_THROW(eigen_coeffs(SineMode{1, 2}, DomainKind::Interval, 4), PreconditionError);
}

TEST(ExactSolution, SingleModeHomogeneous) {
  // E_{1/2,1}(z) = exp(z^2) erfc(-z)
  for (double t : {1e-4, 0.01, 0.1, 0.5}) {
    const auto u = exact_solution(interval_problem(0.5, SineMode{1}), t, 4);
    const double z = -kPi * kPi * std::sqrt(t);
    EXPECT_NEAR(u.coeffs()[0], std::exp(z * z) * std::erfc(-z), 1e-13) << t;
    EXPECT_EQ(u.coeffs()[1], 0.0);
    EXPECT_NEAR(u.value(0.3), u.coeffs()[0] * sine1d(1, 0.3), 1e-15);
  }
  for (double t : {0.01, 0.2}) {
    const auto u = exact_solution(interval_problem(1.0, SineMode{1}), t, 2);
    EXPECT_NEAR(u.coeffs()[0], std::exp(-kPi * kPi * t), 1e-14);
  }
}

TEST(ExactSolution, InitialLayerAsymptotics) {
  // The next term is relatively pi^2 t^a Gamma(1+a)/Gamma(1+2a), so t must make pi^2 t^a small.
  for (auto [alpha, t0] : {std::pair{0.3, 1e-12}, std::pair{0.5, 1e-6}, std::pair{0.8, 1e-6}}) {
    for (double t : {t0, t0 / 100}) {
      const auto u = exact_solution(interval_problem(alpha, SineMode{1}), t, 1);
      const double predicted = -kPi * kPi * std::pow(t, alpha) / std::tgamma(alpha + 1);
      EXPECT_LT(std::abs((u.coeffs()[0] - 1) / predicted - 1), 0.01) << alpha << " " << t;
    }
  }
}

TEST(ExactSolution, ConstantSourceDegeneratesToFractionalIntegral) {
  ProblemSpec p = interval_problem(0.5, ZeroField{});
  p.source.push_back({PowerTime{1.0, 0.0}, SineMode{1}});
  const double t = 0.3;
  const auto u = exact_solution(p, t, 2);
  const MittagLeffler<double> e(0.5, 1.5);
  EXPECT_NEAR(u.coeffs()[0], std::pow(t, 0.5) * e(-kPi * kPi * std::sqrt(t)), 1e-14);
  const ModalResponse<double> r(0.5, PowerTime{1.0, 0.0});
  EXPECT_NEAR(r(0.0, t), std::pow(t, 0.5) / std::tgamma(1.5), 1e-15);
  EXPECT_NEAR(r(kPi * kPi, t), duhamel(0.5, kPi * kPi, t, [](double) { return 1.0; }), 1e-11);
}

TEST(ModalResponse, PowerSourceMatchesDuhamelQuadrature) {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> ua(0.1, 0.95), ug(-0.5, 2.0), ul(0.0, 3.0), ut(0.01, 1.0);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const double alpha = ua(rng), gamma = ug(rng), lambda = std::pow(10.0, ul(rng)), t = ut(rng);
    const ModalResponse<double> r(alpha, PowerTime{1.0, gamma});
    const double oracle = duhamel(alpha, lambda, t, [&](double s) { return std::pow(s, gamma); });
    const double rel = std::abs(r(lambda, t) - oracle) / std::abs(oracle);
    worst = std::max(worst, rel);
    EXPECT_LE(rel, 1e-8) << alpha << " " << gamma << " " << lambda << " " << t;
  }
  RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(ModalResponse, ExpMinusOneMatchesDuhamelQuadrature) {
  for (double alpha : {0.3, 0.7}) {
    for (double lambda : {1.0, 50.0, 2000.0}) {
      const ModalResponse<double> r(alpha, ExpMinusOneTime{2.0});
      const double oracle = 2 * duhamel(alpha, lambda, 1.0, [](double s) { return std::expm1(s); });
      EXPECT_NEAR(r(lambda, 1.0) / oracle, 1.0, 1e-10) << alpha << " " << lambda;
    }
  }
}

TEST(SeriesField, GridEvaluationMatchesPointwise) {
  ProblemSpec p;
  p.domain = DomainKind::UnitSquare;
  p.initial = DiracLine{};
  const auto u = exact_solution(p, 0.05, 32);
  const std::vector<double> xs{0.1, 0.25, 0.6}, ys{0.3, 0.75};
  const auto grid = u.values_on_grid(xs, ys);
  for (std::size_t j = 0; j < ys.size(); ++j)
    for (std::size_t i = 0; i < xs.size(); ++i)
      EXPECT_NEAR(grid[j * xs.size() + i], u.value(xs[i], ys[j]), 1e-12);

  const auto u1 = exact_solution(interval_problem(0.5, XSin2PiX{}), 0.1, 16);
  const auto g1 = u1.values_on_grid(xs);
  for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_NEAR(g1[i], u1.value(xs[i]), 1e-14);
}

TEST(SeriesField, TruncationDoublingSelfCheck) {
  ProblemSpec p;
  p.domain = DomainKind::UnitSquare;
  p.initial = DiracLine{};
  const double t = 0.1;
  auto center = [](const SeriesField& u) { return u.value(0.5, 0.5); };
  const double v = converged_series_value(p, t, center, 1e-9);
  EXPECT_GT(v, 0.0);
  EXPECT_THROW(converged_series_value(p, 1e-4, center, 1e-15, 8, 16), SelfCheckError);
}

TEST(L2ErrorVsSeries, ParsevalMatchesElementQuadrature1D) {
  const Mesh mesh = Mesh::interval(16);
  const auto g = l2_project(mesh, Field{XSin2PiX{}});
  const auto u = exact_solution(interval_problem(0.5, XSin2PiX{}), 0.05, 256);
  const double parseval = l2_error_vs_series(g, u);
  const double quad = l2_error_vs_function(
      g, [&](double x, double) { return u.value(x); }, 4);
  EXPECT_NEAR(parseval, quad, 1e-9 * quad + 1e-12);
}

TEST(L2ErrorVsSeries, ParsevalMatchesElementQuadrature2D) {
  const Mesh mesh = Mesh::unit_square(8);
  const auto g = l2_project(mesh, Field{Bubble2D{}});
  ProblemSpec p;
  p.domain = DomainKind::UnitSquare;
  p.initial = Bubble2D{};
  const auto u = exact_solution(p, 0.02, 64);
  const double parseval = l2_error_vs_series(g, u);
  const double quad = l2_error_vs_function(
      g, [&](double x, double y) { return u.value(x, y); }, 2);
  EXPECT_NEAR(parseval, quad, 1e-7 * quad);

  // Zero discrete field: error equals the series norm.
  GridFunction zero{mesh, std::vector<double>(mesh.num_interior(), 0.0)};
  EXPECT_NEAR(l2_error_vs_series(zero, u), std::sqrt(u.l2_norm_squared()), 1e-14);
}

TEST(GeneralizedEigen, ClosedForms1D) {
  const int n = 40;
  const double h = 1.0 / n;
  const FemOperators ops(Mesh::interval(n));
  const auto sg = generalized_eigen(ops.stiffness, ops.mass);
  const auto lm = generalized_eigen(ops.stiffness, ops.lumped_mass);
  for (int m = 1; m < n; ++m) {
    const double c = std::cos(m * kPi * h);
    EXPECT_NEAR(sg.values[m - 1] / (6 / (h * h) * (1 - c) / (2 + c)), 1.0, 1e-12) << m;
    EXPECT_NEAR(lm.values[m - 1] / (2 / (h * h) * (1 - c)), 1.0, 1e-12) << m;
  }
  for (std::size_t i = 1; i < sg.values.size(); ++i) EXPECT_LT(sg.values[i - 1], sg.values[i]);
  EXPECT_GT(sg.values[0], 0.0);

  // M-orthonormality residual.
  double worst = 0;
  std::vector<double> Mv(n - 1);
  for (int i = 0; i < n - 1; ++i) {
    ops.mass.apply(std::span<const double>(sg.vectors.column(i), n - 1), Mv);
    for (int j = 0; j < n - 1; ++j) {
      double s = 0;
      for (int k = 0; k < n - 1; ++k) s += sg.vectors.column(j)[k] * Mv[k];
      worst = std::max(worst, std::abs(s - (i == j ? 1.0 : 0.0)));
    }
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(GeneralizedEigen, DimensionCap) {
  const FemOperators ops(Mesh::unit_square(24));
  EXPECT_THROW(generalized_eigen(ops.stiffness, ops.mass), PreconditionError);
}

TEST(SemidiscreteExact, OneByOne) {
  const FemOperators ops(Mesh::interval(2));
  ProblemSpec p = interval_problem(0.6, NodalField{{1.0}});
  const std::vector<double> v{0.7};
  const auto u = semidiscrete_exact_1d<double>(p, ops, FemKind::Galerkin, v);
  ASSERT_EQ(u.rank(), 1);
  EXPECT_NEAR(u.eigenvalues()[0], 12.0, 1e-13);
  const MittagLeffler<double> e(0.6, 1.0);
  for (double t : {0.01, 0.3, 1.0})
    EXPECT_NEAR(u.value(t)[0], e(-12 * std::pow(t, 0.6)) * 0.7, 1e-14);
  EXPECT_NEAR(u.value(0.0)[0], 0.7, 1e-15);

  const auto lm = semidiscrete_exact_1d<double>(p, ops, FemKind::LumpedMass, v);
  EXPECT_NEAR(lm.eigenvalues()[0], 8.0, 1e-13);
}

TEST(SemidiscreteExact, InitialValueAndPrecisions) {
  const Mesh mesh = Mesh::interval(50);
  const FemOperators ops(mesh);
  ProblemSpec p = interval_problem(0.5, XSin2PiX{});
  p.source.push_back({ExpMinusOneTime{1.0}, Bubble1D{}});
  const auto v = ritz_project(mesh, Field{XSin2PiX{}}).values;
  const auto ud = semidiscrete_exact_1d<double>(p, ops, FemKind::Galerkin, v);
  const std::vector<long double> vl(v.begin(), v.end());
  const auto ul = semidiscrete_exact_1d<long double>(p, ops, FemKind::Galerkin, vl);
  const auto u0 = ud.value(0.0);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(u0[i], v[i], 1e-13);
  const auto a = ud.value(0.7);
  const auto b = ul.value(0.7L);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(a[i], static_cast<double>(b[i]), 1e-13);
}

TEST(SemidiscreteExact, ConvergesToContinuousSolution) {
  ProblemSpec p = interval_problem(0.5, SineMode{1});
  double prev = 0;
  for (int n : {16, 32, 64}) {
    const Mesh mesh = Mesh::interval(n);
    const FemOperators ops(mesh);
    const auto v = ritz_project(mesh, p.initial).values;
    const auto uh = semidiscrete_exact_1d<double>(p, ops, FemKind::Galerkin, v);
    const double err = l2_error_vs_series(GridFunction{mesh, uh.value(0.5)}, exact_solution(p, 0.5, 4));
    if (prev > 0) {
      EXPECT_NEAR(std::log2(prev / err), 2.0, 0.1) << n;
    }
    prev = err;
  }
}

TEST(KrylovReference, MatchesDiscreteEigenIn1D) {
  const Mesh mesh = Mesh::interval(64);
  const FemOperators ops(mesh);
  ProblemSpec p = interval_problem(0.4, ZeroField{});
  p.source.push_back({PowerTime{1.0, -0.2}, Bubble1D{}});
  for (FemKind fem : {FemKind::Galerkin, FemKind::LumpedMass}) {
    const std::vector<double> zero(mesh.num_interior(), 0.0);
    const auto exact = semidiscrete_exact_1d<double>(p, ops, fem, zero);
    const auto kry = krylov_reference(0.4, ops, fem, p.source[0], 63);
    for (double t : {0.001, 0.2, 1.0}) {
      const auto a = exact.value(t), b = kry.value(t);
      double diff = 0, norm = 0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        diff = std::max(diff, std::abs(a[i] - b[i]));
        norm = std::max(norm, std::abs(a[i]));
      }
      EXPECT_LE(diff, 1e-11 * norm) << t;
    }
  }
}

TEST(KrylovReference, ConvergesWithDimensionOnSquare) {
  const Mesh mesh = Mesh::unit_square(24);
  const FemOperators ops(mesh);
  const SeparableTerm f{ExpMinusOneTime{1.0}, Bubble2D{}};
  const auto coarse = krylov_reference(0.5, ops, FemKind::Galerkin, f, 30);
  const auto fine = krylov_reference(0.5, ops, FemKind::Galerkin, f, 60);
  for (double t : {0.01, 0.5, 1.0}) {
    const auto a = coarse.value(t), b = fine.value(t);
    double diff = 0, norm = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      diff = std::max(diff, std::abs(a[i] - b[i]));
      norm = std::max(norm, std::abs(b[i]));
    }
    EXPECT_LE(diff, 1e-9 * norm) << t;
  }
}
