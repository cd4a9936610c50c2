#include "fracstep/cq_stepper.hpp"

#include <array>
#include <cmath>
#include <fmt/format.h>
#include <numeric>

#include "fracstep/errors.hpp"
#include "fracstep/linear_solver.hpp"
#include "stepper_common.hpp"

namespace fracstep {

namespace {

Rational reduce(std::int64_t num, std::int64_t den) {
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  return g == 0 ? Rational{0, 1} : Rational{num / g, den / g};
}

Rational add(Rational x, Rational y) {
  return reduce(x.num * y.den + y.num * x.den, x.den * y.den);
}

std::int64_t binomial(int n, int r) {
  std::int64_t c = 1;
  for (int i = 1; i <= r; ++i) c = c * (n - r + i) / i;
  return c;
}

void check_order(int k) {
  if (k < 1 || k > kMaxBdfOrder)
    throw PreconditionError(fmt::format("BDF order {} outside 1..{}", k, kMaxBdfOrder));
}

using R = Rational;

// a_n^{(k)} for k = 2..6, n = 1..k-1
const std::array<std::vector<Rational>, 7> kA = {{
    {},
    {},
    {R{1, 2}},
    {R{11, 12}, R{-5, 12}},
    {R{31, 24}, R{-7, 6}, R{3, 8}},
    {R{1181, 720}, R{-177, 80}, R{341, 240}, R{-251, 720}},
    {R{2837, 1440}, R{-2543, 720}, R{17, 5}, R{-1201, 720}, R{95, 288}},
}};

// b_{l,n}^{(k)} for k = 3..6, l = 1..k-2, n = 1..k-1
const std::array<std::vector<std::vector<Rational>>, 7> kB = {{
    {},
    {},
    {},
    {{R{1, 12}, R{0, 1}}},
    {{R{1, 6}, R{-1, 12}, R{0, 1}}, {R{0, 1}, R{0, 1}, R{0, 1}}},
    {{R{59, 240}, R{-29, 120}, R{19, 240}, R{0, 1}},
     {R{1, 240}, R{-1, 240}, R{0, 1}, R{0, 1}},
     {R{1, 720}, R{0, 1}, R{0, 1}, R{0, 1}}},
    {{R{77, 240}, R{-7, 15}, R{73, 240}, R{-3, 40}, R{0, 1}},
     {R{1, 96}, R{-1, 60}, R{1, 160}, R{0, 1}, R{0, 1}},
     {R{-1, 360}, R{1, 720}, R{0, 1}, R{0, 1}, R{0, 1}},
     {R{0, 1}, R{0, 1}, R{0, 1}, R{0, 1}, R{0, 1}}},
}};

}  // namespace

std::vector<Rational> bdf_symbol(int k) {
  check_order(k);
  std::vector<Rational> p(k + 1, Rational{0, 1});
  for (int l = 1; l <= k; ++l)
    for (int i = 0; i <= l; ++i) {
      const std::int64_t sign = i % 2 == 0 ? 1 : -1;
      p[i] = add(p[i], reduce(sign * binomial(l, i), l));
    }
  return p;
}

// The recurrence loses about three digits over a thousand steps, so it runs one precision up
// and rounds once.
template <class Real>
struct WiderFloat {
  using type = long double;
};
#ifdef __SIZEOF_FLOAT128__
template <>
struct WiderFloat<long double> {
  using type = __float128;
};
#endif

template <std::floating_point Real>
std::vector<Real> cq_weights(Real alpha, int k, int N) {
  check_order(k);
  if (!(alpha > 0 && alpha <= 1)) throw PreconditionError("cq_weights: alpha must lie in (0, 1]");
  if (N < 0) throw PreconditionError("cq_weights: negative N");
  using Wide = typename WiderFloat<Real>::type;
  const auto sym = bdf_symbol(k);
  std::vector<Wide> p(k + 1);
  for (int i = 0; i <= k; ++i) p[i] = static_cast<Wide>(sym[i].num) / static_cast<Wide>(sym[i].den);
  const Wide a = alpha;
  // w = p^alpha:  n p_0 w_n = sum_{j=1}^{min(n,k)} ((alpha + 1) j - n) p_j w_{n-j}
  std::vector<Wide> wide(N + 1);
  wide[0] = std::pow(static_cast<long double>(p[0]), static_cast<long double>(alpha));
  for (int n = 1; n <= N; ++n) {
    Wide s = 0;
    for (int j = 1; j <= std::min(n, k); ++j) s += ((a + 1) * j - n) * p[j] * wide[n - j];
    wide[n] = s / (n * p[0]);
  }
  return {wide.begin(), wide.end()};
}

template std::vector<double> cq_weights(double, int, int);
template std::vector<long double> cq_weights(long double, int, int);

Rational CorrectionTable::a(int k, int n) {
  check_order(k);
  if (n < 1 || n > k - 1) throw PreconditionError("CorrectionTable::a: index out of range");
  return kA[k][n - 1];
}

Rational CorrectionTable::b(int k, int l, int n) {
  check_order(k);
  if (l < 1 || l > k - 2 || n < 1 || n > k - 1)
    throw PreconditionError("CorrectionTable::b: index out of range");
  return kB[k][l - 1][n - 1];
}

CorrectionCoefficients CorrectionCoefficients::bdf(int k) {
  check_order(k);
  CorrectionCoefficients c;
  for (int n = 1; n < k; ++n) c.a.push_back(CorrectionTable::a(k, n).as<long double>());
  for (int l = 1; l <= k - 2; ++l) {
    c.b.emplace_back();
    for (int n = 1; n < k; ++n) c.b.back().push_back(CorrectionTable::b(k, l, n).as<long double>());
  }
  return c;
}

CorrectionCoefficients CorrectionCoefficients::zero(int k) {
  check_order(k);
  CorrectionCoefficients c;
  c.a.assign(k - 1, 0.0);
  c.b.assign(std::max(0, k - 2), std::vector<long double>(k - 1, 0.0L));
  return c;
}

template <std::floating_point Real>
std::vector<Real> cq_correction(const ProblemSpec& spec, const FemOperators& ops, FemKind fem,
                                std::span<const Real> v_h, int k, int n, double tau,
                                const CorrectionCoefficients& coeffs) {
  const int dim = ops.mesh.num_interior();
  std::vector<Real> c(dim, Real(0));
  if (n < 1 || n >= k) return c;
  (void)fem;  // the load vector pairs f with the consistent L2 inner product in both schemes
  const detail::SourceLoads<Real> loads(spec, ops.mesh);
  const Real an = static_cast<Real>(coeffs.a.at(n - 1));
  if (an != 0) {
    const auto A = ops.stiffness.cast<Real>();
    const auto Av = A.apply(v_h);
    for (int i = 0; i < dim; ++i) c[i] -= an * Av[i];
    loads.add(c, an, [](const TimeFactor& g) { return time_derivative_at_zero(g, 0); });
  }
  for (int l = 1; l <= k - 2; ++l) {
    const Real bln = static_cast<Real>(coeffs.b.at(l - 1).at(n - 1));
    if (bln == 0) continue;
    loads.add(c, bln * std::pow(static_cast<Real>(tau), l),
              [&](const TimeFactor& g) { return time_derivative_at_zero(g, l); });
  }
  return c;
}

template std::vector<double> cq_correction(const ProblemSpec&, const FemOperators&, FemKind,
                                           std::span<const double>, int, int, double,
                                           const CorrectionCoefficients&);
template std::vector<long double> cq_correction(const ProblemSpec&, const FemOperators&, FemKind,
                                                std::span<const long double>, int, int, double,
                                                const CorrectionCoefficients&);

template <std::floating_point Real>
Trajectory<Real> solve_cq(const ProblemSpec& spec, const FemOperators& ops, FemKind fem,
                          std::span<const Real> v_h, int k, int N, bool corrected,
                          const CqOptions& options) {
  detail::check_problem(spec, ops, v_h.size());
  check_order(k);
  if (N < 1) throw PreconditionError("solve_cq: N must be positive");
  if (corrected) {
    for (const auto& term : spec.source)
      if (!smooth_at_zero(term.g, k - 1))
        throw PreconditionError(fmt::format(
            "solve_cq: corrected BDF{} needs {} derivatives of the source time factor {} at t = 0",
            k, k - 1, time_factor_name(term.g)));
  }

  const int dim = ops.mesh.num_interior();
  const auto A = ops.stiffness.cast<Real>();
  const auto M = ops.time_mass(fem).cast<Real>();
  const Real alpha = static_cast<Real>(spec.alpha);
  const double tau = spec.T / N;
  const Real scale = std::pow(static_cast<Real>(spec.T) / N, -alpha);  // tau^-alpha, unrounded
  auto b = cq_weights<Real>(alpha, k, N);
  const Real b0 = b[0];
  const SpdSolver<Real> solver(A.combine(Real(1), M, scale * b0));
  const detail::SourceLoads<Real> loads(spec, ops.mesh);
  const CorrectionCoefficients coeffs =
      options.correction ? *options.correction : CorrectionCoefficients::bdf(k);

  Trajectory<Real> traj;
  traj.scheme = fmt::format("bdf{}", k);
  traj.corrected = corrected;
  traj.fem = fem;
  traj.tau = tau;
  traj.steps = N;
  traj.store(0, v_h, options.keep_all);

  // History of U^i - v.
  HistorySum<Real> history(std::move(b), dim, options.kernel);
  history.reserve(N);
  std::vector<Real> diff(dim, Real(0)), H(dim), tmp(dim), rhs(dim), u(dim);
  history.push(diff);

  for (int n = 1; n <= N; ++n) {
    history.evaluate(H);
    for (int i = 0; i < dim; ++i) tmp[i] = scale * (b0 * v_h[i] - H[i]);
    M.apply(tmp, rhs);
    loads.add_at(rhs, n * tau);
    if (corrected && n < k) {
      const auto c = cq_correction<Real>(spec, ops, fem, v_h, k, n, tau, coeffs);
      for (int i = 0; i < dim; ++i) rhs[i] += c[i];
    }
    solver.solve(rhs, u);
    for (int i = 0; i < dim; ++i) diff[i] = u[i] - v_h[i];
    history.push(diff);
    traj.store(n, u, options.keep_all);
  }
  return traj;
}

template Trajectory<double> solve_cq(const ProblemSpec&, const FemOperators&, FemKind,
                                     std::span<const double>, int, int, bool, const CqOptions&);
template Trajectory<long double> solve_cq(const ProblemSpec&, const FemOperators&, FemKind,
                                          std::span<const long double>, int, int, bool,
                                          const CqOptions&);

}  // namespace fracstep
