#include "fracstep/l1_stepper.hpp"

#include <cmath>
#include <fmt/format.h>

#include "fracstep/errors.hpp"
#include "fracstep/linear_solver.hpp"
#include "fracstep/mittag_leffler.hpp"
#include "stepper_common.hpp"

namespace fracstep {

template <std::floating_point Real>
std::vector<Real> l1_weights(Real alpha, int N) {
  if (!(alpha > 0 && alpha < 1)) throw PreconditionError("l1_weights: alpha must lie in (0, 1)");
  if (N < 1) throw PreconditionError("l1_weights: N must be positive");
  const Real rg = rgamma<Real>(2 - alpha);
  std::vector<Real> b(N);
  Real prev = 0;  // j^{1-a}
  for (int j = 0; j < N; ++j) {
    const Real next = std::pow(static_cast<Real>(j + 1), 1 - alpha);
    b[j] = (next - prev) * rg;
    prev = next;
  }
  return b;
}

template std::vector<double> l1_weights(double, int);
template std::vector<long double> l1_weights(long double, int);

template <std::floating_point Real>
std::vector<Real> l1_apply(std::span<const std::vector<Real>> history, std::span<const Real> b,
                           Real tau, Real alpha) {
  const int n = static_cast<int>(history.size()) - 1;
  if (n < 1) throw PreconditionError("l1_apply: need U^0 and U^1 at least");
  if (static_cast<int>(b.size()) < n) throw PreconditionError("l1_apply: weight table too short");
  const std::size_t dim = history[0].size();
  std::vector<Real> out(dim, Real(0));
  for (int j = 0; j < n; ++j) {
    const auto& hi = history[n - j];
    const auto& lo = history[n - j - 1];
    for (std::size_t i = 0; i < dim; ++i) out[i] += b[j] * (hi[i] - lo[i]);
  }
  const Real s = std::pow(tau, -alpha);
  for (auto& x : out) x *= s;
  return out;
}

template std::vector<double> l1_apply(std::span<const std::vector<double>>, std::span<const double>,
                                      double, double);
template std::vector<long double> l1_apply(std::span<const std::vector<long double>>,
                                           std::span<const long double>, long double, long double);

template <std::floating_point Real>
Trajectory<Real> solve_l1(const ProblemSpec& spec, const FemOperators& ops, FemKind fem,
                          std::span<const Real> v_h, int N, bool corrected,
                          const StepperOptions& options) {
  detail::check_problem(spec, ops, v_h.size());
  if (spec.alpha >= 1) throw PreconditionError("solve_l1: alpha must lie in (0, 1)");
  if (N < 1) throw PreconditionError("solve_l1: N must be positive");
  if (corrected)
    for (const auto& term : spec.source)
      if (!smooth_at_zero(term.g, 1))
        throw PreconditionError(fmt::format(
            "solve_l1: the corrected scheme needs f'(0); time factor {} has none",
            time_factor_name(term.g)));

  const int dim = ops.mesh.num_interior();
  const auto A = ops.stiffness.cast<Real>();
  const auto M = ops.time_mass(fem).cast<Real>();
  const Real alpha = static_cast<Real>(spec.alpha);
  const double tau = spec.T / N;
  const Real scale = std::pow(static_cast<Real>(tau), -alpha);
  const auto b = l1_weights<Real>(alpha, N);
  const SpdSolver<Real> solver(A.combine(Real(1), M, scale * b[0]));
  const detail::SourceLoads<Real> loads(spec, ops.mesh);

  // d_j = b_{j-1} - b_j > 0 multiplies U^{n-j}, j = 1..n-1.
  std::vector<Real> d(N, Real(0));
  for (int j = 1; j < N; ++j) d[j] = b[j - 1] - b[j];

  Trajectory<Real> traj;
  traj.scheme = "l1";
  traj.corrected = corrected;
  traj.fem = fem;
  traj.tau = tau;
  traj.steps = N;
  traj.store(0, v_h, options.keep_all);

  // History of U^1, U^2, ...; at step n it holds n - 1 vectors.
  HistorySum<Real> history(std::move(d), dim, options.kernel);
  history.reserve(N);
  std::vector<Real> H(dim), tmp(dim), rhs(dim), u(dim);

  for (int n = 1; n <= N; ++n) {
    history.evaluate(H);
    for (int i = 0; i < dim; ++i) tmp[i] = scale * (b[n - 1] * v_h[i] + H[i]);
    M.apply(tmp, rhs);
    loads.add_at(rhs, n * tau);
    if (corrected && n == 1) {
      const auto Av = A.apply(v_h);
      for (int i = 0; i < dim; ++i) rhs[i] -= Av[i] / 2;
      loads.add(rhs, Real(1) / 2, [](const TimeFactor& g) { return time_value(g, 0.0); });
    }
    solver.solve(rhs, u);
    if (n < N) history.push(u);
    traj.store(n, u, options.keep_all);
  }
  return traj;
}

template Trajectory<double> solve_l1(const ProblemSpec&, const FemOperators&, FemKind,
                                     std::span<const double>, int, bool, const StepperOptions&);
template Trajectory<long double> solve_l1(const ProblemSpec&, const FemOperators&, FemKind,
                                          std::span<const long double>, int, bool,
                                          const StepperOptions&);

}  // namespace fracstep
