#include "fracstep/spacetime_pg.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <fmt/format.h>

#include "fracstep/errors.hpp"
#include "fracstep/linear_solver.hpp"
#include "stepper_common.hpp"

namespace fracstep {

namespace {

struct Rule {
  std::vector<double> x;  // nodes in [0, 1], fractions of tau
  std::vector<double> w;  // weights summing to 1
};

// Graded composite 6-point Gauss on [0, 1]; `split` halves every piece.
Rule graded_rule(const PgQuadrature& q, bool split) {
  using G = boost::math::quadrature::gauss<double, 6>;
  std::vector<double> gx, gw;  // reference rule on [-1, 1]
  for (std::size_t i = 0; i < G::abscissa().size(); ++i) {
    gx.push_back(G::abscissa()[i]);
    gw.push_back(G::weights()[i]);
    gx.push_back(-G::abscissa()[i]);
    gw.push_back(G::weights()[i]);
  }
  std::vector<double> br{0.0};
  for (int j = 1; j <= q.subintervals; ++j) br.push_back(std::pow(q.ratio, q.subintervals - j));
  if (split) {
    std::vector<double> fine{0.0};
    for (std::size_t j = 1; j < br.size(); ++j) {
      fine.push_back((br[j - 1] + br[j]) / 2);
      fine.push_back(br[j]);
    }
    br = std::move(fine);
  }
  Rule r;
  for (std::size_t j = 1; j < br.size(); ++j) {
    const double mid = (br[j - 1] + br[j]) / 2, half = (br[j] - br[j - 1]) / 2;
    for (std::size_t i = 0; i < gx.size(); ++i) {
      r.x.push_back(mid + half * gx[i]);
      r.w.push_back(half * gw[i]);
    }
  }
  return r;
}

// sum_n tau int_0^1 e2(n, xi) dxi for the base and the halved rule; checks their agreement.
template <class Err2>
double integrate_error(const PgTrajectory& traj, const PgQuadrature& quad, Err2&& err2) {
  if (quad.subintervals < 1 || !(quad.ratio > 0 && quad.ratio < 1))
    throw PreconditionError("PgQuadrature: need subintervals >= 1 and 0 < ratio < 1");
  const Rule coarse = graded_rule(quad, false), fine = graded_rule(quad, true);
  double sc = 0, sf = 0;
#pragma omp parallel for reduction(+ : sc, sf) schedule(dynamic)
  for (int n = 1; n <= traj.N; ++n) {
    for (std::size_t q = 0; q < coarse.x.size(); ++q) sc += coarse.w[q] * err2(n, coarse.x[q]);
    for (std::size_t q = 0; q < fine.x.size(); ++q) sf += fine.w[q] * err2(n, fine.x[q]);
  }
  const double ec = std::sqrt(traj.tau * std::max(sc, 0.0));
  const double ef = std::sqrt(traj.tau * std::max(sf, 0.0));
  if (std::abs(ec - ef) > quad.self_check * std::max(ef, 1e-300) && ef > 1e-150)
    throw SelfCheckError(fmt::format(
        "pg_l2qt_error: quadrature not converged ({:.6e} vs {:.6e} after halving)", ec, ef));
  return ef;
}

// s_k(t_{n-1} + xi tau) = tau^a (n - k + xi)^a for k = 1..n.
void active_basis(const PgTrajectory& traj, int n, double xi, std::vector<double>& s) {
  s.resize(n);
  const double ta = std::pow(traj.tau, traj.alpha);
  for (int k = 1; k <= n; ++k) s[k - 1] = ta * std::pow(n - k + xi, traj.alpha);
}

}  // namespace

std::vector<double> pg_factors(double alpha, int N) {
  if (!(alpha > 0 && alpha <= 1)) throw PreconditionError("pg_factors: alpha must lie in (0, 1]");
  std::vector<double> c(N);
  for (int m = 0; m < N; ++m)
    c[m] = (std::pow(m + 1.0, alpha + 1) - std::pow(static_cast<double>(m), alpha + 1)) /
           (alpha + 1);
  return c;
}

PgSystem pg_assemble(const ProblemSpec& spec, const FemOperators& ops, FemKind fem, int N) {
  detail::check_problem(spec, ops, static_cast<std::size_t>(ops.mesh.num_interior()));
  if (spec.has_initial())
    throw PreconditionError("pg_assemble: the space-time scheme needs zero initial data");
  if (N < 1) throw PreconditionError("pg_assemble: N must be positive");
  PgSystem sys;
  sys.alpha = spec.alpha;
  sys.T = spec.T;
  sys.tau = spec.T / N;
  sys.N = N;
  sys.fem = fem;
  sys.ops = &ops;
  sys.c = pg_factors(spec.alpha, N);
  const detail::SourceLoads<double> loads(spec, ops.mesh);
  const int dim = ops.mesh.num_interior();
  sys.F.assign(N, std::vector<double>(dim, 0.0));
  for (int n = 1; n <= N; ++n) {
    const double a = (n - 1) * sys.tau, b = n * sys.tau;
    loads.add(sys.F[n - 1], 1.0, [&](const TimeFactor& g) { return time_integral(g, a, b); });
  }
  return sys;
}

PgTrajectory pg_solve(const PgSystem& sys, HistoryKernel kernel) {
  if (sys.ops == nullptr) throw PreconditionError("pg_solve: system has no operators");
  const FemOperators& ops = *sys.ops;
  const int dim = ops.mesh.num_interior();
  const SparseOperator& A = ops.stiffness;
  const SparseOperator& M = ops.time_mass(sys.fem);
  const double gm = std::tgamma(sys.alpha + 1) * sys.tau;  // (d^a phi_k, chi_n) for k <= n
  const double ta1 = std::pow(sys.tau, sys.alpha + 1);
  const SpdSolver<double> solver(M.combine(gm, A, ta1 * sys.c[0]));

  PgTrajectory traj;
  traj.alpha = sys.alpha;
  traj.tau = sys.tau;
  traj.N = sys.N;
  traj.fem = sys.fem;
  traj.U.reserve(sys.N);

  HistorySum<double> history(sys.c, dim, kernel);  // sum_{k<n} c_{n-k} U_k
  history.reserve(sys.N);
  std::vector<double> S(dim, 0.0), H(dim), MS(dim), AH(dim), rhs(dim), u(dim);
  for (int n = 1; n <= sys.N; ++n) {
    history.evaluate(H);
    M.apply(S, MS);
    A.apply(H, AH);
    for (int i = 0; i < dim; ++i) rhs[i] = sys.F[n - 1][i] - gm * MS[i] - ta1 * AH[i];
    solver.solve(rhs, u);
    for (int i = 0; i < dim; ++i) S[i] += u[i];
    if (n < sys.N) history.push(u);
    traj.U.push_back(u);
  }
  return traj;
}

std::vector<double> pg_evaluate(const PgTrajectory& traj, double t) {
  std::vector<double> out(traj.dim(), 0.0);
  for (int k = 1; k <= traj.N; ++k) {
    const double r = t - (k - 1) * traj.tau;
    if (!(r > 0)) break;
    const double s = std::pow(r, traj.alpha);
    const auto& U = traj.U[k - 1];
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * U[i];
  }
  return out;
}

double pg_l2qt_error(const PgTrajectory& traj, const FemOperators& ops,
                     const std::function<std::vector<double>(double)>& reference,
                     const PgQuadrature& quad) {
  const SparseOperator& M = ops.time_mass(traj.fem);
  return integrate_error(traj, quad, [&](int n, double xi) {
    const double t = (n - 1 + xi) * traj.tau;
    auto d = pg_evaluate(traj, t);
    const auto r = reference(t);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] -= r[i];
    return M.quadratic_form(d);
  });
}

double pg_l2qt_error(const PgTrajectory& traj, const FemOperators& ops,
                     const SpectralTrajectory<double>& reference, const PgQuadrature& quad) {
  const SparseOperator& M = ops.time_mass(traj.fem);
  const int dim = traj.dim(), N = traj.N, r = reference.rank();
  if (reference.dim() != dim) throw PreconditionError("pg_l2qt_error: dimension mismatch");
  const auto& W = reference.basis();

  // C = W^T M U (r x N, column-major by k); Z_k = U_k - W C_k is M-orthogonal to range(W).
  std::vector<double> C(static_cast<std::size_t>(r) * N);
  std::vector<std::vector<double>> MZ(N);
  std::vector<std::vector<double>> Z(N);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < N; ++k) {
    const auto mu = M.apply(traj.U[k]);
    Z[k] = traj.U[k];
    for (int j = 0; j < r; ++j) {
      const double* w = W.column(j);
      double acc = 0;
      for (int i = 0; i < dim; ++i) acc += w[i] * mu[i];
      C[static_cast<std::size_t>(k) * r + j] = acc;
      for (int i = 0; i < dim; ++i) Z[k][i] -= acc * w[i];
    }
    MZ[k] = M.apply(Z[k]);
  }
  std::vector<double> R(static_cast<std::size_t>(N) * N);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < N; ++k)
    for (int l = 0; l <= k; ++l) {
      double acc = 0;
      for (int i = 0; i < dim; ++i) acc += Z[k][i] * MZ[l][i];
      R[static_cast<std::size_t>(k) * N + l] = R[static_cast<std::size_t>(l) * N + k] = acc;
    }

  // err^2 = |C s - y|^2 + s^T R s
  return integrate_error(traj, quad, [&](int n, double xi) {
    std::vector<double> s;
    active_basis(traj, n, xi, s);
    const auto y = reference.coordinates((n - 1 + xi) * traj.tau);
    double e2 = 0;
    for (int j = 0; j < r; ++j) {
      double cs = 0;
      for (int k = 0; k < n; ++k) cs += C[static_cast<std::size_t>(k) * r + j] * s[k];
      e2 += (cs - y[j]) * (cs - y[j]);
    }
    for (int k = 0; k < n; ++k) {
      double rs = 0;
      for (int l = 0; l < n; ++l) rs += R[static_cast<std::size_t>(k) * N + l] * s[l];
      e2 += s[k] * rs;
    }
    return e2;
  });
}

}  // namespace fracstep
