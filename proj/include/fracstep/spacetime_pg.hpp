#pragma once

// Space-time Petrov-Galerkin scheme with fractionalized piecewise-constant trial functions
//   phi_k(t) = (t - t_{k-1})^a on [t_{k-1}, T], zero before,
// so that d_t^a phi_k = Gamma(a+1) on [t_{k-1}, T]. Testing with the indicator of [t_{n-1}, t_n]
// makes the system lower triangular in time:
//   (Gamma(a+1) tau M + tau^{a+1} c_0 A) U_n
//       = F_n - Gamma(a+1) tau M sum_{k<n} U_k - tau^{a+1} A sum_{k<n} c_{n-k} U_k,
//   c_m = ((m+1)^{a+1} - m^{a+1}) / (a+1),  F_n = int_{t_{n-1}}^{t_n} (f(t), psi_j) dt.
// The discrete solution is u(t) = sum_{k : t_{k-1} < t} U_k (t - t_{k-1})^a; zero initial data only.

#include <functional>
#include <span>
#include <vector>

#include "fracstep/history.hpp"
#include "fracstep/mesh_fem.hpp"
#include "fracstep/problem.hpp"
#include "fracstep/spectral_reference.hpp"

namespace fracstep {

/// c_0..c_{N-1}; c_0 = 1/(a+1), positive and increasing (c_m ~ m^a).
std::vector<double> pg_factors(double alpha, int N);

struct PgSystem {
  double alpha = 0.5;
  double T = 1.0;
  double tau = 1.0;
  int N = 0;
  FemKind fem = FemKind::Galerkin;
  const FemOperators* ops = nullptr;  // not owned; must outlive the system
  std::vector<double> c;
  std::vector<std::vector<double>> F;  // F[n-1] = F_n
};

/// Throws PreconditionError for nonzero initial data.
PgSystem pg_assemble(const ProblemSpec& spec, const FemOperators& ops, FemKind fem, int N);

struct PgTrajectory {
  double alpha = 0.5;
  double tau = 1.0;
  int N = 0;
  FemKind fem = FemKind::Galerkin;
  std::vector<std::vector<double>> U;  // U[k-1] = U_k

  int dim() const { return U.empty() ? 0 : static_cast<int>(U.front().size()); }
};

PgTrajectory pg_solve(const PgSystem& system, HistoryKernel kernel = HistoryKernel::Blocked);

/// Nodal coefficients of u_{h,tau}(t).
std::vector<double> pg_evaluate(const PgTrajectory& traj, double t);

/// Per time interval: breakpoints t_{n-1} + tau ratio^{S-j}, j = 1..S, graded towards t_{n-1}
/// where the newest basis function has its kink, and 6-point Gauss on each piece.
struct PgQuadrature {
  int subintervals = 4;
  double ratio = 0.1;
  double self_check = 1e-3;  // relative change allowed when every piece is halved
};

/// ||u_{h,tau} - u_ref||_{L2(0,T; L2)} with the spatial norm taken in the time-stepping mass
/// of the trajectory. The reference is written in its own M-orthonormal basis; the error is
/// split into the part in that basis and the M-orthogonal remainder, so no cancellation occurs
/// between ||u||^2 terms. Throws SelfCheckError if doubling the quadrature moves the result.
double pg_l2qt_error(const PgTrajectory& traj, const FemOperators& ops,
                     const SpectralTrajectory<double>& reference, const PgQuadrature& quad = {});

/// Same norm against an arbitrary reference u_ref(t) (nodal coefficients). Costs one
/// reference evaluation and one pg_evaluate per quadrature node.
double pg_l2qt_error(const PgTrajectory& traj, const FemOperators& ops,
                     const std::function<std::vector<double>(double)>& reference,
                     const PgQuadrature& quad = {});

}  // namespace fracstep
