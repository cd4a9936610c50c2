#pragma once

// Reference solutions built from eigenfunction expansions.
//
// Continuous problem: with Dirichlet eigenpairs (lambda_j, phi_j) each mode evolves as
//   u_j(t) = E_{a,1}(-lambda_j t^a) v_j + sum over source terms of r_g(lambda_j, t) w_j,
// where r_g is the Duhamel response of the time factor g:
//   c t^gamma    ->  c Gamma(gamma+1) t^(gamma+a) E_{a,gamma+a+1}(-lambda t^a)
//   c (e^t - 1)  ->  c sum_{k>=1} t^(k+a) E_{a,a+k+1}(-lambda t^a)
// Semidiscrete problem: the same formulas with the discrete generalized eigenpairs of
// A phi = lambda M phi and M-inner-product coefficients.

#include <concepts>
#include <functional>
#include <span>
#include <vector>

#include "fracstep/dense_eigen.hpp"
#include "fracstep/mesh_fem.hpp"
#include "fracstep/mittag_leffler.hpp"
#include "fracstep/problem.hpp"

namespace fracstep {

/// Time response of one mode with eigenvalue lambda. A default-constructed response is the
/// homogeneous one, E_{a,1}(-lambda t^a).
template <std::floating_point Real>
class ModalResponse {
 public:
  /// Homogeneous response.
  explicit ModalResponse(Real alpha);
  /// Duhamel response to g(t) times a unit modal coefficient.
  ModalResponse(Real alpha, const TimeFactor& g);

  Real operator()(Real lambda, Real t) const;

 private:
  enum class Kind { Initial, Power, ExpMinusOne };
  Kind kind_;
  Real alpha_;
  Real scale_ = 1;   // c, or c Gamma(gamma + 1)
  Real gamma_ = 0;
  std::vector<MittagLeffler<Real>> mlf_;
};

extern template class ModalResponse<double>;
extern template class ModalResponse<long double>;

/// Eigenfunction coefficients written as a sum of rank-one terms scale * x_m * y_n
/// (the y factor is unused on the interval). Index m - 1 holds mode m.
struct ModalCoefficients {
  struct RankOne {
    double scale = 1.0;
    std::vector<double> x;
    std::vector<double> y;
  };
  DomainKind domain = DomainKind::Interval;
  int modes = 0;
  std::vector<RankOne> terms;

  double operator()(int m, int n = 1) const;
  /// Dense coefficients: length M on the interval, M*M row-major (m outer) on the square.
  std::vector<double> dense() const;
};

/// (v, phi_j) for the catalog, modes 1..M per dimension, in closed form.
/// Throws PreconditionError for nodal data and for fields of the wrong dimension.
ModalCoefficients eigen_coeffs(const Field& v, DomainKind domain, int modes);

/// Continuous eigenvalue of mode (m, n); n is ignored on the interval.
double continuous_eigenvalue(DomainKind domain, int m, int n = 0);

/// Truncated expansion of a function at a fixed time. Coefficients use the dense layout of
/// ModalCoefficients::dense().
class SeriesField {
 public:
  SeriesField(DomainKind domain, int modes, std::vector<double> coeffs);

  DomainKind domain() const { return domain_; }
  int modes() const { return modes_; }
  std::span<const double> coeffs() const { return coeffs_; }

  double value(double x, double y = 0.0) const;
  /// Values on the tensor grid xs x ys (row index follows ys); on the interval ys is ignored.
  std::vector<double> values_on_grid(std::span<const double> xs,
                                     std::span<const double> ys = {}) const;
  /// sum of squared coefficients = squared L2 norm of the truncated field.
  double l2_norm_squared() const;

 private:
  DomainKind domain_;
  int modes_;
  std::vector<double> coeffs_;
};

/// Continuous solution at time t > 0 truncated to `modes` per dimension.
SeriesField exact_solution(const ProblemSpec& spec, double t, int modes);

/// Mode count from lambda t^alpha <= 50, at least 16, rounded up to a power of two.
int default_truncation(const ProblemSpec& spec, double t);

/// Runs `evaluate` on truncations M, 2M, 4M, ... until two successive results differ by at
/// most tol, and returns the last one. Throws SelfCheckError past max_modes.
double converged_series_value(const ProblemSpec& spec, double t,
                              const std::function<double(const SeriesField&)>& evaluate,
                              double tol, int initial_modes = 0, int max_modes = 4096);

/// ||g - u||_{L2} through Parseval: ||g||^2 - 2 (g, u) + ||u||^2 with the pairings (psi_j, phi_mn)
/// of the hat functions with the sine modes in closed form. Exact up to the truncation of u.
double l2_error_vs_series(const GridFunction& g, const SeriesField& exact);

/// Solution of the semidiscrete problem written in an M-orthonormal basis:
///   u_h(t) = sum_i w_i [ E_{a,1}(-mu_i t^a) a_i + sum_terms r_g(mu_i, t) b_{term,i} ].
template <std::floating_point Real>
class SpectralTrajectory {
 public:
  struct SourceModes {
    TimeFactor g;
    std::vector<Real> coeffs;
  };

  SpectralTrajectory(Real alpha, DenseBasis<Real> basis, std::vector<Real> eigenvalues,
                     std::vector<Real> initial_coeffs, std::vector<SourceModes> sources);

  int rank() const { return static_cast<int>(eigenvalues_.size()); }
  int dim() const { return basis_.rows; }
  const DenseBasis<Real>& basis() const { return basis_; }
  std::span<const Real> eigenvalues() const { return eigenvalues_; }

  /// Modal coordinates at time t (t = 0 returns the initial coordinates).
  std::vector<Real> coordinates(Real t) const;
  /// Nodal coefficient vector at time t.
  std::vector<Real> value(Real t) const;

 private:
  Real alpha_;
  DenseBasis<Real> basis_;
  std::vector<Real> eigenvalues_;
  std::vector<Real> initial_;
  std::vector<SourceModes> sources_;
  ModalResponse<Real> homogeneous_;
  std::vector<ModalResponse<Real>> responses_;
};

extern template class SpectralTrajectory<double>;
extern template class SpectralTrajectory<long double>;

/// Generalized eigenpairs of (A, M): Cholesky reduction plus cyclic Jacobi. Eigenvectors are
/// M-orthonormal. Intended for at most kMaxDenseDim unknowns.
inline constexpr int kMaxDenseDim = 400;

template <std::floating_point Real>
struct GeneralizedEigen {
  std::vector<Real> values;
  DenseBasis<Real> vectors;
};

template <std::floating_point Real>
GeneralizedEigen<Real> generalized_eigen(const BasicSparseOperator<Real>& stiffness,
                                         const BasicSparseOperator<Real>& mass);

/// Exact-in-time semidiscrete solution on the interval for data v_h (coefficients) and the
/// spec's sources (projected through their load vectors).
template <std::floating_point Real>
SpectralTrajectory<Real> semidiscrete_exact_1d(const ProblemSpec& spec, const FemOperators& ops,
                                               FemKind fem, std::span<const Real> v_h);

/// Semidiscrete solution for zero initial data and a single separable source, from an
/// M-inner-product Lanczos basis of the inverted Krylov space span{(A^{-1}M)^j P_h w}. Exact
/// in time; the operator function is approximated on a space of dimension `krylov_dim`
/// (fewer at an invariant subspace). Ritz values come back in descending order of 1/lambda.
SpectralTrajectory<double> krylov_reference(double alpha, const FemOperators& ops, FemKind fem,
                                            const SeparableTerm& source, int krylov_dim,
                                            int load_refine = 2);

}  // namespace fracstep
