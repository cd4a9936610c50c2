#pragma once

// Uniform P1 finite elements on (0,1) and (0,1)^2 with homogeneous Dirichlet conditions.
//
// Square cells are split along the lower-left to upper-right diagonal. Unknowns are the
// interior nodes only; boundary rows and columns are eliminated from every operator.

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "fracstep/fields.hpp"
#include "fracstep/sparse.hpp"

namespace fracstep {

enum class MeshKind { Interval, UnitSquare };

class Mesh {
 public:
  static Mesh interval(int cells);
  static Mesh unit_square(int cells_per_dim);

  MeshKind kind() const { return kind_; }
  int spatial_dim() const { return kind_ == MeshKind::Interval ? 1 : 2; }
  int cells() const { return n_; }
  double h() const { return 1.0 / n_; }

  /// All nodes, boundary included. On the square node (i, j) has id i + j (n + 1).
  int num_nodes() const;
  int num_interior() const;
  std::array<double, 2> node(int id) const;
  /// Interior index of a node, or -1 on the boundary.
  int interior_index(int id) const;
  int node_of_interior(int k) const;

  int num_elements() const;
  /// Vertex ids of element e: two for a segment, three for a triangle (counter-clockwise).
  std::array<int, 3> element(int e) const;
  double element_measure() const;

  friend bool operator==(const Mesh&, const Mesh&) = default;

 private:
  Mesh(MeshKind kind, int n) : kind_(kind), n_(n) {}
  MeshKind kind_ = MeshKind::Interval;
  int n_ = 1;
};

enum class Boundary { Eliminate, Keep };

SparseOperator assemble_stiffness(const Mesh& mesh, Boundary bc = Boundary::Eliminate);
SparseOperator assemble_mass(const Mesh& mesh, Boundary bc = Boundary::Eliminate);
/// Diagonal of row sums of the consistent mass.
SparseOperator assemble_lumped_mass(const Mesh& mesh, Boundary bc = Boundary::Eliminate);

/// Spatial scheme: standard Galerkin (consistent mass) or lumped mass.
enum class FemKind { Galerkin, LumpedMass };

struct FemOperators {
  explicit FemOperators(const Mesh& m);

  Mesh mesh;
  SparseOperator stiffness;
  SparseOperator mass;
  SparseOperator lumped_mass;

  /// Mass operator paired with the time derivative for the given scheme.
  const SparseOperator& time_mass(FemKind fem) const {
    return fem == FemKind::Galerkin ? mass : lumped_mass;
  }
};

/// Coefficients on the interior nodes of one mesh.
struct GridFunction {
  Mesh mesh;
  std::vector<double> values;
};

/// Entries <w, psi_j>. Pointwise fields use per-element Gauss rules exact for degree 4
/// (3-point Gauss in 1D, 6-point rule on triangles) on 2^refine (1D) or 4^refine (2D)
/// sub-elements. Dirac data use their exact action, nodal data the consistent mass.
std::vector<double> load_vector(const Mesh& mesh, const Field& w, int refine = 0);

/// Entries integral over Gamma of psi_j. Gamma must run along mesh lines with vertices on nodes.
std::vector<double> line_functional(const Mesh& mesh, const Polyline& gamma);

/// Solves M c = load.
GridFunction l2_project(const Mesh& mesh, std::span<const double> load);
GridFunction l2_project(const Mesh& mesh, const Field& v, int refine = 0);
/// Solves A c = b with b_j = (grad v, grad psi_j).
GridFunction ritz_project(const Mesh& mesh, const Field& v, int refine = 0);
GridFunction nodal_interpolate(const Mesh& mesh, const Field& v);

/// Direct tridiagonal elimination in 1D, banded Cholesky (or CG beyond 300^2 unknowns) in 2D.
std::vector<double> solve_spd(const SparseOperator& op, std::span<const double> rhs);

/// sqrt(c^T M c)
double l2_norm(const GridFunction& g);

/// ||g - exact||_{L2} by the degree-4 element rule on refined sub-elements.
double l2_error_vs_function(const GridFunction& g,
                            const std::function<double(double, double)>& exact, int refine = 0);

/// P1 interpolant value of interior coefficients at a point of the domain.
double evaluate_p1(const Mesh& mesh, std::span<const double> values, double x, double y = 0.0);

}  // namespace fracstep
