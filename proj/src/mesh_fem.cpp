#include "fracstep/mesh_fem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fracstep/errors.hpp"
#include "fracstep/linear_solver.hpp"

namespace fracstep {

namespace {

using Entry = SparseOperator::Entry;

struct QuadPoint {
  std::array<double, 3> bary;  // barycentric (1D: first two used)
  double weight;               // fraction of the element measure
};

// 3-point Gauss-Legendre on [0,1], exact for degree 5.
std::vector<QuadPoint> gauss_segment() {
  const double r = std::sqrt(0.6) / 2;
  return {{{0.5 + r, 0.5 - r, 0}, 5.0 / 18},
          {{0.5, 0.5, 0}, 8.0 / 18},
          {{0.5 - r, 0.5 + r, 0}, 5.0 / 18}};
}

// Symmetric 6-point triangle rule, exact for degree 4.
std::vector<QuadPoint> gauss_triangle() {
  const double a1 = 0.445948490915965, w1 = 0.223381589678011;
  const double a2 = 0.091576213509771, w2 = 0.109951743655322;
  return {{{a1, a1, 1 - 2 * a1}, w1}, {{a1, 1 - 2 * a1, a1}, w1}, {{1 - 2 * a1, a1, a1}, w1},
          {{a2, a2, 1 - 2 * a2}, w2}, {{a2, 1 - 2 * a2, a2}, w2}, {{1 - 2 * a2, a2, a2}, w2}};
}

// Composite rule on the reference element split 2^refine (1D) or 4^refine (2D) times,
// expressed in the parent's barycentric coordinates.
std::vector<QuadPoint> composite_rule(int dim, int refine) {
  if (refine < 0 || refine > 8) throw PreconditionError("quadrature refine level out of range");
  using Simplex = std::array<std::array<double, 3>, 3>;
  std::vector<Simplex> cells;
  if (dim == 1) {
    const int m = 1 << refine;
    for (int k = 0; k < m; ++k) {
      const double a = double(k) / m, b = double(k + 1) / m;
      cells.push_back({{{1 - a, a, 0}, {1 - b, b, 0}, {0, 0, 0}}});
    }
  } else {
    cells.push_back({{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}});
    for (int r = 0; r < refine; ++r) {
      std::vector<Simplex> next;
      for (const auto& c : cells) {
        auto mid = [&](int i, int j) {
          std::array<double, 3> m{};
          for (int d = 0; d < 3; ++d) m[d] = 0.5 * (c[i][d] + c[j][d]);
          return m;
        };
        const auto m01 = mid(0, 1), m12 = mid(1, 2), m02 = mid(0, 2);
        next.push_back({c[0], m01, m02});
        next.push_back({m01, c[1], m12});
        next.push_back({m02, m12, c[2]});
        next.push_back({m01, m12, m02});
      }
      cells = std::move(next);
    }
  }
  const auto base = dim == 1 ? gauss_segment() : gauss_triangle();
  const double share = 1.0 / cells.size();
  std::vector<QuadPoint> out;
  out.reserve(cells.size() * base.size());
  for (const auto& c : cells)
    for (const auto& q : base) {
      std::array<double, 3> b{};
      const int nv = dim + 1;
      for (int v = 0; v < nv; ++v)
        for (int d = 0; d < 3; ++d) b[d] += q.bary[v] * c[v][d];
      out.push_back({b, q.weight * share});
    }
  return out;
}

struct ElementGeometry {
  std::array<int, 3> ids;
  std::array<std::array<double, 2>, 3> xy;
  std::array<std::array<double, 2>, 3> grad;  // gradients of the barycentric coordinates
  int nv;
};

ElementGeometry geometry(const Mesh& mesh, int e) {
  ElementGeometry g{};
  g.ids = mesh.element(e);
  g.nv = mesh.spatial_dim() + 1;
  for (int v = 0; v < g.nv; ++v) g.xy[v] = mesh.node(g.ids[v]);
  if (g.nv == 2) {
    const double h = g.xy[1][0] - g.xy[0][0];
    g.grad[0] = {-1 / h, 0};
    g.grad[1] = {1 / h, 0};
  } else {
    const double area2 = (g.xy[1][0] - g.xy[0][0]) * (g.xy[2][1] - g.xy[0][1]) -
                         (g.xy[2][0] - g.xy[0][0]) * (g.xy[1][1] - g.xy[0][1]);
    for (int v = 0; v < 3; ++v) {
      const auto& p = g.xy[(v + 1) % 3];
      const auto& q = g.xy[(v + 2) % 3];
      g.grad[v] = {(p[1] - q[1]) / area2, (q[0] - p[0]) / area2};
    }
  }
  return g;
}

std::array<double, 2> point_at(const ElementGeometry& g, const std::array<double, 3>& bary) {
  std::array<double, 2> p{0, 0};
  for (int v = 0; v < g.nv; ++v) {
    p[0] += bary[v] * g.xy[v][0];
    p[1] += bary[v] * g.xy[v][1];
  }
  return p;
}

template <class ElementMatrix>
SparseOperator assemble(const Mesh& mesh, Boundary bc, ElementMatrix&& local) {
  const bool keep = bc == Boundary::Keep;
  const int dim = keep ? mesh.num_nodes() : mesh.num_interior();
  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(mesh.num_elements()) * 9);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementGeometry g = geometry(mesh, e);
    for (int a = 0; a < g.nv; ++a) {
      const int ra = keep ? g.ids[a] : mesh.interior_index(g.ids[a]);
      if (ra < 0) continue;
      for (int b = 0; b < g.nv; ++b) {
        const int rb = keep ? g.ids[b] : mesh.interior_index(g.ids[b]);
        if (rb < 0) continue;
        entries.push_back({ra, rb, local(g, a, b)});
      }
    }
  }
  return SparseOperator::from_triplets(dim, std::move(entries));
}

void require_mesh_match(const Mesh& mesh, std::size_t n, const char* what) {
  if (static_cast<int>(n) != mesh.num_interior()) {
    std::ostringstream os;
    os << what << ": expected " << mesh.num_interior() << " interior values, got " << n;
    throw PreconditionError(os.str());
  }
}

// Lattice coordinate of a point known to lie on a mesh line.
int lattice(double x, double h, const char* what) {
  const double s = x / h;
  const double r = std::round(s);
  if (std::abs(s - r) > 1e-9) throw PreconditionError(std::string(what) + ": not aligned with the mesh");
  return static_cast<int>(r);
}

}  // namespace

Mesh Mesh::interval(int cells) {
  if (cells < 1) throw PreconditionError("Mesh::interval: need at least one cell");
  return Mesh(MeshKind::Interval, cells);
}

Mesh Mesh::unit_square(int cells_per_dim) {
  if (cells_per_dim < 1) throw PreconditionError("Mesh::unit_square: need at least one cell");
  return Mesh(MeshKind::UnitSquare, cells_per_dim);
}

int Mesh::num_nodes() const { return kind_ == MeshKind::Interval ? n_ + 1 : (n_ + 1) * (n_ + 1); }

int Mesh::num_interior() const { return kind_ == MeshKind::Interval ? n_ - 1 : (n_ - 1) * (n_ - 1); }

std::array<double, 2> Mesh::node(int id) const {
  if (kind_ == MeshKind::Interval) return {double(id) / n_, 0.0};
  return {double(id % (n_ + 1)) / n_, double(id / (n_ + 1)) / n_};
}

int Mesh::interior_index(int id) const {
  if (kind_ == MeshKind::Interval) return (id == 0 || id == n_) ? -1 : id - 1;
  const int i = id % (n_ + 1);
  const int j = id / (n_ + 1);
  if (i == 0 || j == 0 || i == n_ || j == n_) return -1;
  return (i - 1) + (j - 1) * (n_ - 1);
}

int Mesh::node_of_interior(int k) const {
  if (kind_ == MeshKind::Interval) return k + 1;
  const int i = k % (n_ - 1) + 1;
  const int j = k / (n_ - 1) + 1;
  return i + j * (n_ + 1);
}

int Mesh::num_elements() const { return kind_ == MeshKind::Interval ? n_ : 2 * n_ * n_; }

std::array<int, 3> Mesh::element(int e) const {
  if (kind_ == MeshKind::Interval) return {e, e + 1, -1};
  const int cell = e / 2;
  const int i = cell % n_;
  const int j = cell / n_;
  const int ll = i + j * (n_ + 1);
  const int lr = ll + 1;
  const int ul = ll + (n_ + 1);
  const int ur = ul + 1;
  return e % 2 == 0 ? std::array<int, 3>{ll, lr, ur} : std::array<int, 3>{ll, ur, ul};
}

double Mesh::element_measure() const { return kind_ == MeshKind::Interval ? h() : 0.5 * h() * h(); }

SparseOperator assemble_stiffness(const Mesh& mesh, Boundary bc) {
  const double measure = mesh.element_measure();
  return assemble(mesh, bc, [&](const ElementGeometry& g, int a, int b) {
    return measure * (g.grad[a][0] * g.grad[b][0] + g.grad[a][1] * g.grad[b][1]);
  });
}

SparseOperator assemble_mass(const Mesh& mesh, Boundary bc) {
  const double measure = mesh.element_measure();
  const bool line = mesh.spatial_dim() == 1;
  // Exact P1 element mass: |K|/6 (2, 1; 1, 2) on segments, |K|/12 (1 + delta_ab) on triangles.
  return assemble(mesh, bc, [&](const ElementGeometry&, int a, int b) {
    if (line) return measure * (a == b ? 2.0 : 1.0) / 6.0;
    return measure * (a == b ? 2.0 : 1.0) / 12.0;
  });
}

SparseOperator assemble_lumped_mass(const Mesh& mesh, Boundary bc) {
  // Row sums of the consistent mass on the full mesh, restricted afterwards.
  const SparseOperator full = assemble_mass(mesh, Boundary::Keep);
  const std::vector<double> sums = full.row_sums();
  if (bc == Boundary::Keep) return SparseOperator::diagonal(sums);
  std::vector<double> d(mesh.num_interior());
  for (int k = 0; k < mesh.num_interior(); ++k) d[k] = sums[mesh.node_of_interior(k)];
  return SparseOperator::diagonal(d);
}

FemOperators::FemOperators(const Mesh& m)
    : mesh(m),
      stiffness(assemble_stiffness(m)),
      mass(assemble_mass(m)),
      lumped_mass(assemble_lumped_mass(m)) {}

std::vector<double> line_functional(const Mesh& mesh, const Polyline& gamma) {
  if (mesh.kind() != MeshKind::UnitSquare) throw PreconditionError("line_functional: needs the square mesh");
  if (gamma.vertices.size() < 2) throw PreconditionError("line_functional: empty polyline");
  const int n = mesh.cells();
  const double h = mesh.h();
  std::vector<double> out(mesh.num_interior(), 0.0);
  auto add = [&](int i, int j, double w) {
    const int k = mesh.interior_index(i + j * (n + 1));
    if (k >= 0) out[k] += w;
  };
  for (std::size_t s = 0; s < gamma.vertices.size(); ++s) {
    const auto& a = gamma.vertices[s];
    const auto& b = gamma.vertices[(s + 1) % gamma.vertices.size()];
    const int ia = lattice(a[0], h, "line_functional"), ja = lattice(a[1], h, "line_functional");
    const int ib = lattice(b[0], h, "line_functional"), jb = lattice(b[1], h, "line_functional");
    if (ia != ib && ja != jb) throw PreconditionError("line_functional: segment is not axis-aligned");
    const int steps = std::abs(ib - ia) + std::abs(jb - ja);
    const int di = (ib > ia) - (ib < ia), dj = (jb > ja) - (jb < ja);
    // The trace of a hat on a mesh line is a 1D hat: each edge gives h/2 to both ends.
    for (int t = 0; t < steps; ++t) {
      add(ia + t * di, ja + t * dj, 0.5 * h);
      add(ia + (t + 1) * di, ja + (t + 1) * dj, 0.5 * h);
    }
  }
  return out;
}

std::vector<double> load_vector(const Mesh& mesh, const Field& w, int refine) {
  if (const auto* nodal = std::get_if<NodalField>(&w)) {
    require_mesh_match(mesh, nodal->values.size(), "load_vector");
    return assemble_mass(mesh).apply(nodal->values);
  }
  if (const auto* line = std::get_if<DiracLine>(&w)) return line_functional(mesh, line->gamma);
  std::vector<double> out(mesh.num_interior(), 0.0);
  if (const auto* point = std::get_if<DiracPoint>(&w)) {
    if (mesh.kind() != MeshKind::Interval) throw PreconditionError("load_vector: DiracPoint needs the interval");
    if (!(point->x0 > 0 && point->x0 < 1)) throw PreconditionError("load_vector: DiracPoint outside (0,1)");
    const double s = point->x0 * mesh.cells();
    const int cell = std::min(static_cast<int>(std::floor(s)), mesh.cells() - 1);
    const double frac = s - cell;
    const int left = mesh.interior_index(cell), right = mesh.interior_index(cell + 1);
    if (left >= 0) out[left] += 1 - frac;
    if (right >= 0) out[right] += frac;
    return out;
  }
  if (std::holds_alternative<ZeroField>(w)) return out;
  const auto rule = composite_rule(mesh.spatial_dim(), refine);
  const double measure = mesh.element_measure();
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementGeometry g = geometry(mesh, e);
    std::array<double, 3> acc{0, 0, 0};
    for (const auto& q : rule) {
      const auto p = point_at(g, q.bary);
      const double fw = q.weight * field_value(w, p[0], p[1]);
      for (int v = 0; v < g.nv; ++v) acc[v] += fw * q.bary[v];
    }
    for (int v = 0; v < g.nv; ++v) {
      const int k = mesh.interior_index(g.ids[v]);
      if (k >= 0) out[k] += measure * acc[v];
    }
  }
  return out;
}

std::vector<double> solve_spd(const SparseOperator& op, std::span<const double> rhs) {
  return SpdSolver<double>(op).solve(rhs);
}

GridFunction l2_project(const Mesh& mesh, std::span<const double> load) {
  require_mesh_match(mesh, load.size(), "l2_project");
  return {mesh, solve_spd(assemble_mass(mesh), load)};
}

GridFunction l2_project(const Mesh& mesh, const Field& v, int refine) {
  if (const auto* nodal = std::get_if<NodalField>(&v)) {
    require_mesh_match(mesh, nodal->values.size(), "l2_project");
    return {mesh, nodal->values};
  }
  return l2_project(mesh, load_vector(mesh, v, refine));
}

GridFunction ritz_project(const Mesh& mesh, const Field& v, int refine) {
  if (!is_pointwise(v)) throw PreconditionError("ritz_project: needs a pointwise field");
  const auto rule = composite_rule(mesh.spatial_dim(), refine);
  const double measure = mesh.element_measure();
  std::vector<double> b(mesh.num_interior(), 0.0);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementGeometry g = geometry(mesh, e);
    std::array<double, 2> mean{0, 0};
    for (const auto& q : rule) {
      const auto p = point_at(g, q.bary);
      const auto gv = field_gradient(v, p[0], p[1]);
      mean[0] += q.weight * gv[0];
      mean[1] += q.weight * gv[1];
    }
    for (int a = 0; a < g.nv; ++a) {
      const int k = mesh.interior_index(g.ids[a]);
      if (k >= 0) b[k] += measure * (mean[0] * g.grad[a][0] + mean[1] * g.grad[a][1]);
    }
  }
  return {mesh, solve_spd(assemble_stiffness(mesh), b)};
}

GridFunction nodal_interpolate(const Mesh& mesh, const Field& v) {
  if (const auto* nodal = std::get_if<NodalField>(&v)) {
    require_mesh_match(mesh, nodal->values.size(), "nodal_interpolate");
    return {mesh, nodal->values};
  }
  if (!is_pointwise(v)) throw PreconditionError("nodal_interpolate: needs a pointwise field");
  GridFunction g{mesh, std::vector<double>(mesh.num_interior())};
  for (int k = 0; k < mesh.num_interior(); ++k) {
    const auto p = mesh.node(mesh.node_of_interior(k));
    g.values[k] = field_value(v, p[0], p[1]);
  }
  return g;
}

double l2_norm(const GridFunction& g) {
  require_mesh_match(g.mesh, g.values.size(), "l2_norm");
  return std::sqrt(assemble_mass(g.mesh).quadratic_form(g.values));
}

double l2_error_vs_function(const GridFunction& g,
                            const std::function<double(double, double)>& exact, int refine) {
  const Mesh& mesh = g.mesh;
  require_mesh_match(mesh, g.values.size(), "l2_error_vs_function");
  const auto rule = composite_rule(mesh.spatial_dim(), refine);
  const double measure = mesh.element_measure();
  double total = 0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementGeometry geo = geometry(mesh, e);
    std::array<double, 3> c{0, 0, 0};
    for (int v = 0; v < geo.nv; ++v) {
      const int k = mesh.interior_index(geo.ids[v]);
      c[v] = k >= 0 ? g.values[k] : 0.0;
    }
    double acc = 0;
    for (const auto& q : rule) {
      const auto p = point_at(geo, q.bary);
      double uh = 0;
      for (int v = 0; v < geo.nv; ++v) uh += c[v] * q.bary[v];
      const double d = uh - exact(p[0], p[1]);
      acc += q.weight * d * d;
    }
    total += measure * acc;
  }
  return std::sqrt(total);
}

double evaluate_p1(const Mesh& mesh, std::span<const double> values, double x, double y) {
  require_mesh_match(mesh, values.size(), "evaluate_p1");
  const int n = mesh.cells();
  auto coef = [&](int id) {
    const int k = mesh.interior_index(id);
    return k >= 0 ? values[k] : 0.0;
  };
  const double sx = std::clamp(x, 0.0, 1.0) * n;
  const int i = std::min(static_cast<int>(sx), n - 1);
  const double s = sx - i;
  if (mesh.kind() == MeshKind::Interval) return (1 - s) * coef(i) + s * coef(i + 1);
  const double sy = std::clamp(y, 0.0, 1.0) * n;
  const int j = std::min(static_cast<int>(sy), n - 1);
  const double t = sy - j;
  const int ll = i + j * (n + 1), lr = ll + 1, ul = ll + n + 1, ur = ul + 1;
  if (s >= t) return (1 - s) * coef(ll) + (s - t) * coef(lr) + t * coef(ur);
  return (1 - t) * coef(ll) + s * coef(ur) + (t - s) * coef(ul);
}

}  // namespace fracstep
