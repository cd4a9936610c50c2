#pragma once

// Shared plumbing of the time steppers (not installed).

#include <cmath>
#include <span>
#include <vector>

#include "fracstep/errors.hpp"
#include "fracstep/mesh_fem.hpp"
#include "fracstep/problem.hpp"

namespace fracstep::detail {

inline constexpr int kLoadRefine = 2;

/// Load vectors (w, psi_j) of the separable source terms with their time factors.
template <class Real>
struct SourceLoads {
  std::vector<TimeFactor> g;
  std::vector<std::vector<Real>> load;

  SourceLoads(const ProblemSpec& spec, const Mesh& mesh) {
    for (const auto& term : spec.source) {
      g.push_back(term.g);
      const auto b = load_vector(mesh, term.w, kLoadRefine);
      load.emplace_back(b.begin(), b.end());
    }
  }

  bool empty() const { return g.empty(); }

  /// out += scale * sum_terms coef(g) * load, with coef a callable of the time factor.
  template <class Coef>
  void add(std::span<Real> out, Real scale, Coef&& coef) const {
    for (std::size_t s = 0; s < g.size(); ++s) {
      const Real c = scale * static_cast<Real>(coef(g[s]));
      if (c == 0) continue;
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += c * load[s][i];
    }
  }

  void add_at(std::span<Real> out, double t) const {
    add(out, Real(1), [&](const TimeFactor& f) { return time_value(f, t); });
  }
};

inline void check_problem(const ProblemSpec& spec, const FemOperators& ops, std::size_t v_size) {
  spec.validate();
  const bool interval = ops.mesh.kind() == MeshKind::Interval;
  if (interval != (spec.domain == DomainKind::Interval))
    throw PreconditionError("stepper: mesh and problem live on different domains");
  if (static_cast<int>(v_size) != ops.mesh.num_interior())
    throw PreconditionError("stepper: initial vector has the wrong length");
}

}  // namespace fracstep::detail
