#pragma once

// Output of the uniform-grid time steppers.

#include <concepts>
#include <span>
#include <string>
#include <vector>

#include "fracstep/history.hpp"
#include "fracstep/mesh_fem.hpp"

namespace fracstep {

struct StepperOptions {
  /// Keep every U^n; otherwise only U^0 and U^N are stored.
  bool keep_all = true;
  HistoryKernel kernel = HistoryKernel::Blocked;
};

/// Nodal coefficient vectors U^0..U^N on the grid t_n = n tau.
template <std::floating_point Real>
struct Trajectory {
  std::string scheme;
  bool corrected = false;
  FemKind fem = FemKind::Galerkin;
  double tau = 0;
  int steps = 0;
  std::vector<int> indices;  // step number of each stored vector
  std::vector<std::vector<Real>> values;

  const std::vector<Real>& final() const { return values.back(); }
  double final_time() const { return tau * steps; }

  void store(int n, std::span<const Real> u, bool keep_all) {
    if (keep_all || n == 0 || n == steps) {
      indices.push_back(n);
      values.emplace_back(u.begin(), u.end());
    }
  }
};

}  // namespace fracstep
