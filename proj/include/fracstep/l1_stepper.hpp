#pragma once

// L1 scheme: piecewise-linear interpolation of U inside the Caputo integral,
//   L_1^n(U) = tau^-a sum_{j=0}^{n-1} b_j (U^{n-j} - U^{n-j-1}),
//   b_j = ((j+1)^{1-a} - j^{1-a}) / Gamma(2-a).
// The corrected variant changes only the first step, adding -A v / 2 + M f(0) / 2 on the right.

#include <concepts>
#include <span>
#include <vector>

#include "fracstep/mesh_fem.hpp"
#include "fracstep/problem.hpp"
#include "fracstep/trajectory.hpp"

namespace fracstep {

/// b_0..b_{N-1}; positive and strictly decreasing for 0 < alpha < 1.
template <std::floating_point Real>
std::vector<Real> l1_weights(Real alpha, int N);

/// L_1^n(U) for n = history.size() - 1 >= 1, as coefficient vectors (no mass pairing).
template <std::floating_point Real>
std::vector<Real> l1_apply(std::span<const std::vector<Real>> history, std::span<const Real> b,
                           Real tau, Real alpha);

/// corrected = true requires f(0) and f'(0) for every source time factor.
template <std::floating_point Real>
Trajectory<Real> solve_l1(const ProblemSpec& spec, const FemOperators& ops, FemKind fem,
                          std::span<const Real> v_h, int N, bool corrected,
                          const StepperOptions& options = {});

}  // namespace fracstep
