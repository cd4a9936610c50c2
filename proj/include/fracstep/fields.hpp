#pragma once

// Catalog of spatial data: initial values v and spatial factors w of separable sources.
//
// Pointwise fields (constant, bubbles, sine modes, x sin 2 pi x) can be evaluated and
// differentiated; Dirac data are only defined through their action on continuous test
// functions; nodal data live on one particular mesh.

#include <array>
#include <string>
#include <variant>
#include <vector>

namespace fracstep {

struct ZeroField {};

struct ConstantField {
  double value = 1.0;
};

/// x (1 - x)
struct Bubble1D {};

/// x (1 - x) y (1 - y)
struct Bubble2D {};

/// amplitude * sqrt(2) sin(m pi x) in 1D, amplitude * 2 sin(m pi x) sin(n pi y) in 2D (n > 0).
/// With amplitude 1 these are the L2-normalized Dirichlet eigenfunctions.
struct SineMode {
  int m = 1;
  int n = 0;
  double amplitude = 1.0;
};

/// x sin(2 pi x)
struct XSin2PiX {};

/// delta_{x0} on the interval.
struct DiracPoint {
  double x0 = 0.5;
};

/// Closed axis-aligned polyline; <delta_Gamma, phi> = integral of phi over Gamma.
struct Polyline {
  std::vector<std::array<double, 2>> vertices;  // closing segment implied

  /// Boundary of [lo, hi]^2.
  static Polyline square(double lo, double hi);
  double length() const;
};

struct DiracLine {
  Polyline gamma = Polyline::square(0.25, 0.75);
};

/// Interior nodal coefficients on a specific mesh.
struct NodalField {
  std::vector<double> values;
};

using Field = std::variant<ZeroField, ConstantField, Bubble1D, Bubble2D, SineMode, XSin2PiX,
                           DiracPoint, DiracLine, NodalField>;

/// True for fields with pointwise values (everything but Dirac and nodal data).
bool is_pointwise(const Field& f);
bool is_dirac(const Field& f);

/// Value at (x, y); y is ignored in 1D. Throws PreconditionError for non-pointwise fields.
double field_value(const Field& f, double x, double y = 0.0);
/// Gradient (d/dx, d/dy).
std::array<double, 2> field_gradient(const Field& f, double x, double y = 0.0);

std::string field_name(const Field& f);

}  // namespace fracstep
