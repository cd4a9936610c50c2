#pragma once

// Problem data for  d_t^alpha u - Laplace u = f,  u(0) = v,  on (0,1) or (0,1)^2 with
// homogeneous Dirichlet conditions. Sources are finite sums of separable terms g(t) w(x).

#include <string>
#include <variant>
#include <vector>

#include "fracstep/fields.hpp"

namespace fracstep {

enum class DomainKind { Interval, UnitSquare };

/// g(t) = c
struct ConstantTime {
  double c = 1.0;
};

/// g(t) = c t^gamma, gamma > -1
struct PowerTime {
  double c = 1.0;
  double gamma = 0.0;
};

/// g(t) = c (e^t - 1)
struct ExpMinusOneTime {
  double c = 1.0;
};

using TimeFactor = std::variant<ConstantTime, PowerTime, ExpMinusOneTime>;

double time_value(const TimeFactor& g, double t);

/// g^{(l)}(0). Throws PreconditionError when the derivative does not exist (for example
/// t^gamma with non-integer gamma < l).
double time_derivative_at_zero(const TimeFactor& g, int order);

/// True when g has `order` classical derivatives at t = 0.
bool smooth_at_zero(const TimeFactor& g, int order);

/// Integral of g over [a, b], 0 <= a <= b.
double time_integral(const TimeFactor& g, double a, double b);

std::string time_factor_name(const TimeFactor& g);

struct SeparableTerm {
  TimeFactor g;
  Field w;
};

struct ProblemSpec {
  DomainKind domain = DomainKind::Interval;
  double alpha = 0.5;
  double T = 1.0;
  Field initial = ZeroField{};
  std::vector<SeparableTerm> source;

  /// Throws PreconditionError on alpha outside (0, 1], T <= 0, 2D-only data on the interval
  /// (or vice versa), or a power exponent <= -1.
  void validate() const;

  bool has_initial() const { return !std::holds_alternative<ZeroField>(initial); }
};

int spatial_dim(DomainKind d);

}  // namespace fracstep
