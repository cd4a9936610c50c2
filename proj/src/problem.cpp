#include "fracstep/problem.hpp"

#include <cmath>
#include <fmt/format.h>

#include "fracstep/errors.hpp"

namespace fracstep {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

bool is_nonneg_integer(double x) { return x >= 0 && x == std::floor(x); }

// 0 = either dimension, 1 = interval only, 2 = square only.
int field_dimension(const Field& f) {
  return std::visit(Overloaded{
                        [](const Bubble1D&) { return 1; },
                        [](const XSin2PiX&) { return 1; },
                        [](const DiracPoint&) { return 1; },
                        [](const Bubble2D&) { return 2; },
                        [](const DiracLine&) { return 2; },
                        [](const SineMode& s) { return s.n == 0 ? 1 : 2; },
                        [](const auto&) { return 0; },
                    },
                    f);
}

}  // namespace

double time_value(const TimeFactor& g, double t) {
  return std::visit(Overloaded{
                        [](const ConstantTime& c) { return c.c; },
                        [&](const PowerTime& p) { return p.c * std::pow(t, p.gamma); },
                        [&](const ExpMinusOneTime& e) { return e.c * std::expm1(t); },
                    },
                    g);
}

bool smooth_at_zero(const TimeFactor& g, int order) {
  if (const auto* p = std::get_if<PowerTime>(&g))
    return is_nonneg_integer(p->gamma) || p->gamma > order;
  return true;
}

double time_derivative_at_zero(const TimeFactor& g, int order) {
  if (order < 0) throw PreconditionError("time_derivative_at_zero: negative order");
  return std::visit(
      Overloaded{
          [&](const ConstantTime& c) { return order == 0 ? c.c : 0.0; },
          [&](const PowerTime& p) {
            if (is_nonneg_integer(p.gamma)) {
              if (order != static_cast<int>(p.gamma)) return 0.0;
              return p.c * std::tgamma(p.gamma + 1);
            }
            if (p.gamma > order) return 0.0;
            throw PreconditionError(fmt::format(
                "time factor t^{} has no derivative of order {} at t = 0", p.gamma, order));
          },
          [&](const ExpMinusOneTime& e) { return order == 0 ? 0.0 : e.c; },
      },
      g);
}

double time_integral(const TimeFactor& g, double a, double b) {
  return std::visit(Overloaded{
                        [&](const ConstantTime& c) { return c.c * (b - a); },
                        [&](const PowerTime& p) {
                          const double e = p.gamma + 1;
                          return p.c * (std::pow(b, e) - std::pow(a, e)) / e;
                        },
                        // (e^b - e^a) - (b - a), written to keep accuracy for small b - a
                        [&](const ExpMinusOneTime& x) {
                          return x.c * (std::exp(a) * std::expm1(b - a) - (b - a));
                        },
                    },
                    g);
}

std::string time_factor_name(const TimeFactor& g) {
  return std::visit(Overloaded{
                        [](const ConstantTime& c) { return fmt::format("{}", c.c); },
                        [](const PowerTime& p) { return fmt::format("{}*t^{}", p.c, p.gamma); },
                        [](const ExpMinusOneTime& e) { return fmt::format("{}*(e^t-1)", e.c); },
                    },
                    g);
}

int spatial_dim(DomainKind d) { return d == DomainKind::Interval ? 1 : 2; }

void ProblemSpec::validate() const {
  if (!(alpha > 0 && alpha <= 1)) throw PreconditionError("problem: alpha must lie in (0, 1]");
  if (!(T > 0) || !std::isfinite(T)) throw PreconditionError("problem: T must be positive");
  const int dim = spatial_dim(domain);
  auto check_field = [&](const Field& f, const char* what) {
    const int fd = field_dimension(f);
    if (fd != 0 && fd != dim)
      throw PreconditionError(fmt::format("problem: {} {} does not live on a {}D domain", what,
                                          field_name(f), dim));
  };
  check_field(initial, "initial data");
  for (const auto& term : source) {
    check_field(term.w, "source factor");
    if (is_dirac(term.w)) throw PreconditionError("problem: Dirac source factors are not supported");
    if (const auto* p = std::get_if<PowerTime>(&term.g); p && !(p->gamma > -1))
      throw PreconditionError("problem: power time factor needs gamma > -1");
  }
}

}  // namespace fracstep
