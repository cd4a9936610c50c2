#include "fracstep/fields.hpp"

#include <cmath>
#include <numbers>

#include "fracstep/errors.hpp"

namespace fracstep {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

constexpr double kPi = std::numbers::pi;

}  // namespace

Polyline Polyline::square(double lo, double hi) {
  return Polyline{{{lo, lo}, {hi, lo}, {hi, hi}, {lo, hi}}};
}

double Polyline::length() const {
  double total = 0;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const auto& a = vertices[i];
    const auto& b = vertices[(i + 1) % vertices.size()];
    total += std::hypot(b[0] - a[0], b[1] - a[1]);
  }
  return total;
}

bool is_pointwise(const Field& f) {
  return !std::holds_alternative<DiracPoint>(f) && !std::holds_alternative<DiracLine>(f) &&
         !std::holds_alternative<NodalField>(f);
}

bool is_dirac(const Field& f) {
  return std::holds_alternative<DiracPoint>(f) || std::holds_alternative<DiracLine>(f);
}

double field_value(const Field& f, double x, double y) {
  return std::visit(
      Overloaded{
          [](const ZeroField&) { return 0.0; },
          [](const ConstantField& c) { return c.value; },
          [&](const Bubble1D&) { return x * (1 - x); },
          [&](const Bubble2D&) { return x * (1 - x) * y * (1 - y); },
          [&](const SineMode& s) {
            if (s.n == 0) return s.amplitude * std::numbers::sqrt2 * std::sin(s.m * kPi * x);
            return s.amplitude * 2 * std::sin(s.m * kPi * x) * std::sin(s.n * kPi * y);
          },
          [&](const XSin2PiX&) { return x * std::sin(2 * kPi * x); },
          [](const auto&) -> double {
            throw PreconditionError("field_value: field has no pointwise values");
          },
      },
      f);
}

std::array<double, 2> field_gradient(const Field& f, double x, double y) {
  using G = std::array<double, 2>;
  return std::visit(
      Overloaded{
          [](const ZeroField&) { return G{0, 0}; },
          [](const ConstantField&) { return G{0, 0}; },
          [&](const Bubble1D&) { return G{1 - 2 * x, 0}; },
          [&](const Bubble2D&) { return G{(1 - 2 * x) * y * (1 - y), x * (1 - x) * (1 - 2 * y)}; },
          [&](const SineMode& s) {
            const double a = s.m * kPi;
            if (s.n == 0) return G{s.amplitude * std::numbers::sqrt2 * a * std::cos(a * x), 0};
            const double b = s.n * kPi;
            return G{s.amplitude * 2 * a * std::cos(a * x) * std::sin(b * y),
                     s.amplitude * 2 * b * std::sin(a * x) * std::cos(b * y)};
          },
          [&](const XSin2PiX&) {
            return G{std::sin(2 * kPi * x) + 2 * kPi * x * std::cos(2 * kPi * x), 0};
          },
          [](const auto&) -> G {
            throw PreconditionError("field_gradient: field has no pointwise values");
          },
      },
      f);
}

std::string field_name(const Field& f) {
  return std::visit(Overloaded{
                        [](const ZeroField&) { return std::string("zero"); },
                        [](const ConstantField&) { return std::string("constant"); },
                        [](const Bubble1D&) { return std::string("bubble1d"); },
                        [](const Bubble2D&) { return std::string("bubble2d"); },
                        [](const SineMode&) { return std::string("sine_mode"); },
                        [](const XSin2PiX&) { return std::string("x_sin_2pi_x"); },
                        [](const DiracPoint&) { return std::string("dirac_point"); },
                        [](const DiracLine&) { return std::string("dirac_line"); },
                        [](const NodalField&) { return std::string("nodal"); },
                    },
                    f);
}

}  // namespace fracstep
