#include "fracstep/spectral_reference.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fmt/format.h>
#include <numbers>

#include "fracstep/errors.hpp"
#include "fracstep/linear_solver.hpp"

namespace fracstep {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

constexpr double kPi = std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr int kExpSeriesTerms = 60;
// Accepted cancellation factor sum |t_k| / |sum t_k| when a term is evaluated by its power series.
constexpr double kSeriesConditionMax = 64;

double sinc(double x) { return x == 0 ? 1.0 : std::sin(x) / x; }

// 1D coefficient sequences against sqrt(2) sin(m pi x), m = 1..M.
using Sequence = std::vector<double>;

Sequence sequence(int modes, auto&& f) {
  Sequence s(modes);
  for (int m = 1; m <= modes; ++m) s[m - 1] = f(m);
  return s;
}

double odd(int m) { return m % 2 == 1 ? 1.0 : 0.0; }

Sequence constant_coeffs(int modes) {
  return sequence(modes, [](int m) { return kSqrt2 * 2 * odd(m) / (m * kPi); });
}

Sequence bubble_coeffs(int modes) {
  return sequence(modes, [](int m) { return 4 * kSqrt2 * odd(m) / std::pow(m * kPi, 3); });
}

Sequence unit_coeffs(int modes, int k) {
  Sequence s(modes, 0.0);
  if (k >= 1 && k <= modes) s[k - 1] = 1.0;
  return s;
}

// int_0^1 x cos(k pi x) dx
double x_cos_integral(int k) {
  if (k == 0) return 0.5;
  return ((k % 2 == 0 ? 1.0 : -1.0) - 1.0) / ((k * kPi) * (k * kPi));
}

Sequence x_sin_2pi_x_coeffs(int modes) {
  return sequence(modes, [](int m) {
    return kSqrt2 * 0.5 * (x_cos_integral(std::abs(m - 2)) - x_cos_integral(m + 2));
  });
}

Sequence point_coeffs(int modes, double x0) {
  return sequence(modes, [&](int m) { return kSqrt2 * std::sin(m * kPi * x0); });
}

// sqrt(2) int_a^b sin(m pi x) dx
Sequence segment_coeffs(int modes, double a, double b) {
  return sequence(modes, [&](int m) {
    return kSqrt2 * (std::cos(m * kPi * a) - std::cos(m * kPi * b)) / (m * kPi);
  });
}

ModalCoefficients line_coeffs(const Polyline& gamma, int modes) {
  ModalCoefficients c{DomainKind::UnitSquare, modes, {}};
  const auto& v = gamma.vertices;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& p = v[i];
    const auto& q = v[(i + 1) % v.size()];
    if (p[1] == q[1]) {
      c.terms.push_back({1.0, segment_coeffs(modes, std::min(p[0], q[0]), std::max(p[0], q[0])),
                         point_coeffs(modes, p[1])});
    } else if (p[0] == q[0]) {
      c.terms.push_back({1.0, point_coeffs(modes, p[0]),
                         segment_coeffs(modes, std::min(p[1], q[1]), std::max(p[1], q[1]))});
    } else {
      throw PreconditionError("eigen_coeffs: polyline segments must be axis-aligned");
    }
  }
  return c;
}

[[noreturn]] void wrong_dimension(const Field& v, DomainKind domain) {
  throw PreconditionError(fmt::format("eigen_coeffs: {} has no expansion on the {}",
                                      field_name(v),
                                      domain == DomainKind::Interval ? "interval" : "square"));
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// Modal responses

template <std::floating_point Real>
ModalResponse<Real>::ModalResponse(Real alpha) : kind_(Kind::Initial), alpha_(alpha) {
  mlf_.emplace_back(alpha, Real(1));
}

template <std::floating_point Real>
ModalResponse<Real>::ModalResponse(Real alpha, const TimeFactor& g) : alpha_(alpha) {
  std::visit(Overloaded{
                 [&](const ConstantTime& c) {
                   kind_ = Kind::Power;
                   scale_ = c.c;
                 },
                 [&](const PowerTime& p) {
                   kind_ = Kind::Power;
                   gamma_ = p.gamma;
                   scale_ = Real(p.c) * std::tgamma(Real(p.gamma) + 1);
                 },
                 [&](const ExpMinusOneTime& e) {
                   kind_ = Kind::ExpMinusOne;
                   scale_ = e.c;
                 },
             },
             g);
  if (kind_ == Kind::Power) {
    mlf_.emplace_back(alpha, gamma_ + alpha + 1);
  } else {
    mlf_.reserve(kExpSeriesTerms);
    for (int k = 1; k <= kExpSeriesTerms; ++k) mlf_.emplace_back(alpha, alpha + k + 1);
  }
}

template <std::floating_point Real>
Real ModalResponse<Real>::operator()(Real lambda, Real t) const {
  const Real x = -lambda * std::pow(t, alpha_);
  switch (kind_) {
    case Kind::Initial:
      return mlf_[0](x);
    case Kind::Power:
      if (t == 0) return 0;
      return scale_ * std::pow(t, gamma_ + alpha_) * mlf_[0](x);
    case Kind::ExpMinusOne: {
      if (t == 0) return 0;
      Real sum = 0;
      Real power = std::pow(t, alpha_);
      for (int k = 1; k <= kExpSeriesTerms; ++k) {
        power *= t;
        const auto& e = mlf_[k - 1];
        // Later terms carry little weight: a mildly ill-conditioned power series is accurate
        // enough for them and avoids the integral route on the transition band.
        Real value = 0;
        bool done = false;
        if (k > 1 && std::abs(x) > e.series_radius() && x > -e.asymptotic_radius()) {
          Real cond = 0;
          value = e.series(x, &cond);
          done = std::isfinite(cond) &&
                 cond * std::abs(power * value) <= kSeriesConditionMax * std::abs(sum);
        }
        if (!done) value = e(x);
        const Real term = power * value;
        sum += term;
        if (std::abs(term) <= std::numeric_limits<Real>::epsilon() / 4 * std::abs(sum)) break;
      }
      return scale_ * sum;
    }
  }
  return 0;
}

template class ModalResponse<double>;
template class ModalResponse<long double>;

// ---------------------------------------------------------------------------------------------
// Continuous expansions

double ModalCoefficients::operator()(int m, int n) const {
  double s = 0;
  for (const auto& t : terms)
    s += t.scale * t.x[m - 1] * (domain == DomainKind::Interval ? 1.0 : t.y[n - 1]);
  return s;
}

std::vector<double> ModalCoefficients::dense() const {
  if (domain == DomainKind::Interval) {
    std::vector<double> c(modes, 0.0);
    for (const auto& t : terms)
      for (int m = 0; m < modes; ++m) c[m] += t.scale * t.x[m];
    return c;
  }
  std::vector<double> c(static_cast<std::size_t>(modes) * modes, 0.0);
  for (const auto& t : terms)
    for (int m = 0; m < modes; ++m)
      for (int n = 0; n < modes; ++n)
        c[static_cast<std::size_t>(m) * modes + n] += t.scale * t.x[m] * t.y[n];
  return c;
}

ModalCoefficients eigen_coeffs(const Field& v, DomainKind domain, int modes) {
  if (modes < 1) throw PreconditionError("eigen_coeffs: need at least one mode");
  const bool line = domain == DomainKind::Interval;
  auto one_d = [&](Sequence s) { return ModalCoefficients{domain, modes, {{1.0, std::move(s), {}}}}; };
  auto two_d = [&](double scale, Sequence x, Sequence y) {
    return ModalCoefficients{domain, modes, {{scale, std::move(x), std::move(y)}}};
  };
  return std::visit(
      Overloaded{
          [&](const ZeroField&) { return ModalCoefficients{domain, modes, {}}; },
          [&](const ConstantField& c) {
            if (line) return ModalCoefficients{domain, modes, {{c.value, constant_coeffs(modes), {}}}};
            return two_d(c.value, constant_coeffs(modes), constant_coeffs(modes));
          },
          [&](const Bubble1D&) {
            if (!line) wrong_dimension(v, domain);
            return one_d(bubble_coeffs(modes));
          },
          [&](const Bubble2D&) {
            if (line) wrong_dimension(v, domain);
            return two_d(1.0, bubble_coeffs(modes), bubble_coeffs(modes));
          },
          [&](const SineMode& s) {
            if (line != (s.n == 0)) wrong_dimension(v, domain);
            if (line) return ModalCoefficients{domain, modes, {{s.amplitude, unit_coeffs(modes, s.m), {}}}};
            return two_d(s.amplitude, unit_coeffs(modes, s.m), unit_coeffs(modes, s.n));
          },
          [&](const XSin2PiX&) {
            if (!line) wrong_dimension(v, domain);
            return one_d(x_sin_2pi_x_coeffs(modes));
          },
          [&](const DiracPoint& d) {
            if (!line) wrong_dimension(v, domain);
            return one_d(point_coeffs(modes, d.x0));
          },
          [&](const DiracLine& d) {
            if (line) wrong_dimension(v, domain);
            return line_coeffs(d.gamma, modes);
          },
          [&](const NodalField&) -> ModalCoefficients {
            throw PreconditionError("eigen_coeffs: nodal data has no continuous expansion");
          },
      },
      v);
}

double continuous_eigenvalue(DomainKind domain, int m, int n) {
  const double s = domain == DomainKind::Interval ? double(m) * m : double(m) * m + double(n) * n;
  return s * kPi * kPi;
}

SeriesField::SeriesField(DomainKind domain, int modes, std::vector<double> coeffs)
    : domain_(domain), modes_(modes), coeffs_(std::move(coeffs)) {
  const std::size_t want = domain == DomainKind::Interval
                               ? static_cast<std::size_t>(modes)
                               : static_cast<std::size_t>(modes) * modes;
  if (coeffs_.size() != want) throw PreconditionError("SeriesField: coefficient count mismatch");
}

double SeriesField::value(double x, double y) const {
  if (domain_ == DomainKind::Interval) {
    double s = 0;
    for (int m = 1; m <= modes_; ++m) s += coeffs_[m - 1] * std::sin(m * kPi * x);
    return kSqrt2 * s;
  }
  std::vector<double> sy(modes_);
  for (int n = 1; n <= modes_; ++n) sy[n - 1] = std::sin(n * kPi * y);
  double s = 0;
  for (int m = 1; m <= modes_; ++m) {
    double row = 0;
    const double* c = coeffs_.data() + static_cast<std::size_t>(m - 1) * modes_;
    for (int n = 0; n < modes_; ++n) row += c[n] * sy[n];
    s += row * std::sin(m * kPi * x);
  }
  return 2 * s;
}

std::vector<double> SeriesField::values_on_grid(std::span<const double> xs,
                                                std::span<const double> ys) const {
  const int M = modes_;
  std::vector<double> sx(static_cast<std::size_t>(xs.size()) * M);
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (int m = 0; m < M; ++m) sx[i * M + m] = kSqrt2 * std::sin((m + 1) * kPi * xs[i]);
  if (domain_ == DomainKind::Interval) {
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double s = 0;
      for (int m = 0; m < M; ++m) s += coeffs_[m] * sx[i * M + m];
      out[i] = s;
    }
    return out;
  }
  std::vector<double> out(xs.size() * ys.size());
  std::vector<double> sy(M), row(M);
  for (std::size_t j = 0; j < ys.size(); ++j) {
    for (int n = 0; n < M; ++n) sy[n] = kSqrt2 * std::sin((n + 1) * kPi * ys[j]);
    for (int m = 0; m < M; ++m) {
      const double* c = coeffs_.data() + static_cast<std::size_t>(m) * M;
      double s = 0;
      for (int n = 0; n < M; ++n) s += c[n] * sy[n];
      row[m] = s;
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double s = 0;
      for (int m = 0; m < M; ++m) s += row[m] * sx[i * M + m];
      out[j * xs.size() + i] = s;
    }
  }
  return out;
}

double SeriesField::l2_norm_squared() const {
  double s = 0;
  for (double c : coeffs_) s += c * c;
  return s;
}

SeriesField exact_solution(const ProblemSpec& spec, double t, int modes) {
  spec.validate();
  if (t < 0) throw PreconditionError("exact_solution: negative time");
  const DomainKind domain = spec.domain;
  const bool line = domain == DomainKind::Interval;

  std::vector<double> initial;
  if (spec.has_initial()) initial = eigen_coeffs(spec.initial, domain, modes).dense();
  std::vector<std::vector<double>> source;
  std::vector<ModalResponse<double>> responses;
  for (const auto& term : spec.source) {
    source.push_back(eigen_coeffs(term.w, domain, modes).dense());
    responses.emplace_back(spec.alpha, term.g);
  }
  const ModalResponse<double> homogeneous(spec.alpha);

  // Responses depend on lambda = s pi^2 only; s = m^2 (+ n^2) repeats on the square.
  const int max_s = line ? modes * modes : 2 * modes * modes;
  std::vector<char> needed(max_s + 1, 0);
  for (int m = 1; m <= modes; ++m) {
    if (line) {
      needed[m * m] = 1;
    } else {
      for (int n = 1; n <= modes; ++n) needed[m * m + n * n] = 1;
    }
  }
  std::vector<int> distinct;
  for (int s = 1; s <= max_s; ++s)
    if (needed[s]) distinct.push_back(s);

  const std::size_t nresp = responses.size() + 1;
  std::vector<double> table(static_cast<std::size_t>(max_s + 1) * nresp, 0.0);
  const int count = static_cast<int>(distinct.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (int i = 0; i < count; ++i) {
    const int s = distinct[i];
    const double lambda = s * kPi * kPi;
    double* row = table.data() + static_cast<std::size_t>(s) * nresp;
    row[0] = spec.has_initial() ? (t == 0 ? 1.0 : homogeneous(lambda, t)) : 0.0;
    for (std::size_t r = 0; r < responses.size(); ++r) row[r + 1] = responses[r](lambda, t);
  }

  const std::size_t total = line ? modes : static_cast<std::size_t>(modes) * modes;
  std::vector<double> coeffs(total, 0.0);
  for (std::size_t k = 0; k < total; ++k) {
    const int m = line ? static_cast<int>(k) + 1 : static_cast<int>(k / modes) + 1;
    const int n = line ? 0 : static_cast<int>(k % modes) + 1;
    const double* row = table.data() + static_cast<std::size_t>(m * m + n * n) * nresp;
    double c = initial.empty() ? 0.0 : row[0] * initial[k];
    for (std::size_t r = 0; r < source.size(); ++r) c += row[r + 1] * source[r][k];
    coeffs[k] = c;
  }
  return SeriesField(domain, modes, std::move(coeffs));
}

int default_truncation(const ProblemSpec& spec, double t) {
  constexpr double kLambdaCut = 50.0;
  const double scale = t > 0 ? std::pow(t, spec.alpha) : 1e-300;
  const double m = std::sqrt(kLambdaCut / scale) / kPi;
  const int modes = static_cast<int>(std::min(m, 1e6));
  return static_cast<int>(std::bit_ceil(static_cast<unsigned>(std::max(16, modes))));
}

double converged_series_value(const ProblemSpec& spec, double t,
                              const std::function<double(const SeriesField&)>& evaluate,
                              double tol, int initial_modes, int max_modes) {
  int modes = initial_modes > 0 ? initial_modes : default_truncation(spec, t);
  double previous = evaluate(exact_solution(spec, t, modes));
  while (modes < max_modes) {
    modes *= 2;
    const double current = evaluate(exact_solution(spec, t, modes));
    if (std::abs(current - previous) <= tol) return current;
    previous = current;
  }
  throw SelfCheckError(fmt::format(
      "series truncation did not converge to {} by {} modes at t = {}", tol, max_modes, t));
}

double l2_error_vs_series(const GridFunction& g, const SeriesField& exact) {
  const Mesh& mesh = g.mesh;
  const bool line = mesh.kind() == MeshKind::Interval;
  if (line != (exact.domain() == DomainKind::Interval))
    throw PreconditionError("l2_error_vs_series: mesh and series live on different domains");
  if (static_cast<int>(g.values.size()) != mesh.num_interior())
    throw PreconditionError("l2_error_vs_series: coefficient count mismatch");

  const int n = mesh.cells();
  const double h = mesh.h();
  const int M = exact.modes();
  const auto u = exact.coeffs();
  const double gg = assemble_mass(mesh).quadratic_form(g.values);

  double cross = 0;
  if (line) {
    for (int m = 1; m <= M; ++m) {
      const double a = m * kPi;
      double s = 0;
      for (int i = 1; i < n; ++i) s += g.values[i - 1] * std::sin(a * i * h);
      const double hat = h * sinc(a * h / 2) * sinc(a * h / 2);
      cross += u[m - 1] * kSqrt2 * hat * s;
    }
  } else {
    // (psi_ij, 2 sin(a x) sin(b y)) = CC (Psi(a,-b) - Psi(a,b)) + SS (Psi(a,-b) + Psi(a,b))
    // where Psi is the Fourier transform of the hat centered at the node.
    const int ni = n - 1;
    std::vector<double> cosx(static_cast<std::size_t>(M) * ni), sinx(cosx.size());
    for (int m = 0; m < M; ++m)
      for (int i = 0; i < ni; ++i) {
        cosx[static_cast<std::size_t>(m) * ni + i] = std::cos((m + 1) * kPi * (i + 1) * h);
        sinx[static_cast<std::size_t>(m) * ni + i] = std::sin((m + 1) * kPi * (i + 1) * h);
      }
    auto psi = [&](double xi, double eta) {
      return h * h * sinc(xi * h / 2) * sinc(eta * h / 2) * sinc((xi + eta) * h / 2);
    };
#pragma omp parallel for reduction(+ : cross) schedule(static)
    for (int m = 0; m < M; ++m) {
      // Partial sums over the x index for fixed y index j.
      std::vector<double> cm(ni), sm(ni);
      const double* cx = cosx.data() + static_cast<std::size_t>(m) * ni;
      const double* sx = sinx.data() + static_cast<std::size_t>(m) * ni;
      for (int j = 0; j < ni; ++j) {
        const double* c = g.values.data() + static_cast<std::size_t>(j) * ni;
        double sc = 0, ss = 0;
        for (int i = 0; i < ni; ++i) {
          sc += c[i] * cx[i];
          ss += c[i] * sx[i];
        }
        cm[j] = sc;
        sm[j] = ss;
      }
      const double a = (m + 1) * kPi;
      double row = 0;
      for (int k = 0; k < M; ++k) {
        const double* cy = cosx.data() + static_cast<std::size_t>(k) * ni;
        const double* sy = sinx.data() + static_cast<std::size_t>(k) * ni;
        double cc = 0, ss = 0;
        for (int j = 0; j < ni; ++j) {
          cc += cm[j] * cy[j];
          ss += sm[j] * sy[j];
        }
        const double b = (k + 1) * kPi;
        const double pm = psi(a, -b), pp = psi(a, b);
        row += u[static_cast<std::size_t>(m) * M + k] * (cc * (pm - pp) + ss * (pm + pp));
      }
      cross += row;
    }
  }
  const double err2 = gg - 2 * cross + exact.l2_norm_squared();
  return std::sqrt(std::max(err2, 0.0));
}

// ---------------------------------------------------------------------------------------------
// Semidiscrete references

template <std::floating_point Real>
SpectralTrajectory<Real>::SpectralTrajectory(Real alpha, DenseBasis<Real> basis,
                                             std::vector<Real> eigenvalues,
                                             std::vector<Real> initial_coeffs,
                                             std::vector<SourceModes> sources)
    : alpha_(alpha),
      basis_(std::move(basis)),
      eigenvalues_(std::move(eigenvalues)),
      initial_(std::move(initial_coeffs)),
      sources_(std::move(sources)),
      homogeneous_(alpha) {
  const std::size_t r = eigenvalues_.size();
  if (static_cast<std::size_t>(basis_.cols) != r || initial_.size() != r)
    throw PreconditionError("SpectralTrajectory: inconsistent sizes");
  for (const auto& s : sources_) {
    if (s.coeffs.size() != r) throw PreconditionError("SpectralTrajectory: inconsistent sizes");
    responses_.emplace_back(alpha, s.g);
  }
}

template <std::floating_point Real>
std::vector<Real> SpectralTrajectory<Real>::coordinates(Real t) const {
  const int r = rank();
  std::vector<Real> y(r);
  for (int i = 0; i < r; ++i) {
    const Real mu = eigenvalues_[i];
    Real c = 0;
    if (initial_[i] != 0) c = (t == 0 ? Real(1) : homogeneous_(mu, t)) * initial_[i];
    for (std::size_t s = 0; s < sources_.size(); ++s)
      if (sources_[s].coeffs[i] != 0) c += responses_[s](mu, t) * sources_[s].coeffs[i];
    y[i] = c;
  }
  return y;
}

template <std::floating_point Real>
std::vector<Real> SpectralTrajectory<Real>::value(Real t) const {
  const auto y = coordinates(t);
  std::vector<Real> u(basis_.rows, Real(0));
  for (int i = 0; i < rank(); ++i) {
    const Real* w = basis_.column(i);
    for (int k = 0; k < basis_.rows; ++k) u[k] += y[i] * w[k];
  }
  return u;
}

template class SpectralTrajectory<double>;
template class SpectralTrajectory<long double>;

template <std::floating_point Real>
GeneralizedEigen<Real> generalized_eigen(const BasicSparseOperator<Real>& stiffness,
                                         const BasicSparseOperator<Real>& mass) {
  const int n = stiffness.dim();
  if (mass.dim() != n) throw PreconditionError("generalized_eigen: dimension mismatch");
  if (n > kMaxDenseDim)
    throw PreconditionError(
        fmt::format("generalized_eigen: {} unknowns exceed the dense cap {}", n, kMaxDenseDim));

  // Dense Cholesky M = L L^T.
  DenseMatrix<Real> L(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      Real s = mass.at(i, j);
      for (int k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      if (i == j) {
        if (!(s > 0)) throw SolverError("generalized_eigen: mass matrix is not positive definite");
        L(i, i) = std::sqrt(s);
      } else {
        L(i, j) = s / L(j, j);
      }
    }
  auto forward = [&](std::vector<Real>& x) {  // x <- L^{-1} x
    for (int i = 0; i < n; ++i) {
      Real s = x[i];
      for (int k = 0; k < i; ++k) s -= L(i, k) * x[k];
      x[i] = s / L(i, i);
    }
  };

  // C = L^{-1} A L^{-T}, built column by column: X = L^{-1} A, then C = L^{-1} X^T.
  DenseMatrix<Real> X(n);
  std::vector<Real> col(n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) col[i] = stiffness.at(i, j);
    forward(col);
    for (int i = 0; i < n; ++i) X(i, j) = col[i];
  }
  DenseMatrix<Real> C(n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) col[i] = X(j, i);
    forward(col);
    for (int i = 0; i < n; ++i) C(i, j) = col[i];
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) C(i, j) = C(j, i) = (C(i, j) + C(j, i)) / 2;

  auto eig = jacobi_eigen(std::move(C));
  GeneralizedEigen<Real> out;
  out.values = std::move(eig.values);
  out.vectors = DenseBasis<Real>(n, n);
  for (int j = 0; j < n; ++j) {
    Real* v = out.vectors.column(j);
    for (int i = 0; i < n; ++i) v[i] = eig.vectors(i, j);
    for (int i = n - 1; i >= 0; --i) {  // v <- L^{-T} v
      Real s = v[i];
      for (int k = i + 1; k < n; ++k) s -= L(k, i) * v[k];
      v[i] = s / L(i, i);
    }
  }
  return out;
}

template GeneralizedEigen<double> generalized_eigen(const BasicSparseOperator<double>&,
                                                    const BasicSparseOperator<double>&);
template GeneralizedEigen<long double> generalized_eigen(const BasicSparseOperator<long double>&,
                                                         const BasicSparseOperator<long double>&);

namespace {

template <std::floating_point Real>
std::vector<Real> project_coordinates(const DenseBasis<Real>& basis, std::span<const Real> b) {
  std::vector<Real> c(basis.cols);
  for (int i = 0; i < basis.cols; ++i) {
    const Real* w = basis.column(i);
    Real s = 0;
    for (int k = 0; k < basis.rows; ++k) s += w[k] * b[k];
    c[i] = s;
  }
  return c;
}

template <std::floating_point To>
std::vector<To> cast_vector(std::span<const double> x) {
  return std::vector<To>(x.begin(), x.end());
}

}  // namespace

// Solves T y = b for a tridiagonal T (sub, diag, super) by elimination with partial pivoting;
// T may be indefinite and nearly singular. A zero pivot is replaced by eps * scale.
template <std::floating_point Real>
std::vector<Real> solve_tridiagonal(std::vector<Real> sub, std::vector<Real> diag,
                                    std::vector<Real> super, std::vector<Real> b, Real scale) {
  const int n = static_cast<int>(diag.size());
  const Real tiny = std::numeric_limits<Real>::epsilon() * scale;
  std::vector<Real> super2(std::max(0, n - 2), Real(0));
  for (int i = 0; i + 1 < n; ++i) {
    if (std::abs(diag[i]) >= std::abs(sub[i])) {
      if (diag[i] == 0) diag[i] = tiny;
      const Real f = sub[i] / diag[i];
      diag[i + 1] -= f * super[i];
      b[i + 1] -= f * b[i];
    } else {
      const Real f = diag[i] / sub[i];
      diag[i] = sub[i];
      const Real d1 = diag[i + 1];
      diag[i + 1] = super[i] - f * d1;
      if (i + 2 < n) {
        super2[i] = super[i + 1];
        super[i + 1] = -f * super2[i];
      }
      super[i] = d1;
      std::swap(b[i], b[i + 1]);
      b[i + 1] -= f * b[i];
    }
  }
  if (diag[n - 1] == 0) diag[n - 1] = tiny;
  for (int i = n - 1; i >= 0; --i) {
    Real s = b[i];
    if (i + 1 < n) s -= super[i] * b[i + 1];
    if (i + 2 < n) s -= super2[i] * b[i + 2];
    b[i] = s / diag[i];
  }
  return b;
}

// Jacobi on the reduced matrix is accurate to eps ||A|| in absolute terms, a relative error of
// eps ||A|| / lambda_1 (1e-14 at h = 1/100) on the smallest eigenvalues, which dominate the
// solution at later times. Two steps of shifted inverse iteration on the tridiagonal pencil
// restore full relative accuracy.
template <std::floating_point Real>
void refine_tridiagonal_pairs(const BasicSparseOperator<Real>& A, const BasicSparseOperator<Real>& M,
                              GeneralizedEigen<Real>& eig) {
  const int n = A.dim();
  Real scale = 0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(A.at(i, i)));
  std::vector<Real> x(n), Mx(n), Ay(n), My(n);
  for (int j = 0; j < eig.vectors.cols; ++j) {
    Real* col = eig.vectors.column(j);
    std::copy(col, col + n, x.begin());
    Real lambda = eig.values[j];
    for (int pass = 0; pass < 2; ++pass) {
      std::vector<Real> sub(std::max(0, n - 1)), diag(n), super(std::max(0, n - 1));
      for (int i = 0; i < n; ++i) {
        diag[i] = A.at(i, i) - lambda * M.at(i, i);
        if (i + 1 < n) {
          super[i] = A.at(i, i + 1) - lambda * M.at(i, i + 1);
          sub[i] = A.at(i + 1, i) - lambda * M.at(i + 1, i);
        }
      }
      M.apply(x, Mx);
      auto y = solve_tridiagonal<Real>(std::move(sub), std::move(diag), std::move(super), Mx, scale);
      M.apply(y, My);
      Real norm2 = 0, overlap = 0;
      for (int i = 0; i < n; ++i) {
        norm2 += y[i] * My[i];
        overlap += y[i] * Mx[i];
      }
      const Real s = (overlap < 0 ? Real(-1) : Real(1)) / std::sqrt(norm2);
      for (int i = 0; i < n; ++i) x[i] = s * y[i];
      A.apply(x, Ay);
      lambda = std::inner_product(x.begin(), x.end(), Ay.begin(), Real(0));
    }
    std::copy(x.begin(), x.end(), col);
    eig.values[j] = lambda;
  }
}

template <std::floating_point Real>
SpectralTrajectory<Real> semidiscrete_exact_1d(const ProblemSpec& spec, const FemOperators& ops,
                                               FemKind fem, std::span<const Real> v_h) {
  spec.validate();
  if (spec.domain != DomainKind::Interval || ops.mesh.kind() != MeshKind::Interval)
    throw PreconditionError("semidiscrete_exact_1d: interval problems only");
  const int n = ops.mesh.num_interior();
  if (static_cast<int>(v_h.size()) != n)
    throw PreconditionError("semidiscrete_exact_1d: v_h has the wrong length");

  const auto A = ops.stiffness.cast<Real>();
  const auto M = ops.time_mass(fem).cast<Real>();
  auto eig = generalized_eigen(A, M);
  refine_tridiagonal_pairs(A, M, eig);

  const auto Mv = M.apply(v_h);
  auto initial = project_coordinates<Real>(eig.vectors, Mv);
  std::vector<typename SpectralTrajectory<Real>::SourceModes> sources;
  for (const auto& term : spec.source) {
    const auto load = cast_vector<Real>(load_vector(ops.mesh, term.w, 2));
    sources.push_back({term.g, project_coordinates<Real>(eig.vectors, load)});
  }
  return SpectralTrajectory<Real>(Real(spec.alpha), std::move(eig.vectors), std::move(eig.values),
                                  std::move(initial), std::move(sources));
}

template SpectralTrajectory<double> semidiscrete_exact_1d(const ProblemSpec&, const FemOperators&,
                                                          FemKind, std::span<const double>);
template SpectralTrajectory<long double> semidiscrete_exact_1d(const ProblemSpec&,
                                                               const FemOperators&, FemKind,
                                                               std::span<const long double>);

SpectralTrajectory<double> krylov_reference(double alpha, const FemOperators& ops, FemKind fem,
                                            const SeparableTerm& source, int krylov_dim,
                                            int load_refine) {
  const SparseOperator& M = ops.time_mass(fem);
  const int n = M.dim();
  const SpdSolver<double> mass_solver(M);
  const SpdSolver<double> stiffness_solver(ops.stiffness);
  const auto load = load_vector(ops.mesh, source.w, load_refine);

  std::vector<double> tmp(n);
  auto m_dot = [&](std::span<const double> x, std::span<const double> y) {
    M.apply(y, tmp);
    double s = 0;
    for (int i = 0; i < n; ++i) s += x[i] * tmp[i];
    return s;
  };

  // Lanczos for B = A^{-1} M, self-adjoint in the M inner product. Its eigenvalues 1/lambda
  // cluster at 0, where the modal responses are smooth, so few steps suffice.
  std::vector<double> z(n), Mq(n);
  std::vector<double> q = mass_solver.solve(load);
  const double start_norm = std::sqrt(m_dot(q, q));
  if (start_norm == 0) throw PreconditionError("krylov_reference: zero source");
  for (double& x : q) x /= start_norm;

  std::vector<std::vector<double>> V;
  std::vector<double> diag, off;
  krylov_dim = std::min(krylov_dim, n);
  for (int j = 0; j < krylov_dim; ++j) {
    V.push_back(q);
    M.apply(q, Mq);
    stiffness_solver.solve(Mq, z);
    diag.push_back(std::inner_product(Mq.begin(), Mq.end(), z.begin(), 0.0));
    // Full reorthogonalization in the M inner product, twice.
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& v : V) {
        const double c = m_dot(v, z);
        for (int i = 0; i < n; ++i) z[i] -= c * v[i];
      }
    const double beta = std::sqrt(m_dot(z, z));
    if (j + 1 == krylov_dim || beta <= 1e-13 * diag.front()) break;
    off.push_back(beta);
    for (int i = 0; i < n; ++i) q[i] = z[i] / beta;
  }

  const int k = static_cast<int>(V.size());
  DenseMatrix<double> T(k);
  for (int i = 0; i < k; ++i) {
    T(i, i) = diag[i];
    if (i + 1 < k) T(i, i + 1) = T(i + 1, i) = off[i];
  }
  auto eig = jacobi_eigen(std::move(T));

  std::vector<double> lambda(k);
  DenseBasis<double> ritz(n, k);
  for (int j = 0; j < k; ++j) {
    if (!(eig.values[j] > 0)) throw SolverError("krylov_reference: non-positive Ritz value");
    lambda[j] = 1 / eig.values[j];
    double* w = ritz.column(j);
    for (int i = 0; i < k; ++i) {
      const double s = eig.vectors(i, j);
      for (int r = 0; r < n; ++r) w[r] += s * V[i][r];
    }
  }
  auto coeffs = project_coordinates<double>(ritz, load);
  std::vector<SpectralTrajectory<double>::SourceModes> sources{{source.g, std::move(coeffs)}};
  return SpectralTrajectory<double>(alpha, std::move(ritz), std::move(lambda),
                                    std::vector<double>(k, 0.0), std::move(sources));
}

}  // namespace fracstep
