#include "fracstep/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <set>
#include <thread>

#include "fracstep/cq_stepper.hpp"
#include "fracstep/errors.hpp"
#include "fracstep/l1_stepper.hpp"
#include "fracstep/spectral_reference.hpp"

namespace fracstep {

using nlohmann::json;

// ---------------------------------------------------------------------------------------------
// Parsing

SchemeId SchemeId::parse(std::string_view name) {
  if (name == "l1") return {SchemeKind::L1, 1};
  if (name == "pg") return {SchemeKind::Pg, 1};
  if (name.size() == 4 && name.substr(0, 3) == "bdf" && name[3] >= '1' &&
      name[3] <= '0' + kMaxBdfOrder)
    return {SchemeKind::Bdf, name[3] - '0'};
  throw ConfigError(fmt::format("unknown scheme '{}' (expected bdf1..bdf6, l1 or pg)", name));
}

std::string SchemeId::name() const {
  switch (kind) {
    case SchemeKind::L1: return "l1";
    case SchemeKind::Pg: return "pg";
    case SchemeKind::Bdf: break;
  }
  return fmt::format("bdf{}", order);
}

ProblemSpec CaseConfig::problem(double alpha) const {
  ProblemSpec spec;
  spec.domain = domain;
  spec.alpha = alpha;
  spec.T = T;
  spec.initial = initial;
  spec.source = source;
  return spec;
}

namespace {

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                std::string_view where) {
  if (!obj.is_object()) throw ConfigError(fmt::format("{}: expected an object", where));
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError(fmt::format("{}: unknown key '{}'", where, key));
  }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback, std::string_view where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("{}.{}: wrong type", where, key));
  }
}

template <class T>
T get_required(const json& obj, const char* key, std::string_view where) {
  if (!obj.contains(key)) throw ConfigError(fmt::format("{}: missing '{}'", where, key));
  return get_or<T>(obj, key, T{}, where);
}

/// A scalar or a list of scalars.
template <class T>
std::vector<T> get_list(const json& obj, const char* key, std::string_view where) {
  if (!obj.contains(key)) throw ConfigError(fmt::format("{}: missing '{}'", where, key));
  const json& v = obj.at(key);
  try {
    if (v.is_array()) return v.get<std::vector<T>>();
    return {v.get<T>()};
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("{}.{}: wrong type", where, key));
  }
}

Field parse_field(const json& f, std::string_view where) {
  const auto kind = get_required<std::string>(f, "kind", where);
  if (kind == "zero") {
    check_keys(f, {"kind"}, where);
    return ZeroField{};
  }
  if (kind == "constant") {
    check_keys(f, {"kind", "value"}, where);
    return ConstantField{get_or(f, "value", 1.0, where)};
  }
  if (kind == "bubble1d") {
    check_keys(f, {"kind"}, where);
    return Bubble1D{};
  }
  if (kind == "bubble2d") {
    check_keys(f, {"kind"}, where);
    return Bubble2D{};
  }
  if (kind == "xsin2pix") {
    check_keys(f, {"kind"}, where);
    return XSin2PiX{};
  }
  if (kind == "sine") {
    check_keys(f, {"kind", "m", "n", "amplitude"}, where);
    return SineMode{get_or(f, "m", 1, where), get_or(f, "n", 0, where),
                    get_or(f, "amplitude", 1.0, where)};
  }
  if (kind == "dirac-point") {
    check_keys(f, {"kind", "x0"}, where);
    return DiracPoint{get_or(f, "x0", 0.5, where)};
  }
  if (kind == "dirac-line") {
    check_keys(f, {"kind", "lo", "hi"}, where);
    const double lo = get_or(f, "lo", 0.25, where), hi = get_or(f, "hi", 0.75, where);
    if (!(0 < lo && lo < hi && hi < 1))
      throw ConfigError(fmt::format("{}: need 0 < lo < hi < 1", where));
    return DiracLine{Polyline::square(lo, hi)};
  }
  throw ConfigError(fmt::format("{}: unknown field kind '{}'", where, kind));
}

TimeFactor parse_time_factor(const json& g, std::string_view where) {
  const auto kind = get_required<std::string>(g, "kind", where);
  if (kind == "constant") {
    check_keys(g, {"kind", "c"}, where);
    return ConstantTime{get_or(g, "c", 1.0, where)};
  }
  if (kind == "power") {
    check_keys(g, {"kind", "c", "gamma"}, where);
    return PowerTime{get_or(g, "c", 1.0, where), get_required<double>(g, "gamma", where)};
  }
  if (kind == "exp-minus-one") {
    check_keys(g, {"kind", "c"}, where);
    return ExpMinusOneTime{get_or(g, "c", 1.0, where)};
  }
  throw ConfigError(fmt::format("{}: unknown time factor kind '{}'", where, kind));
}

template <class E>
E parse_enum(const json& obj, const char* key, E fallback,
             std::initializer_list<std::pair<std::string_view, E>> names, std::string_view where) {
  if (!obj.contains(key)) return fallback;
  const auto s = get_required<std::string>(obj, key, where);
  for (const auto& [name, value] : names)
    if (s == name) return value;
  throw ConfigError(fmt::format("{}.{}: unknown value '{}'", where, key, s));
}

template <class T>
void check_increasing(const std::vector<T>& v, std::string_view what) {
  if (v.empty()) throw ConfigError(fmt::format("{}: empty list", what));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0)) throw ConfigError(fmt::format("{}: entries must be positive", what));
    if (i > 0 && !(v[i] > v[i - 1]))
      throw ConfigError(fmt::format("{}: entries must be strictly increasing", what));
  }
}

void validate_case(const CaseConfig& c) {
  const std::string where = c.label.empty() ? "config" : fmt::format("case '{}'", c.label);
  if (c.alphas.empty()) throw ConfigError(where + ": no alpha");
  for (double a : c.alphas)
    if (!(a > 0 && a < 1)) throw ConfigError(fmt::format("{}: alpha {} outside (0, 1)", where, a));
  check_increasing(c.cells, where + ": space.cells");
  check_increasing(c.N, where + ": time.N");
  if (c.schemes.empty()) throw ConfigError(where + ": no scheme");
  try {
    c.problem(c.alphas.front()).validate();
  } catch (const PreconditionError& e) {
    throw ConfigError(fmt::format("{}: {}", where, e.what()));
  }

  const bool interval = c.domain == DomainKind::Interval;
  const bool has_initial = !std::holds_alternative<ZeroField>(c.initial);
  if (is_dirac(c.initial) && c.projection != Projection::L2)
    throw ConfigError(where + ": Dirac initial data need the L2 projection");
  if (std::holds_alternative<NodalField>(c.initial))
    throw ConfigError(where + ": nodal initial data cannot be given in a config");
  switch (c.reference) {
    case ReferenceKind::DiscreteEigen:
      if (!interval) throw ConfigError(where + ": discrete-eigen reference needs the interval");
      if (c.cells.back() - 1 > kMaxDenseDim)
        throw ConfigError(fmt::format("{}: discrete-eigen reference limited to {} unknowns", where,
                                      kMaxDenseDim));
      break;
    case ReferenceKind::Krylov:
      if (has_initial || c.source.size() != 1)
        throw ConfigError(where + ": krylov reference needs zero initial data and one source");
      if (c.krylov_dim < 1) throw ConfigError(where + ": krylov_dim must be positive");
      break;
    case ReferenceKind::FineStep:
      if (c.refine < 2) throw ConfigError(where + ": fine-step refine must be at least 2");
      break;
    case ReferenceKind::Spectral:
      if (!(c.series_rel_tol > 0)) throw ConfigError(where + ": series_rel_tol must be positive");
      break;
  }
  for (const SchemeId& s : c.schemes) {
    if (s.kind == SchemeKind::Pg) {
      if (has_initial) throw ConfigError(where + ": pg needs zero initial data");
      if (c.corrected) throw ConfigError(where + ": pg has no corrected variant");
      if (c.precision != Precision::Double) throw ConfigError(where + ": pg runs in double");
      if (c.reference == ReferenceKind::Spectral || c.reference == ReferenceKind::FineStep)
        throw ConfigError(where + ": pg needs a discrete-eigen or krylov reference");
    }
    if (c.corrected && s.kind != SchemeKind::Pg) {
      const int order = s.kind == SchemeKind::Bdf ? s.order - 1 : 1;
      for (const auto& term : c.source)
        if (!smooth_at_zero(term.g, order))
          throw ConfigError(fmt::format("{}: corrected {} needs {} derivatives of {} at t = 0",
                                        where, s.name(), order, time_factor_name(term.g)));
    }
  }
}

CaseConfig parse_case(const json& doc, std::string label) {
  CaseConfig c;
  c.label = std::move(label);

  const json& problem = doc.at("problem");
  check_keys(problem, {"domain", "alpha", "T", "initial", "source"}, "problem");
  c.domain = parse_enum(problem, "domain", DomainKind::Interval,
                        {{"interval", DomainKind::Interval}, {"square", DomainKind::UnitSquare}},
                        "problem");
  c.alphas = get_list<double>(problem, "alpha", "problem");
  c.T = get_or(problem, "T", 1.0, "problem");
  if (problem.contains("initial")) c.initial = parse_field(problem.at("initial"), "problem.initial");
  if (problem.contains("source")) {
    if (!problem.at("source").is_array()) throw ConfigError("problem.source: expected a list");
    for (const auto& term : problem.at("source")) {
      check_keys(term, {"time", "space"}, "problem.source[]");
      if (!term.contains("time") || !term.contains("space"))
        throw ConfigError("problem.source[]: needs 'time' and 'space'");
      c.source.push_back({parse_time_factor(term.at("time"), "problem.source[].time"),
                          parse_field(term.at("space"), "problem.source[].space")});
    }
  }

  const json& space = doc.at("space");
  check_keys(space, {"cells", "fem", "projection"}, "space");
  c.cells = get_list<int>(space, "cells", "space");
  c.fem = parse_enum(space, "fem", FemKind::Galerkin,
                     {{"sg", FemKind::Galerkin}, {"lm", FemKind::LumpedMass}}, "space");
  c.projection = parse_enum(
      space, "projection", Projection::L2,
      {{"l2", Projection::L2}, {"ritz", Projection::Ritz}, {"nodal", Projection::Nodal}}, "space");

  const json& time = doc.at("time");
  check_keys(time, {"schemes", "corrected", "N"}, "time");
  for (const auto& s : get_list<std::string>(time, "schemes", "time"))
    c.schemes.push_back(SchemeId::parse(s));
  c.corrected = get_or(time, "corrected", false, "time");
  c.N = get_list<int>(time, "N", "time");

  const json& ref = doc.at("reference");
  check_keys(ref, {"kind", "precision", "refine", "series_rel_tol", "krylov_dim", "quadrature"},
             "reference");
  if (!ref.contains("kind")) throw ConfigError("reference: missing 'kind'");
  c.reference = parse_enum(ref, "kind", ReferenceKind::DiscreteEigen,
                           {{"discrete-eigen", ReferenceKind::DiscreteEigen},
                            {"spectral", ReferenceKind::Spectral},
                            {"krylov", ReferenceKind::Krylov},
                            {"fine-step", ReferenceKind::FineStep}},
                           "reference");
  c.precision = parse_enum(
      ref, "precision", Precision::Double,
      {{"double", Precision::Double}, {"long-double", Precision::LongDouble}}, "reference");
  c.refine = get_or(ref, "refine", c.refine, "reference");
  c.series_rel_tol = get_or(ref, "series_rel_tol", c.series_rel_tol, "reference");
  c.krylov_dim = get_or(ref, "krylov_dim", c.krylov_dim, "reference");
  if (ref.contains("quadrature")) {
    const json& q = ref.at("quadrature");
    check_keys(q, {"subintervals", "ratio", "self_check"}, "reference.quadrature");
    c.quadrature.subintervals = get_or(q, "subintervals", c.quadrature.subintervals, "quadrature");
    c.quadrature.ratio = get_or(q, "ratio", c.quadrature.ratio, "quadrature");
    c.quadrature.self_check = get_or(q, "self_check", c.quadrature.self_check, "quadrature");
  }
  validate_case(c);
  return c;
}

void set_path(json& doc, std::string_view path, json value) {
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key(path.substr(start, dot == std::string_view::npos ? path.npos : dot - start));
    if (key.empty()) throw ConfigError(fmt::format("override: bad path '{}'", path));
    if (!node->is_object()) throw ConfigError(fmt::format("override: '{}' is not an object", path));
    if (dot == std::string_view::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

}  // namespace

void apply_override(json& doc, std::string_view assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError(fmt::format("override '{}' is not key=value", assignment));
  const std::string_view text = assignment.substr(eq + 1);
  json value = json::parse(text.begin(), text.end(), nullptr, false);
  if (value.is_discarded()) value = std::string(text);
  set_path(doc, assignment.substr(0, eq), std::move(value));
}

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
  check_keys(doc, {"name", "problem", "space", "time", "reference", "output", "cases"}, "config");
  for (const char* section : {"problem", "space", "time", "reference"})
    if (!doc.contains(section)) throw ConfigError(fmt::format("config: missing '{}'", section));
  ExperimentConfig config;
  config.name = get_or<std::string>(doc, "name", "experiment", "config");
  if (doc.contains("output")) {
    const json& out = doc.at("output");
    check_keys(out, {"csv", "markdown"}, "output");
    config.csv = get_or<std::string>(out, "csv", "", "output");
    config.markdown = get_or(out, "markdown", false, "output");
  }
  if (config.csv.empty()) config.csv = config.name + ".csv";

  json base = doc;
  base.erase("cases");
  if (!doc.contains("cases")) {
    config.cases.push_back(parse_case(base, ""));
    return config;
  }
  if (!doc.at("cases").is_array() || doc.at("cases").empty())
    throw ConfigError("cases: expected a non-empty list");
  std::set<std::string> labels;
  for (const auto& entry : doc.at("cases")) {
    check_keys(entry, {"label", "set"}, "cases[]");
    const auto label = get_required<std::string>(entry, "label", "cases[]");
    if (!labels.insert(label).second) throw ConfigError(fmt::format("cases: duplicate '{}'", label));
    json resolved = base;
    if (entry.contains("set")) {
      if (!entry.at("set").is_object()) throw ConfigError("cases[].set: expected an object");
      for (const auto& [path, value] : entry.at("set").items()) set_path(resolved, path, value);
    }
    config.cases.push_back(parse_case(resolved, label));
  }
  return config;
}

ExperimentConfig ExperimentConfig::load(const std::string& path,
                                        std::span<const std::string> overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path));
  json doc = json::parse(in, nullptr, false, true);
  if (doc.is_discarded()) throw ConfigError(fmt::format("'{}' is not valid JSON", path));
  for (const auto& o : overrides) apply_override(doc, o);
  return from_json(doc);
}

// ---------------------------------------------------------------------------------------------
// Rates

std::vector<std::optional<double>> compute_rates(std::span<const double> errors,
                                                 std::span<const int> steps) {
  if (errors.size() != steps.size())
    throw PreconditionError("compute_rates: errors and steps differ in length");
  std::vector<std::optional<double>> rates(errors.size());
  for (std::size_t i = 1; i < errors.size(); ++i) {
    if (steps[i] != 2 * steps[i - 1]) continue;
    if (!(errors[i] > 0 && errors[i - 1] > 0)) continue;
    rates[i] = std::log2(errors[i - 1] / errors[i]);
  }
  return rates;
}

std::optional<double> overall_rate(std::span<const double> errors, std::span<const int> steps) {
  std::optional<std::size_t> first, last;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!(errors[i] > 0)) continue;
    if (!first) first = i;
    last = i;
  }
  if (!first || *first == *last) return std::nullopt;
  return std::log(errors[*first] / errors[*last]) /
         std::log(static_cast<double>(steps[*last]) / steps[*first]);
}

bool ExperimentReport::ok() const {
  return std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.error.has_value(); });
}

// ---------------------------------------------------------------------------------------------
// Cells

namespace {

Mesh make_mesh(DomainKind domain, int cells) {
  return domain == DomainKind::Interval ? Mesh::interval(cells) : Mesh::unit_square(cells);
}

std::vector<double> initial_vector(const CaseConfig& c, const Mesh& mesh) {
  if (std::holds_alternative<ZeroField>(c.initial))
    return std::vector<double>(mesh.num_interior(), 0.0);
  switch (c.projection) {
    case Projection::Ritz: return ritz_project(mesh, c.initial, 2).values;
    case Projection::Nodal: return nodal_interpolate(mesh, c.initial).values;
    case Projection::L2: break;
  }
  return l2_project(mesh, c.initial, 2).values;
}

template <std::floating_point Real>
std::vector<Real> march(const CaseConfig& c, const ProblemSpec& spec, const FemOperators& ops,
                        std::span<const Real> v, SchemeId scheme, int N) {
  if (scheme.kind == SchemeKind::Bdf) {
    CqOptions options;
    options.keep_all = false;
    return solve_cq<Real>(spec, ops, c.fem, v, scheme.order, N, c.corrected, options).final();
  }
  StepperOptions options;
  options.keep_all = false;
  return solve_l1<Real>(spec, ops, c.fem, v, N, c.corrected, options).final();
}

template <class Real>
double mass_distance(const SparseOperator& mass, std::span<const Real> u, std::span<const Real> w) {
  std::vector<Real> d(u.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = u[i] - w[i];
  return static_cast<double>(std::sqrt(mass.cast<Real>().quadratic_form(d)));
}

struct Unit {
  std::size_t case_index;
  double alpha;
  SchemeId scheme;
  int cells;
};

struct UnitResult {
  std::vector<std::optional<double>> errors;
  std::vector<std::string> failures;
};

UnitResult pg_unit(const CaseConfig& c, const Unit& u) {
  UnitResult result;
  const Mesh mesh = make_mesh(c.domain, u.cells);
  const FemOperators ops(mesh);
  const ProblemSpec spec = c.problem(u.alpha);
  const std::vector<double> zero(mesh.num_interior(), 0.0);
  const auto reference = c.reference == ReferenceKind::Krylov
                             ? krylov_reference(u.alpha, ops, c.fem, c.source.front(), c.krylov_dim)
                             : semidiscrete_exact_1d<double>(spec, ops, c.fem, zero);
  for (int N : c.N) {
    try {
      const auto traj = pg_solve(pg_assemble(spec, ops, c.fem, N));
      result.errors.push_back(pg_l2qt_error(traj, ops, reference, c.quadrature));
      result.failures.emplace_back();
    } catch (const std::exception& e) {
      result.errors.emplace_back();
      result.failures.emplace_back(e.what());
    }
  }
  return result;
}

template <std::floating_point Real>
UnitResult march_unit(const CaseConfig& c, const Unit& u) {
  UnitResult result;
  const Mesh mesh = make_mesh(c.domain, u.cells);
  const FemOperators ops(mesh);
  const ProblemSpec spec = c.problem(u.alpha);
  const auto v0 = initial_vector(c, mesh);
  const std::vector<Real> v(v0.begin(), v0.end());

  // error(U^N) at t = T; discrete references are compared in the consistent mass norm.
  std::function<double(const std::vector<Real>&)> error;
  std::vector<Real> target;
  switch (c.reference) {
    case ReferenceKind::DiscreteEigen:
      target = semidiscrete_exact_1d<Real>(spec, ops, c.fem, v).value(static_cast<Real>(c.T));
      break;
    case ReferenceKind::Krylov: {
      const auto w = krylov_reference(u.alpha, ops, c.fem, c.source.front(), c.krylov_dim).value(c.T);
      target.assign(w.begin(), w.end());
      break;
    }
    case ReferenceKind::FineStep:
      target = march<Real>(c, spec, ops, v, u.scheme, c.refine * c.N.back());
      break;
    case ReferenceKind::Spectral:
      error = [&](const std::vector<Real>& U) {
        const GridFunction g{mesh, std::vector<double>(U.begin(), U.end())};
        const auto evaluate = [&](const SeriesField& s) { return l2_error_vs_series(g, s); };
        const double estimate = evaluate(exact_solution(spec, c.T, default_truncation(spec, c.T)));
        return converged_series_value(spec, c.T, evaluate, c.series_rel_tol * estimate);
      };
      break;
  }
  if (!error)
    error = [&](const std::vector<Real>& U) {
      return mass_distance<Real>(ops.mass, U, target);
    };

  for (int N : c.N) {
    try {
      result.errors.push_back(error(march<Real>(c, spec, ops, v, u.scheme, N)));
      result.failures.emplace_back();
    } catch (const std::exception& e) {
      result.errors.emplace_back();
      result.failures.emplace_back(e.what());
    }
  }
  return result;
}

UnitResult run_unit(const CaseConfig& c, const Unit& u) {
  try {
    if (u.scheme.kind == SchemeKind::Pg) return pg_unit(c, u);
    if (c.precision == Precision::LongDouble) return march_unit<long double>(c, u);
    return march_unit<double>(c, u);
  } catch (const std::exception& e) {
    // The reference itself failed: every N of the unit is marked.
    UnitResult r;
    r.errors.assign(c.N.size(), std::nullopt);
    r.failures.assign(c.N.size(), e.what());
    return r;
  }
}

std::string reference_name(ReferenceKind k) {
  switch (k) {
    case ReferenceKind::DiscreteEigen: return "discrete-eigen";
    case ReferenceKind::Spectral: return "spectral";
    case ReferenceKind::Krylov: return "krylov";
    case ReferenceKind::FineStep: return "fine-step";
  }
  return "";
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<Unit> units;
  for (std::size_t ci = 0; ci < config.cases.size(); ++ci) {
    const CaseConfig& c = config.cases[ci];
    for (double alpha : c.alphas)
      for (const SchemeId& s : c.schemes)
        for (int cells : c.cells) units.push_back({ci, alpha, s, cells});
  }

  std::vector<UnitResult> results(units.size());
  const int jobs = std::clamp(options.jobs, 1, static_cast<int>(std::max<std::size_t>(1, units.size())));
  if (jobs == 1) {
    for (std::size_t i = 0; i < units.size(); ++i)
      results[i] = run_unit(config.cases[units[i].case_index], units[i]);
  } else {
    // Workers only read the config and write their own result slot.
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    for (int j = 0; j < jobs; ++j)
      workers.emplace_back([&] {
        omp_set_num_threads(1);
        for (std::size_t i = next++; i < units.size(); i = next++)
          results[i] = run_unit(config.cases[units[i].case_index], units[i]);
      });
  }

  ExperimentReport report;
  report.name = config.name;
  report.multi_case = config.cases.size() > 1;
  const CaseConfig& first = config.cases.front();
  report.fem = first.fem == FemKind::Galerkin ? "sg" : "lm";
  report.reference = reference_name(first.reference);

  // Rows in grid order (case, alpha, scheme, cells, N). Rates run over N within a mesh, or over
  // the meshes when the case has a single N.
  for (std::size_t ui = 0; ui < units.size();) {
    const Unit& head = units[ui];
    const CaseConfig& c = config.cases[head.case_index];
    std::size_t end = ui;
    while (end < units.size() && units[end].case_index == head.case_index &&
           units[end].alpha == head.alpha && units[end].scheme == head.scheme)
      ++end;
    const std::size_t first_row = report.rows.size();
    for (std::size_t k = ui; k < end; ++k)
      for (std::size_t n = 0; n < c.N.size(); ++n) {
        ReportRow row;
        row.label = c.label;
        row.alpha = head.alpha;
        row.scheme = head.scheme.name();
        row.corrected = c.corrected;
        row.N = c.N[n];
        row.cells = units[k].cells;
        row.error = results[k].errors[n];
        row.failure = results[k].failures[n];
        report.rows.push_back(std::move(row));
      }
    auto assign = [&](const std::vector<std::size_t>& idx, bool by_mesh) {
      std::vector<double> e;
      std::vector<int> steps;
      for (std::size_t i : idx) {
        const ReportRow& r = report.rows[i];
        e.push_back(r.error.value_or(0.0));
        steps.push_back(by_mesh ? r.cells : r.N);
      }
      const auto rates = compute_rates(e, steps);
      for (std::size_t j = 0; j < idx.size(); ++j) report.rows[idx[j]].rate = rates[j];
    };
    if (c.N.size() > 1) {
      for (std::size_t k = 0; k < end - ui; ++k) {
        std::vector<std::size_t> idx;
        for (std::size_t n = 0; n < c.N.size(); ++n) idx.push_back(first_row + k * c.N.size() + n);
        assign(idx, false);
      }
    } else {
      std::vector<std::size_t> idx;
      for (std::size_t k = first_row; k < report.rows.size(); ++k) idx.push_back(k);
      assign(idx, true);
    }
    ui = end;
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// ---------------------------------------------------------------------------------------------
// Output

namespace {

std::string sci(double x) { return fmt::format("{:.2e}", x); }

std::string h_label(int cells) { return fmt::format("1/{}", cells); }

}  // namespace

std::string format_report(const ExperimentReport& report, ReportFormat format) {
  std::string out;
  if (format == ReportFormat::Csv) {
    out += report.multi_case ? "case," : "";
    out += "alpha,scheme,corrected,N,h,error,rate\n";
    for (const auto& r : report.rows) {
      if (report.multi_case) out += r.label + ",";
      out += fmt::format("{},{},{},{},{:.6g},{},{}\n", r.alpha, r.scheme, r.corrected, r.N, r.h(),
                         r.error ? sci(*r.error) : "failed",
                         r.rate ? fmt::format("{:.2f}", *r.rate) : "");
    }
    return out;
  }

  // Markdown: one table per case, one line per (alpha, scheme); the columns are the N values
  // or, for a mesh sweep at fixed N, the mesh sizes.
  out += fmt::format("# {}\n\nfem: {}, reference: {}\n", report.name, report.fem, report.reference);
  std::size_t i = 0;
  while (i < report.rows.size()) {
    const std::string label = report.rows[i].label;
    std::size_t case_end = i;
    while (case_end < report.rows.size() && report.rows[case_end].label == label) ++case_end;
    std::vector<std::pair<int, int>> columns;  // (cells, N)
    for (std::size_t k = i; k < case_end; ++k) {
      const std::pair<int, int> key{report.rows[k].cells, report.rows[k].N};
      if (std::find(columns.begin(), columns.end(), key) == columns.end()) columns.push_back(key);
    }
    std::set<int> meshes, steps;
    for (const auto& [cells, N] : columns) {
      meshes.insert(cells);
      steps.insert(N);
    }
    const bool by_mesh = steps.size() == 1 && meshes.size() > 1;
    if (report.multi_case) out += fmt::format("\n## {}\n", label);
    out += "\n| alpha | scheme |";
    for (const auto& [cells, N] : columns)
      out += by_mesh ? fmt::format(" h={} |", h_label(cells))
                     : (meshes.size() > 1 ? fmt::format(" N={} h={} |", N, h_label(cells))
                                          : fmt::format(" N={} |", N));
    out += " rate |\n|---|---|";
    for (std::size_t k = 0; k < columns.size(); ++k) out += "---|";
    out += "---|\n";
    for (std::size_t k = i; k < case_end;) {
      std::size_t line_end = k;
      while (line_end < case_end && report.rows[line_end].alpha == report.rows[k].alpha &&
             report.rows[line_end].scheme == report.rows[k].scheme)
        ++line_end;
      out += fmt::format("| {} | {}{} |", report.rows[k].alpha, report.rows[k].scheme,
                         report.rows[k].corrected ? " (corrected)" : "");
      std::vector<double> e;
      std::vector<int> s;
      for (std::size_t j = k; j < line_end; ++j) {
        const auto& r = report.rows[j];
        out += fmt::format(" {} |", r.error ? sci(*r.error) : "failed");
        e.push_back(r.error.value_or(0.0));
        s.push_back(by_mesh ? r.cells : r.N);
      }
      const auto rate = meshes.size() > 1 && steps.size() > 1 ? std::nullopt : overall_rate(e, s);
      out += rate ? fmt::format(" ≈ {:.2f} |\n", *rate) : " |\n";
      k = line_end;
    }
    i = case_end;
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Profiles

std::string profile_csv(const ExperimentConfig& config, std::span<const double> times) {
  const CaseConfig& c = config.cases.front();
  const SchemeId scheme = c.schemes.front();
  const Mesh mesh = make_mesh(c.domain, c.cells.back());
  const FemOperators ops(mesh);
  const ProblemSpec spec = c.problem(c.alphas.front());
  const int N = c.N.back();
  const double tau = c.T / N;

  std::vector<std::vector<double>> values;
  if (scheme.kind == SchemeKind::Pg) {
    const auto traj = pg_solve(pg_assemble(spec, ops, c.fem, N));
    for (double t : times) {
      if (t < 0 || t > c.T) throw ConfigError(fmt::format("profile: t = {} outside [0, T]", t));
      values.push_back(pg_evaluate(traj, t));
    }
  } else {
    const auto v = initial_vector(c, mesh);
    Trajectory<double> traj;
    if (scheme.kind == SchemeKind::Bdf)
      traj = solve_cq<double>(spec, ops, c.fem, v, scheme.order, N, c.corrected);
    else
      traj = solve_l1<double>(spec, ops, c.fem, v, N, c.corrected);
    for (double t : times) {
      const long n = std::lround(t / tau);
      if (n < 0 || n > N || std::abs(n * tau - t) > 1e-9 * c.T)
        throw ConfigError(fmt::format("profile: t = {} is not a multiple of tau = {}", t, tau));
      values.push_back(traj.values[n]);
    }
  }

  std::string out = "t,x,y,u\n";
  for (std::size_t k = 0; k < times.size(); ++k)
    for (int i = 0; i < mesh.num_interior(); ++i) {
      const auto p = mesh.node(mesh.node_of_interior(i));
      out += fmt::format("{},{},{},{:.10e}\n", times[k], p[0], p[1], values[k][i]);
    }
  return out;
}

}  // namespace fracstep
