#pragma once

// Configuration-driven convergence studies.
//
// An experiment document expands into cells (case, alpha, scheme, mesh, N). Each cell is solved
// and measured against the configured reference, and the report lists errors with observed
// rates between consecutive refinements. Reports are deterministic: cells are merged in grid
// order whatever the number of worker threads.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fracstep/mesh_fem.hpp"
#include "fracstep/problem.hpp"
#include "fracstep/spacetime_pg.hpp"

namespace fracstep {

enum class SchemeKind { Bdf, L1, Pg };

struct SchemeId {
  SchemeKind kind = SchemeKind::Bdf;
  int order = 1;  // BDF order; 1 for l1 and pg

  /// "bdf1".."bdf6", "l1", "pg". Throws ConfigError otherwise.
  static SchemeId parse(std::string_view name);
  std::string name() const;
  friend bool operator==(const SchemeId&, const SchemeId&) = default;
};

enum class Projection { L2, Ritz, Nodal };
enum class ReferenceKind { DiscreteEigen, Spectral, Krylov, FineStep };
enum class Precision { Double, LongDouble };

/// One fully resolved study: the document's defaults with the case overrides applied.
struct CaseConfig {
  std::string label;

  DomainKind domain = DomainKind::Interval;
  std::vector<double> alphas;
  double T = 1.0;
  Field initial = ZeroField{};
  std::vector<SeparableTerm> source;

  std::vector<int> cells;
  FemKind fem = FemKind::Galerkin;
  Projection projection = Projection::L2;

  std::vector<SchemeId> schemes;
  bool corrected = false;
  std::vector<int> N;

  ReferenceKind reference = ReferenceKind::DiscreteEigen;
  Precision precision = Precision::Double;
  int refine = 8;               // fine-step: N_ref = refine * max N
  double series_rel_tol = 1e-4;  // spectral: doubling tolerance relative to the error
  int krylov_dim = 60;
  PgQuadrature quadrature;

  ProblemSpec problem(double alpha) const;
};

struct ExperimentConfig {
  std::string name;
  std::vector<CaseConfig> cases;
  std::string csv;  // output file name, relative to the output directory
  bool markdown = false;

  /// Parses and validates a document. Unknown keys, bad values and incompatible combinations
  /// throw ConfigError.
  static ExperimentConfig from_json(const nlohmann::json& doc);
  static ExperimentConfig load(const std::string& path,
                               std::span<const std::string> overrides = {});
};

/// Applies "a.b.c=value" to a document. The value is parsed as JSON when it is valid JSON and
/// taken as a string otherwise. Throws ConfigError on a malformed assignment.
void apply_override(nlohmann::json& doc, std::string_view assignment);

struct ReportRow {
  std::string label;
  double alpha = 0;
  std::string scheme;
  bool corrected = false;
  int N = 0;
  int cells = 0;
  std::optional<double> error;  // empty when the cell failed
  std::optional<double> rate;
  std::string failure;

  double h() const { return 1.0 / cells; }
};

struct ExperimentReport {
  std::string name;
  bool multi_case = false;
  std::vector<ReportRow> rows;
  std::string fem;
  std::string reference;
  double wall_seconds = 0;

  bool ok() const;
};

struct RunOptions {
  int jobs = 1;
};

ExperimentReport run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// rate_i = log2(e_{i-1} / e_i) when steps_i = 2 steps_{i-1}, empty otherwise and for i = 0.
std::vector<std::optional<double>> compute_rates(std::span<const double> errors,
                                                 std::span<const int> steps);

/// Overall rate log2(e_first / e_last) / log2(steps_last / steps_first), the "approximately"
/// column of a table. Empty for fewer than two valid entries.
std::optional<double> overall_rate(std::span<const double> errors, std::span<const int> steps);

enum class ReportFormat { Csv, Markdown };

std::string format_report(const ExperimentReport& report, ReportFormat format);

/// Nodal values u_h(t) of the first alpha, scheme, mesh and the largest N of the first case.
/// Every t must be a grid time (for pg, any t in [0, T]). CSV rows t,x,y,u.
std::string profile_csv(const ExperimentConfig& config, std::span<const double> times);

}  // namespace fracstep
