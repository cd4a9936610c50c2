// fracstep: experiment runner and small numerical utilities.
//
//   fracstep run --config FILE [--jobs J] [--out DIR] [--format csv|md] [--set key=value ...]
//   fracstep mlf --alpha A --beta B X...
//   fracstep weights --scheme bdfK|l1|pg --alpha A --n N
//   fracstep profile --config FILE --times t1,t2,... [--set key=value ...]
//
// Exit codes: 0 success, 2 some cells failed, 64 usage or configuration error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include <fmt/format.h>

#include "fracstep/cq_stepper.hpp"
#include "fracstep/errors.hpp"
#include "fracstep/harness.hpp"
#include "fracstep/l1_stepper.hpp"
#include "fracstep/mittag_leffler.hpp"
#include "fracstep/spacetime_pg.hpp"

namespace {

constexpr int kExitCellsFailed = 2;
constexpr int kExitConfig = 64;

using namespace fracstep;

int run(const std::string& config_path, const std::vector<std::string>& overrides, int jobs,
        const std::string& out_dir, const std::string& format) {
  const auto config = ExperimentConfig::load(config_path, overrides);
  const auto report = run_experiment(config, {jobs});

  for (const auto& r : report.rows)
    if (!r.error)
      fmt::print(stderr, "cell failed: {}alpha={} {} N={} h=1/{}: {}\n",
                 r.label.empty() ? "" : "case " + r.label + ", ", r.alpha, r.scheme, r.N, r.cells,
                 r.failure);
  fmt::print(stderr, "{}: {} cells in {:.1f} s\n", report.name, report.rows.size(),
             report.wall_seconds);

  const bool markdown = format == "md" || (format.empty() && config.markdown);
  const bool csv = format != "md";
  if (out_dir.empty()) {
    std::cout << format_report(report, markdown && !csv ? ReportFormat::Markdown : ReportFormat::Csv);
  } else {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    if (csv) std::ofstream(dir / config.csv) << format_report(report, ReportFormat::Csv);
    if (markdown) {
      const auto md = std::filesystem::path(config.csv).replace_extension(".md");
      std::ofstream(dir / md) << format_report(report, ReportFormat::Markdown);
    }
  }
  return report.ok() ? 0 : kExitCellsFailed;
}

int weights(const std::string& scheme_name, double alpha, int n) {
  const SchemeId scheme = SchemeId::parse(scheme_name);
  std::vector<double> w;
  switch (scheme.kind) {
    case SchemeKind::Bdf: w = cq_weights<double>(alpha, scheme.order, n); break;
    case SchemeKind::L1: w = l1_weights<double>(alpha, n + 1); break;
    case SchemeKind::Pg: w = pg_factors(alpha, n + 1); break;
  }
  std::cout << "j,weight\n";
  for (std::size_t j = 0; j < w.size(); ++j) std::cout << fmt::format("{},{:.17g}\n", j, w[j]);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-fractional diffusion solvers and convergence studies"};
  app.require_subcommand(1);

  std::string config_path, out_dir, format, scheme = "bdf1", times_arg;
  std::vector<std::string> overrides;
  int jobs = 1, n = 10;
  double alpha = 0.5, beta = 1.0;
  std::vector<double> xs;

  auto* run_cmd = app.add_subcommand("run", "Run a convergence study");
  run_cmd->add_option("--config", config_path, "Experiment JSON")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--jobs", jobs, "Concurrent cells")->check(CLI::PositiveNumber);
  run_cmd->add_option("--out", out_dir, "Output directory (stdout if omitted)");
  run_cmd->add_option("--format", format, "csv or md")->check(CLI::IsMember({"csv", "md"}));
  run_cmd->add_option("--set", overrides, "Override key=value (dotted path)");

  auto* mlf_cmd = app.add_subcommand("mlf", "Evaluate E_{alpha,beta}(x)");
  mlf_cmd->add_option("--alpha", alpha)->required();
  mlf_cmd->add_option("--beta", beta);
  mlf_cmd->add_option("x", xs, "Arguments")->required();

  auto* weights_cmd = app.add_subcommand("weights", "Print quadrature weights b_0..b_n");
  weights_cmd->add_option("--scheme", scheme, "bdf1..bdf6, l1 or pg");
  weights_cmd->add_option("--alpha", alpha)->required();
  weights_cmd->add_option("--n", n)->check(CLI::NonNegativeNumber);

  auto* profile_cmd = app.add_subcommand("profile", "Print u_h at chosen times");
  profile_cmd->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
  profile_cmd->add_option("--times", times_arg, "Comma-separated times")->required();
  profile_cmd->add_option("--set", overrides, "Override key=value (dotted path)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run_cmd) return run(config_path, overrides, jobs, out_dir, format);
    if (*mlf_cmd) {
      std::cout << "x,value\n";
      for (double x : xs) std::cout << fmt::format("{:.17g},{:.17g}\n", x, mlf({alpha, beta}, x));
      return 0;
    }
    if (*weights_cmd) return weights(scheme, alpha, n);
    if (*profile_cmd) {
      std::vector<double> times;
      std::stringstream ss(times_arg);
      for (std::string item; std::getline(ss, item, ',');) times.push_back(std::stod(item));
      std::cout << profile_csv(ExperimentConfig::load(config_path, overrides), times);
      return 0;
    }
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "invalid argument: {}\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitCellsFailed;
  }
  return 0;
}
