// fiscalpanel: batch front end for ingest checks, diagnostics, DCCE
// estimation, sustainability scenarios and the full report.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "fiscal/fiscal.hpp"

namespace {

using namespace fiscal;

// Flags that mirror RunConfig; unset flags leave config-file values alone.
struct RunFlags {
  std::optional<std::string> config, data, delimiter, unit_column, year_column, pb, debt, gdp, gov, ca, csa_lags,
      output_dir;
  std::optional<int> gfc_break_year, first_year, last_year;
  std::optional<double> hp_lambda;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool hp_log = false, jackknife = false, drop_incomplete = false, csa_full_panel = false, no_median_split = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config, "key = value run configuration file");
  cmd->add_option("--data", f.data, "panel file, or 'synthetic'");
  cmd->add_option("--delimiter", f.delimiter, "field delimiter (',' or 'tab')");
  cmd->add_option("--unit-column", f.unit_column, "unit id column");
  cmd->add_option("--year-column", f.year_column, "year column");
  cmd->add_option("--pb", f.pb, "primary balance column");
  cmd->add_option("--debt", f.debt, "debt column");
  cmd->add_option("--gdp", f.gdp, "real GDP level column");
  cmd->add_option("--gov", f.gov, "real government consumption level column");
  cmd->add_option("--ca", f.ca, "current account column");
  cmd->add_option("--first-year", f.first_year, "first year kept (default 1990)");
  cmd->add_option("--last-year", f.last_year, "last year kept (default 2022)");
  cmd->add_option("--gfc-break-year", f.gfc_break_year, "first year of the crisis dummy (default 2008)");
  cmd->add_option("--hp-lambda", f.hp_lambda, "HP smoothing parameter (default 100)");
  cmd->add_flag("--hp-log", f.hp_log, "filter log levels");
  cmd->add_option("--csa-lags", f.csa_lags, "lags of cross-sectional averages, or 'auto'");
  cmd->add_flag("--jackknife", f.jackknife, "half-panel jackknife bias correction");
  cmd->add_flag("--csa-full-panel", f.csa_full_panel, "group regressions average over the full panel");
  cmd->add_flag("--no-median-split", f.no_median_split, "skip the high/low debt split");
  cmd->add_flag("--drop-incomplete", f.drop_incomplete, "drop units with missing cells");
  cmd->add_option("--seed", f.seed, "seed for synthetic data (default 0)");
  cmd->add_option("--threads", f.threads, "worker threads, 0 = all cores (default 1)");
  cmd->add_option("--output-dir", f.output_dir, "artifact directory");
}

RunConfig build_config(const RunFlags& f) {
  RunConfig c;
  if (f.config) c = load_run_config(ConfigFile::load(*f.config));
  if (f.data) c.data_path = *f.data;
  if (f.delimiter) {
    auto d = *f.delimiter;
    if (d == "tab" || d == "\\t") d = "\t";
    if (d.size() != 1) throw Error(ErrorCode::InvalidConfig, "delimiter must be one character");
    c.delimiter = d.front();
  }
  if (f.unit_column) c.unit_column = *f.unit_column;
  if (f.year_column) c.year_column = *f.year_column;
  if (f.pb) c.variables.pb = *f.pb;
  if (f.debt) c.variables.debt = *f.debt;
  if (f.gdp) c.variables.gdp = *f.gdp;
  if (f.gov) c.variables.gov = *f.gov;
  if (f.ca) c.variables.ca = *f.ca;
  if (f.first_year) c.first_year = *f.first_year;
  if (f.last_year) c.last_year = *f.last_year;
  if (f.gfc_break_year) c.gfc_break_year = *f.gfc_break_year;
  if (f.hp_lambda) c.hp_lambda = *f.hp_lambda;
  if (f.hp_log) c.hp_log = true;
  if (f.csa_lags) {
    if (*f.csa_lags == "auto" || *f.csa_lags == "AUTO") {
      c.csa_lags.reset();
    } else {
      const auto v = text::parse_int(*f.csa_lags);
      if (!v || *v < 0) throw Error(ErrorCode::InvalidConfig, "--csa-lags must be a nonnegative integer or 'auto'");
      c.csa_lags = static_cast<int>(*v);
    }
  }
  if (f.jackknife) c.jackknife = true;
  if (f.csa_full_panel) c.csa_full_panel = true;
  if (f.no_median_split) c.median_split = false;
  if (f.drop_incomplete) c.drop_incomplete = true;
  if (f.seed) c.seed = *f.seed;
  if (f.threads) c.threads = *f.threads;
  c.output_dir = resolve_output_dir(c.output_dir, f.output_dir);
  return c;
}

int report_error(const std::string& stage, const Error& e, int code) {
  std::cerr << error_report(stage, std::string(to_string(e.code())), e.message()) << '\n';
  return code;
}

int run_stages(const RunFlags& flags, const Stages& stages) {
  RunConfig config;
  try {
    config = build_config(flags);
  } catch (const Error& e) {
    return report_error("validation", e, 2);
  }
  const auto result = run_pipeline(config, stages);
  if (result.exit_code != 0) {
    std::cerr << result.error_report << '\n';
    return result.exit_code;
  }
  for (const auto& p : result.written) std::cout << p << '\n';
  return 0;
}

int ingest_check(const RunFlags& flags) {
  try {
    const auto config = build_config(flags);
    validate_config(config);
    const auto panel = load_panel(config);
    validate_against_panel(config, panel);
    std::cout << "units\t" << panel.n_units() << "\nyears\t" << panel.years().front() << '-' << panel.years().back()
              << "\nvariables";
    for (const auto& v : panel.variable_names()) std::cout << '\t' << v;
    std::cout << '\n';
    return 0;
  } catch (const Error& e) {
    return report_error("validation", e, 2);
  }
}

int simulate(const std::string& scenario_path, const std::optional<std::string>& output_flag) {
  Scenario sc;
  try {
    sc = parse_scenario(ConfigFile::load(scenario_path));
  } catch (const Error& e) {
    return report_error("validation", e, 2);
  }
  DebtPathResult path;
  try {
    path = simulate_debt_path(sc.rule, sc.economy, sc.b0, sc.s0, sc.horizon, sc.options);
  } catch (const Error& e) {
    return report_error("computation", e, 3);
  }
  const auto dir = resolve_output_dir("fiscalpanel_out", output_flag);
  std::ostringstream traj;
  write_trajectory(path, sc.economy, traj);
  try {
    const auto written = write_artifacts(dir, {{sc.name + "_trajectory.tsv", traj.str()}});
    const auto lr = sc.rule.long_run();
    std::cout << "scenario\t" << sc.name << "\nlong_run\t" << text::format_roundtrip(lr.value) << "\nverdict\t"
              << to_string(path.verdict) << "\nreason\t" << path.verdict_message << "\ntrajectory\t" << written.front()
              << '\n';
  } catch (const Error& e) {
    return report_error("output", e, 3);
  }
  return 0;
}

int synth(std::uint64_t seed, std::size_t units, const std::string& out_path) {
  try {
    SyntheticOptions so;
    so.seed = seed;
    so.units = units;
    const auto panel = synthetic_fiscal_panel(so);
    std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + out_path);
    write_table(panel, f);
    return 0;
  } catch (const Error& e) {
    return report_error("computation", e, 3);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heterogeneous fiscal reaction functions: diagnostics, DCCE mean-group estimation, sustainability"};
  app.require_subcommand(1);
  app.set_version_flag("--version", fiscal::kVersion);

  RunFlags flags;
  auto* ingest = app.add_subcommand("ingest-check", "load and validate a panel file");
  auto* diagnose = app.add_subcommand("diagnose", "summary statistics and diagnostic tests");
  auto* estimate = app.add_subcommand("estimate", "DCCE mean-group regressions and long-run responses");
  auto* report = app.add_subcommand("report", "full pipeline: every table, figure data and the manifest");
  for (auto* cmd : {ingest, diagnose, estimate, report}) add_run_flags(cmd, flags);

  auto* sim = app.add_subcommand("simulate", "simulate a debt path from a scenario file");
  std::string scenario;
  std::optional<std::string> sim_out;
  sim->add_option("--scenario", scenario, "scenario file")->required();
  sim->add_option("--output-dir", sim_out, "trajectory directory");

  auto* gen = app.add_subcommand("synth", "write a seeded synthetic 52 x 33 panel as CSV");
  std::uint64_t seed = 0;
  std::size_t units = 52;
  std::string out_path;
  gen->add_option("--seed", seed, "seed (default 0)");
  gen->add_option("--units", units, "number of units (default 52)");
  gen->add_option("--out", out_path, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (*ingest) return ingest_check(flags);
  if (*diagnose) return run_stages(flags, {true, false, false, false});
  if (*estimate) return run_stages(flags, {false, true, true, false});
  if (*report) return run_stages(flags, {});
  if (*sim) return simulate(scenario, sim_out);
  if (*gen) return synth(seed, units, out_path);
  return 2;
}
