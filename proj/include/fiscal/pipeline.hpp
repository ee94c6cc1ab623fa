#pragma once

// End-to-end batch run: ingest, filter, diagnose, estimate, check
// sustainability, then write every artifact from one place.

#include <boost/version.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fiscal/config.hpp"
#include "fiscal/dcce.hpp"
#include "fiscal/diagnostics.hpp"
#include "fiscal/hp_filter.hpp"
#include "fiscal/panel.hpp"
#include "fiscal/parallel.hpp"
#include "fiscal/report.hpp"
#include "fiscal/sustainability.hpp"
#include "fiscal/synthetic.hpp"

namespace fiscal {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kSyntheticData = "synthetic";
inline constexpr const char* kOutputDirEnv = "FISCALPANEL_OUTPUT_DIR";

/// Input column names for the five model variables. GDP and government
/// consumption are levels; their HP gaps are derived.
struct VariableMap {
  std::string pb = "pb";
  std::string debt = "debt";
  std::string gdp = "gdp";
  std::string gov = "gov";
  std::string ca = "ca";
};

struct RunConfig {
  /// Delimited panel file, or "synthetic" for the seeded generator.
  std::string data_path;
  char delimiter = ',';
  std::string unit_column = "country";
  std::string year_column = "year";
  int first_year = 1990;
  int last_year = 2022;
  bool drop_incomplete = false;
  VariableMap variables;
  /// Explicit groups, estimated in the listed order after the median split.
  std::vector<GroupSplit> groups;
  bool median_split = true;
  int gfc_break_year = 2008;
  double hp_lambda = 100.0;
  bool hp_log = false;
  std::optional<int> csa_lags;  // unset = AUTO
  bool jackknife = false;
  bool csa_full_panel = false;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string output_dir = "fiscalpanel_out";
  // Economy used for the long-run sustainability check.
  double sim_r = 0.03;
  double sim_g = 0.02;
  std::size_t sim_horizon = 500;
};

/// Reads a `key = value` run configuration. Groups are given as
/// `group.<label> = [unit, unit, ...]`.
inline RunConfig load_run_config(const ConfigFile& cfg, RunConfig base = {}) {
  static const std::vector<std::string> known{
      "data", "delimiter", "unit_column", "year_column", "first_year", "last_year", "drop_incomplete", "pb", "debt", "gdp",
      "gov", "ca", "median_split", "gfc_break_year", "hp_lambda", "hp_log", "csa_lags", "jackknife", "csa_full_panel",
      "seed", "threads", "output_dir", "sim_r", "sim_g", "sim_horizon"};
  RunConfig c = std::move(base);
  for (const auto& key : cfg.keys()) {
    if (key.rfind("group.", 0) == 0) {
      const auto label = key.substr(6);
      if (label.empty()) throw Error(ErrorCode::InvalidConfig, cfg.source() + ": empty group label");
      c.groups.push_back({label, cfg.get_list(key)});
      continue;
    }
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw Error(ErrorCode::InvalidConfig, cfg.source() + ": unknown key '" + key + "'");
  }
  auto int_of = [&](const char* key) { return static_cast<int>(cfg.get_int(key)); };
  if (cfg.has("data")) c.data_path = cfg.get_string("data");
  if (cfg.has("delimiter")) {
    auto d = cfg.get_string("delimiter");
    if (d == "tab" || d == "\\t") d = "\t";
    if (d.size() != 1) throw Error(ErrorCode::InvalidConfig, "delimiter must be one character");
    c.delimiter = d.front();
  }
  if (cfg.has("unit_column")) c.unit_column = cfg.get_string("unit_column");
  if (cfg.has("year_column")) c.year_column = cfg.get_string("year_column");
  if (cfg.has("first_year")) c.first_year = int_of("first_year");
  if (cfg.has("last_year")) c.last_year = int_of("last_year");
  if (cfg.has("drop_incomplete")) c.drop_incomplete = cfg.get_bool("drop_incomplete");
  if (cfg.has("pb")) c.variables.pb = cfg.get_string("pb");
  if (cfg.has("debt")) c.variables.debt = cfg.get_string("debt");
  if (cfg.has("gdp")) c.variables.gdp = cfg.get_string("gdp");
  if (cfg.has("gov")) c.variables.gov = cfg.get_string("gov");
  if (cfg.has("ca")) c.variables.ca = cfg.get_string("ca");
  if (cfg.has("median_split")) c.median_split = cfg.get_bool("median_split");
  if (cfg.has("gfc_break_year")) c.gfc_break_year = int_of("gfc_break_year");
  if (cfg.has("hp_lambda")) c.hp_lambda = cfg.get_double("hp_lambda");
  if (cfg.has("hp_log")) c.hp_log = cfg.get_bool("hp_log");
  if (cfg.has("csa_lags")) {
    const auto v = cfg.get_string("csa_lags");
    if (v == "auto" || v == "AUTO")
      c.csa_lags.reset();
    else
      c.csa_lags = int_of("csa_lags");
  }
  if (cfg.has("jackknife")) c.jackknife = cfg.get_bool("jackknife");
  if (cfg.has("csa_full_panel")) c.csa_full_panel = cfg.get_bool("csa_full_panel");
  if (cfg.has("seed")) {
    const auto s = cfg.get_int("seed");
    if (s < 0) throw Error(ErrorCode::InvalidConfig, "seed must be nonnegative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (cfg.has("threads")) {
    const auto t = cfg.get_int("threads");
    if (t < 0) throw Error(ErrorCode::InvalidConfig, "threads must be nonnegative");
    c.threads = static_cast<unsigned>(t);
  }
  if (cfg.has("output_dir")) c.output_dir = cfg.get_string("output_dir");
  if (cfg.has("sim_r")) c.sim_r = cfg.get_double("sim_r");
  if (cfg.has("sim_g")) c.sim_g = cfg.get_double("sim_g");
  if (cfg.has("sim_horizon")) {
    const auto h = cfg.get_int("sim_horizon");
    if (h < 1) throw Error(ErrorCode::HorizonZero, "sim_horizon must be at least 1");
    c.sim_horizon = static_cast<std::size_t>(h);
  }
  return c;
}

/// Config file < environment < command-line flag.
inline std::string resolve_output_dir(const std::string& from_config, const std::optional<std::string>& from_flag) {
  if (from_flag) return *from_flag;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return from_config;
}

/// Everything that affects results, one `key = value` per line; the thread
/// count and output location are left out so they cannot change the manifest.
inline std::string echo_config(const RunConfig& c) {
  std::ostringstream out;
  auto line = [&](const std::string& k, const std::string& v) { out << k << " = " << v << '\n'; };
  line("data", c.data_path);
  line("delimiter", c.delimiter == '\t' ? "tab" : std::string(1, c.delimiter));
  line("unit_column", c.unit_column);
  line("year_column", c.year_column);
  line("first_year", std::to_string(c.first_year));
  line("last_year", std::to_string(c.last_year));
  line("drop_incomplete", c.drop_incomplete ? "true" : "false");
  line("pb", c.variables.pb);
  line("debt", c.variables.debt);
  line("gdp", c.variables.gdp);
  line("gov", c.variables.gov);
  line("ca", c.variables.ca);
  line("median_split", c.median_split ? "true" : "false");
  for (const auto& g : c.groups) {
    std::string list;
    for (const auto& m : g.members) list += (list.empty() ? "" : ", ") + text::quote_if_needed(m, ',');
    line("group." + g.label, "[" + list + "]");
  }
  line("gfc_break_year", std::to_string(c.gfc_break_year));
  line("hp_lambda", text::format_roundtrip(c.hp_lambda));
  line("hp_log", c.hp_log ? "true" : "false");
  line("csa_lags", c.csa_lags ? std::to_string(*c.csa_lags) : "auto");
  line("jackknife", c.jackknife ? "true" : "false");
  line("csa_full_panel", c.csa_full_panel ? "true" : "false");
  line("seed", std::to_string(c.seed));
  line("sim_r", text::format_roundtrip(c.sim_r));
  line("sim_g", text::format_roundtrip(c.sim_g));
  line("sim_horizon", std::to_string(c.sim_horizon));
  return out.str();
}

struct Stages {
  bool diagnostics = true;
  bool regressions = true;
  bool long_run = true;
  bool figures = true;
};

struct PipelineResult {
  int exit_code = 0;
  std::vector<std::string> written;
  /// Single-line structured report when exit_code != 0.
  std::string error_report;
};

inline std::string error_report(const std::string& stage, const std::string& code, const std::string& message) {
  std::string escaped;
  for (char ch : message) {
    if (ch == '"' || ch == '\\') escaped.push_back('\\');
    escaped.push_back(ch == '\n' ? ' ' : ch);
  }
  return "error: stage=" + stage + " code=" + code + " message=\"" + escaped + "\"";
}

/// Loads the configured panel (file or synthetic) restricted to the
/// configured years and variables.
inline PanelDataset load_panel(const RunConfig& c) {
  const auto& v = c.variables;
  const std::vector<std::string> vars{v.pb, v.debt, v.gdp, v.gov, v.ca};
  if (c.data_path == kSyntheticData) {
    SyntheticOptions so;
    so.seed = c.seed;
    so.first_year = c.first_year;
    so.last_year = c.last_year;
    so.break_year = c.gfc_break_year;
    PanelDataset raw = synthetic_fiscal_panel(so);
    std::map<std::string, Matrix> renamed;
    const std::vector<std::string> synth{"pb", "debt", "gdp", "gov", "ca"};
    for (std::size_t k = 0; k < synth.size(); ++k) renamed[vars[k]] = raw.variable(synth[k]);
    return PanelDataset(raw.unit_ids(), raw.years(), std::move(renamed));
  }
  TableSchema schema;
  schema.delimiter = c.delimiter;
  schema.unit_column = c.unit_column;
  schema.year_column = c.year_column;
  schema.variables = vars;
  schema.first_year = c.first_year;
  schema.last_year = c.last_year;
  schema.drop_incomplete = c.drop_incomplete;
  return ingest_table(c.data_path, schema);
}

/// Checks that need no data, then checks against the loaded panel.
inline void validate_config(const RunConfig& c) {
  if (c.data_path.empty()) throw Error(ErrorCode::InvalidConfig, "no data path given");
  if (c.data_path != kSyntheticData && !std::filesystem::is_regular_file(c.data_path))
    throw Error(ErrorCode::Io, "data file not found: " + c.data_path);
  if (c.output_dir.empty()) throw Error(ErrorCode::InvalidConfig, "empty output directory");
  if (c.first_year > c.last_year) throw Error(ErrorCode::InvalidConfig, "first_year after last_year");
  if (c.gfc_break_year < c.first_year || c.gfc_break_year > c.last_year)
    throw Error(ErrorCode::InvalidConfig, "gfc_break_year " + std::to_string(c.gfc_break_year) + " outside " +
                                              std::to_string(c.first_year) + "-" + std::to_string(c.last_year));
  if (!(c.hp_lambda >= 0.0) || !std::isfinite(c.hp_lambda))
    throw Error(ErrorCode::InvalidConfig, "hp_lambda must be finite and nonnegative");
  if (c.csa_lags && *c.csa_lags < 0) throw Error(ErrorCode::InvalidConfig, "csa_lags must be >= 0");
  const auto& v = c.variables;
  const std::vector<std::string> vars{v.pb, v.debt, v.gdp, v.gov, v.ca};
  for (std::size_t a = 0; a < vars.size(); ++a) {
    if (vars[a].empty()) throw Error(ErrorCode::InvalidConfig, "empty variable column name");
    for (std::size_t b = a + 1; b < vars.size(); ++b)
      if (vars[a] == vars[b]) throw Error(ErrorCode::InvalidConfig, "column '" + vars[a] + "' mapped twice");
  }
  for (std::size_t a = 0; a < c.groups.size(); ++a) {
    if (c.groups[a].members.empty()) throw Error(ErrorCode::EmptyGroup, "group '" + c.groups[a].label + "' has no members");
    for (std::size_t b = a + 1; b < c.groups.size(); ++b)
      if (c.groups[a].label == c.groups[b].label)
        throw Error(ErrorCode::InvalidConfig, "group '" + c.groups[a].label + "' defined twice");
  }
}

inline void validate_against_panel(const RunConfig& c, const PanelDataset& panel) {
  const auto& years = panel.years();
  if (c.gfc_break_year < years.front() || c.gfc_break_year > years.back())
    throw Error(ErrorCode::InvalidConfig, "gfc_break_year " + std::to_string(c.gfc_break_year) + " outside panel years");
  for (const auto& g : c.groups)
    for (const auto& m : g.members)
      if (!panel.has_unit(m)) throw Error(ErrorCode::UnknownVariable, "group '" + g.label + "' member '" + m + "' not in data");
}

/// In-memory artifacts, name -> content, in write order.
using Artifacts = std::vector<std::pair<std::string, std::string>>;

/// All computation; no file I/O.
inline Artifacts compute_artifacts(const RunConfig& c, const PanelDataset& raw, const Stages& stages) {
  const auto& v = c.variables;
  const FilterConfig hp{c.hp_lambda, c.hp_log};
  PanelDataset panel = detrend_panel(detrend_panel(raw, v.gdp, hp), v.gov, hp);
  const std::string ygap = v.gdp + "_gap", ggap = v.gov + "_gap";

  std::vector<GroupSplit> groups{{"aggregate", {}}};
  if (c.median_split) {
    auto [high, low] = median_debt_split(panel, v.debt);
    groups.push_back(std::move(high));
    groups.push_back(std::move(low));
  }
  for (const auto& g : c.groups) groups.push_back(g);

  auto make_spec = [&](const GroupSplit& g, bool with_ca) {
    RegressionSpec s;
    s.dependent = v.pb;
    s.lag_dependent = 1;
    s.regressors = {{v.debt, 1}, {ygap, 0}, {ggap, 0}};
    if (with_ca) s.regressors.push_back({v.ca, 0});
    s.dummy_break_year = c.gfc_break_year;
    s.csa_lags = c.csa_lags;
    s.group = g;
    return s;
  };

  Artifacts out;
  if (stages.diagnostics) {
    const std::vector<std::pair<std::string, std::string>> diag_vars{
        {"primary_balance", v.pb}, {"debt", v.debt}, {"output_gap", ygap}, {"spending_gap", ggap}, {"current_account", v.ca}};
    auto rows = parallel_map(diag_vars.size(), c.threads, [&](std::size_t k) {
      report::DiagnosticsRow r;
      r.label = diag_vars[k].first;
      const auto& var = diag_vars[k].second;
      r.summary = summarize(panel, var);
      r.cd = cd_test(panel, var);
      r.cd_plus = cd_plus_test(panel, var);
      r.cips = cips_test(panel, var);
      return r;
    });
    std::vector<report::DiagnosticsRow> table;
    for (auto& r : rows) {
      if (r.error) std::rethrow_exception(r.error);
      table.push_back(std::move(*r.value));
    }
    const auto slope = slope_homogeneity_test(panel, make_spec(groups.front(), true));
    out.emplace_back("table1_diagnostics.tsv", report::diagnostics_table(table, slope));
  }

  if (stages.regressions || stages.long_run) {
    DcceOptions opts;
    opts.jackknife = c.jackknife;
    opts.csa_over_full_panel = c.csa_full_panel;
    opts.threads = c.threads;
    std::vector<MeanGroupResult> results;
    std::vector<std::string> labels;
    for (const auto& g : groups)
      for (bool with_ca : {false, true}) {
        const auto spec = make_spec(g, with_ca);
        try {
          results.push_back(estimate_dcce(panel, spec, opts));
        } catch (const Error& e) {
          throw Error(e.code(), "group " + g.label + (with_ca ? " (with " + v.ca + ")" : "") + ": " + e.message());
        }
        labels.push_back(g.label);
      }
    if (stages.regressions) {
      std::vector<report::RegressionColumn> cols;
      for (std::size_t k = 0; k < results.size(); ++k) cols.push_back({labels[k], &results[k]});
      const std::vector<report::TableRow> rows{
          {"lagged_" + v.pb, Regressor::lagged_name(v.pb, 1)},
          {"lagged_" + v.debt, Regressor::lagged_name(v.debt, 1)},
          {"constant", "const"},
          {ygap, ygap},
          {ggap, ggap},
          {"gfc_dummy_" + std::to_string(c.gfc_break_year), "dummy"},
          {v.ca, v.ca},
      };
      out.emplace_back("table2_regressions.tsv", report::regression_table(cols, rows));
    }
    if (stages.long_run) {
      std::vector<report::LongRunRow> rows;
      const std::size_t last = panel.n_years() - 1;
      for (std::size_t k = 0; k < results.size(); ++k) {
        const auto& g = groups[k / 2];
        const auto members = g.members.empty() ? panel.unit_ids() : g.members;
        report::LongRunRow r;
        r.group = labels[k];
        r.regression = "(" + std::to_string(k + 1) + ")";
        r.phi = results[k].coefficient(Regressor::lagged_name(v.pb, 1));
        r.rho = results[k].coefficient(Regressor::lagged_name(v.debt, 1));
        if (r.phi >= 1.0) {
          r.note = "phi >= 1, no long-run response";
        } else {
          r.response = long_run_response(r.phi, r.rho);
          if (r.phi < 0.0) {
            r.note = "phi < 0, simulation skipped";
          } else {
            const double b0 = cross_sectional_average(panel, v.debt, members)(static_cast<Eigen::Index>(last));
            const double s0 = cross_sectional_average(panel, v.pb, members)(static_cast<Eigen::Index>(last));
            EconomyPath economy;
            economy.r = {c.sim_r};
            economy.g = {c.sim_g};
            r.path = simulate_debt_path(FiscalRule(r.phi, r.rho), economy, b0, s0, c.sim_horizon);
          }
        }
        rows.push_back(std::move(r));
      }
      out.emplace_back("long_run.tsv", report::long_run_table(rows));
    }
  }

  if (stages.figures) {
    std::vector<report::FigureSeries> series;
    for (const auto& g : groups) series.push_back({g.label, g.members.empty() ? panel.unit_ids() : g.members});
    out.emplace_back("figure1_balance_debt.tsv", report::figure_data(panel, series, {v.pb, v.debt}));
    out.emplace_back("figure2_gaps.tsv", report::figure_data(panel, series, {ygap, ggap}));
  }

  std::ostringstream data;
  write_table(raw, data, ',', c.unit_column, c.year_column);
  const std::string echo = echo_config(c);
  std::ostringstream manifest;
  manifest << "fiscalpanel " << kVersion << '\n'
           << "eigen " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION << '\n'
           << "boost " << BOOST_LIB_VERSION << '\n'
           << "config_hash " << text::hex64(text::fnv1a(echo)) << '\n'
           << "data_hash " << text::hex64(text::fnv1a(data.str())) << '\n'
           << "units " << panel.n_units() << '\n'
           << "years " << panel.years().front() << '-' << panel.years().back() << '\n';
  for (const auto& [name, content] : out) manifest << "artifact " << name << ' ' << text::hex64(text::fnv1a(content)) << '\n';
  manifest << "[config]\n" << echo;
  out.emplace_back("manifest.txt", manifest.str());
  return out;
}

/// Writes artifacts into `dir`; on any failure the files written so far are
/// removed and the error is rethrown.
inline std::vector<std::string> write_artifacts(const std::string& dir, const Artifacts& artifacts) {
  namespace fs = std::filesystem;
  std::vector<std::string> written;
  try {
    fs::create_directories(dir);
    for (const auto& [name, content] : artifacts) {
      const auto path = (fs::path(dir) / name).string();
      written.push_back(path);
      std::ofstream f(path, std::ios::binary | std::ios::trunc);
      if (!f) throw Error(ErrorCode::Io, "cannot write " + path);
      f << content;
      f.close();
      if (!f) throw Error(ErrorCode::Io, "failed writing " + path);
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    throw;
  }
  return written;
}

/// Exit codes: 0 ok, 2 invalid configuration or data, 3 computation or
/// output failure.
inline PipelineResult run_pipeline(const RunConfig& config, const Stages& stages = {}) {
  PipelineResult result;
  PanelDataset panel;
  auto fail = [&](int code, const std::string& stage, const std::string& err, const std::string& msg) {
    result.exit_code = code;
    result.error_report = error_report(stage, err, msg);
    return result;
  };
  try {
    validate_config(config);
    panel = load_panel(config);
    validate_against_panel(config, panel);
  } catch (const Error& e) {
    return fail(2, "validation", std::string(to_string(e.code())), e.message());
  } catch (const std::exception& e) {
    return fail(2, "validation", "Internal", e.what());
  }
  Artifacts artifacts;
  try {
    artifacts = compute_artifacts(config, panel, stages);
  } catch (const Error& e) {
    return fail(3, "computation", std::string(to_string(e.code())), e.message());
  } catch (const std::exception& e) {
    return fail(3, "computation", "Internal", e.what());
  }
  try {
    result.written = write_artifacts(config.output_dir, artifacts);
  } catch (const Error& e) {
    return fail(3, "output", std::string(to_string(e.code())), e.message());
  } catch (const std::exception& e) {
    return fail(3, "output", "Io", e.what());
  }
  return result;
}

}  // namespace fiscal
