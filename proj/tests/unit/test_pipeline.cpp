#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fiscal/pipeline.hpp"
#include "support/capture.hpp"

using namespace fiscal;
namespace tst = fiscal::testing;
namespace fs = std::filesystem;

namespace {

RunConfig synthetic_config(const std::string& out) {
  RunConfig c;
  c.data_path = kSyntheticData;
  c.output_dir = out;
  return c;
}

ConfigFile parse(const std::string& s) {
  std::istringstream in(s);
  return ConfigFile::parse(in, "run.cfg");
}

std::map<std::string, std::string> read_dir(const std::string& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = tst::slurp(e.path().string());
  return out;
}

const std::vector<std::string> kArtifacts{"figure1_balance_debt.tsv", "figure2_gaps.tsv", "long_run.tsv",
                                          "manifest.txt", "table1_diagnostics.tsv", "table2_regressions.tsv"};

}  // namespace

class SyntheticRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new tst::TempDir("pipeline");
    first_ = run_pipeline(synthetic_config(dir_->file("a")));
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static tst::TempDir* dir_;
  static PipelineResult first_;
};
tst::TempDir* SyntheticRun::dir_ = nullptr;
PipelineResult SyntheticRun::first_;

TEST_F(SyntheticRun, WritesEveryArtifact) {
  ASSERT_EQ(first_.exit_code, 0) << first_.error_report;
  EXPECT_EQ(first_.written.size(), 6u);
  std::vector<std::string> names;
  for (const auto& [name, _] : read_dir(dir_->file("a"))) names.push_back(name);
  EXPECT_EQ(names, kArtifacts);
  const auto table2 = tst::slurp(dir_->file("a/table2_regressions.tsv"));
  EXPECT_EQ(table2.rfind("group\taggregate\taggregate\thigh_debt\thigh_debt\tlow_debt\tlow_debt\n", 0), 0u) << table2;
}

TEST_F(SyntheticRun, RerunIsByteIdenticalAtAnyThreadCount) {
  ASSERT_EQ(first_.exit_code, 0);
  auto c = synthetic_config(dir_->file("b"));
  c.threads = 4;
  ASSERT_EQ(run_pipeline(c).exit_code, 0);
  EXPECT_EQ(read_dir(dir_->file("a")), read_dir(dir_->file("b")));
}

TEST_F(SyntheticRun, ManifestListsArtifactHashes) {
  const auto manifest = tst::slurp(dir_->file("a/manifest.txt"));
  for (const auto& name : kArtifacts) {
    if (name == "manifest.txt") continue;
    const auto expect = "artifact " + name + " " + text::hex64(text::fnv1a(tst::slurp(dir_->file("a/" + name)))) + "\n";
    EXPECT_NE(manifest.find(expect), std::string::npos) << name;
  }
  EXPECT_NE(manifest.find("[config]\ndata = synthetic\n"), std::string::npos);
}

TEST(Pipeline, ConfigHashIgnoresThreadsAndOutputDir) {
  auto a = synthetic_config("x"), b = synthetic_config("y");
  b.threads = 8;
  EXPECT_EQ(echo_config(a), echo_config(b));
  b.seed = 1;
  EXPECT_NE(echo_config(a), echo_config(b));
}

TEST(Pipeline, UnknownColumnFailsValidation) {
  tst::TempDir dir("pipeline_col");
  std::ostringstream csv;
  write_table(synthetic_fiscal_panel({}), csv);
  dir.write("panel.csv", csv.str());
  RunConfig c;
  c.data_path = dir.file("panel.csv");
  c.output_dir = dir.file("out");
  c.variables.pb = "primary_balance";
  const auto r = run_pipeline(c);
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.error_report.find("stage=validation"), std::string::npos) << r.error_report;
  EXPECT_NE(r.error_report.find("primary_balance"), std::string::npos) << r.error_report;
  EXPECT_FALSE(fs::exists(c.output_dir));

  // the same file with the default mapping runs
  c.variables.pb = "pb";
  Stages quick;
  quick.diagnostics = false;
  EXPECT_EQ(run_pipeline(c, quick).exit_code, 0);
}

TEST(Pipeline, BreakYearOutsideWindowFailsValidation) {
  tst::TempDir dir("pipeline_gfc");
  auto c = synthetic_config(dir.file("out"));
  c.gfc_break_year = 2030;
  const auto r = run_pipeline(c);
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.error_report.find("gfc_break_year 2030"), std::string::npos);
  EXPECT_FALSE(fs::exists(c.output_dir));
}

TEST(Pipeline, OtherValidationFailures) {
  tst::TempDir dir("pipeline_val");
  auto c = synthetic_config(dir.file("out"));
  c.data_path = dir.file("missing.csv");
  EXPECT_EQ(run_pipeline(c).exit_code, 2);
  c = synthetic_config(dir.file("out"));
  c.groups.push_back({"bogus", {"C01", "ZZ"}});
  EXPECT_EQ(run_pipeline(c).exit_code, 2);
  c = synthetic_config(dir.file("out"));
  c.variables.ca = "debt";
  EXPECT_EQ(run_pipeline(c).exit_code, 2);
}

TEST(Pipeline, ComputationFailureLeavesNoFiles) {
  tst::TempDir dir("pipeline_comp");
  auto c = synthetic_config(dir.file("out"));
  c.csa_lags = 20;
  const auto r = run_pipeline(c);
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.error_report.find("stage=computation"), std::string::npos) << r.error_report;
  EXPECT_FALSE(fs::exists(c.output_dir));
}

TEST(Pipeline, OutputDirThatIsAFile) {
  tst::TempDir dir("pipeline_out");
  const auto blocker = dir.write("taken", "x");
  auto c = synthetic_config(blocker);
  Stages quick;
  quick.diagnostics = quick.regressions = quick.long_run = false;
  const auto r = run_pipeline(c, quick);
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.error_report.find("stage=output"), std::string::npos) << r.error_report;
  EXPECT_EQ(tst::slurp(blocker), "x");
}

TEST(Pipeline, PartialWritesAreRemoved) {
  tst::TempDir dir("pipeline_partial");
  fs::create_directories(dir.file("out/blocked"));
  const Artifacts arts{{"one.tsv", "1\n"}, {"two.tsv", "2\n"}, {"blocked", "3\n"}};
  EXPECT_THROW(write_artifacts(dir.file("out"), arts), Error);
  EXPECT_FALSE(fs::exists(dir.file("out/one.tsv")));
  EXPECT_FALSE(fs::exists(dir.file("out/two.tsv")));
  const auto ok = write_artifacts(dir.file("ok"), {{"one.tsv", "1\n"}});
  ASSERT_EQ(ok.size(), 1u);
  EXPECT_EQ(tst::slurp(ok[0]), "1\n");
}

TEST(Pipeline, OutputDirPrecedence) {
  ::unsetenv(kOutputDirEnv);
  EXPECT_EQ(resolve_output_dir("cfg", std::nullopt), "cfg");
  ::setenv(kOutputDirEnv, "env", 1);
  EXPECT_EQ(resolve_output_dir("cfg", std::nullopt), "env");
  EXPECT_EQ(resolve_output_dir("cfg", std::string("flag")), "flag");
  ::setenv(kOutputDirEnv, "", 1);
  EXPECT_EQ(resolve_output_dir("cfg", std::nullopt), "cfg");
  ::unsetenv(kOutputDirEnv);
}

TEST(Pipeline, ErrorReportIsOneEscapedLine) {
  const auto r = error_report("computation", "RankDeficient", "unit \"A\"\nsecond\\line");
  EXPECT_EQ(r, "error: stage=computation code=RankDeficient message=\"unit \\\"A\\\" second\\\\line\"");
  EXPECT_EQ(r.find('\n'), std::string::npos);
}

TEST(RunConfigFile, ReadsKeysAndGroups) {
  const auto c = load_run_config(parse(
      "data = synthetic\nseed = 7\nthreads = 2\ncsa_lags = 2\njackknife = yes\ndelimiter = tab\n"
      "group.core = [C01, C02, C03]\ngroup.rest = [C04]\nmedian_split = no\nsim_horizon = 200\n"));
  EXPECT_EQ(c.data_path, "synthetic");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.threads, 2u);
  EXPECT_EQ(c.csa_lags, 2);
  EXPECT_TRUE(c.jackknife);
  EXPECT_EQ(c.delimiter, '\t');
  ASSERT_EQ(c.groups.size(), 2u);
  EXPECT_EQ(c.groups[0].label, "core");
  EXPECT_EQ(c.groups[0].members, (std::vector<std::string>{"C01", "C02", "C03"}));
  EXPECT_FALSE(c.median_split);
  EXPECT_EQ(c.sim_horizon, 200u);
  EXPECT_FALSE(load_run_config(parse("csa_lags = auto\n")).csa_lags.has_value());
}

TEST(RunConfigFile, RejectsBadInput) {
  EXPECT_THROW(load_run_config(parse("colour = blue\n")), Error);
  EXPECT_THROW(load_run_config(parse("seed = -1\n")), Error);
  EXPECT_THROW(load_run_config(parse("delimiter = ab\n")), Error);
  EXPECT_THROW(load_run_config(parse("sim_horizon = 0\n")), Error);
  EXPECT_THROW(load_run_config(parse("csa_lags = some\n")), Error);
}

TEST(RunConfigFile, EchoRoundTrips) {
  auto c = synthetic_config("o");
  c.groups.push_back({"g", {"C01", "C,02"}});
  c.csa_lags = 1;
  c.hp_lambda = 6.25;
  const auto again = load_run_config(parse(echo_config(c)));
  EXPECT_EQ(echo_config(again), echo_config(c));
}
