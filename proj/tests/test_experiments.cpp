#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "scbf/error.hpp"
#include "scbf/experiments.hpp"

using namespace scbf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("scbf_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& file) {
  std::ifstream is(file, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Config, NamesRoundTrip) {
  EXPECT_EQ(all_experiments().size(), 9u);
  for (auto e : all_experiments()) EXPECT_EQ(parse_experiment(to_string(e)), e);
  EXPECT_THROW(parse_experiment("attractor"), Error);
}

TEST(Config, AssignmentParsing) {
  std::istringstream is("# comment\n\nmu = 2   # trailing\n  k_max=4\nepsilons = 0.4, 0.2\n");
  const auto a = parse_assignments(is);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[0], (std::pair<std::string, std::string>{"mu", "2"}));
  EXPECT_EQ(a[2].second, "0.4, 0.2");
  std::istringstream broken("mu 2\n");
  EXPECT_THROW(parse_assignments(broken), Error);
  EXPECT_THROW(split_assignment("=3"), Error);
}

TEST(Config, DefaultsAndOverrides) {
  const auto c = ExperimentConfig::make(Experiment::Usc, {{"k_max", "4"}, {"seed", "9"}, {"epsilons", "0.4,0.2"}});
  EXPECT_EQ(c.params.k_max, 4);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.noise.seed, 9u);
  EXPECT_EQ(c.settings.list("epsilons"), (std::vector<double>{0.4, 0.2}));
  EXPECT_TRUE(c.params.forcing.size() == 0);
  ASSERT_EQ(c.schedule.pullback_times.size(), 1u);
  EXPECT_EQ(c.schedule.longest(), -10.0);
  EXPECT_EQ(c.ensemble_size, 8);

  const auto t = ExperimentConfig::make(Experiment::Trajectory, {{"alpha", "2"}});
  EXPECT_EQ(t.params.alpha, 2.0);
  EXPECT_EQ(t.noise.alpha, 2.0);
  EXPECT_GT(t.params.forcing_norm_H2(), 0.0);
}

TEST(Config, RejectsUnknownAndInvalidValues) {
  const auto make = [](std::string k, std::string v) { return ExperimentConfig::make(Experiment::Usc, {{k, v}}); };
  EXPECT_THROW(make("viscosity", "1"), Error);
  EXPECT_THROW(make("mu", "abc"), Error);
  EXPECT_THROW(make("mu", "1x"), Error);
  EXPECT_THROW(make("mu", "-1"), Error);
  EXPECT_THROW(make("k_max", "0"), Error);
  EXPECT_THROW(make("epsilons", "0.1,0.2"), Error);
  EXPECT_THROW(make("epsilons", "1.5"), Error);
  EXPECT_THROW(make("eps_pair", "0.3"), Error);
  EXPECT_THROW(make("ensemble_size", "0"), Error);
  EXPECT_THROW(make("pullback_times", ""), Error);
  EXPECT_THROW(make("pullback_times", "-1,-0.5"), Error);
  EXPECT_THROW(make("observable", "energy"), Error);
  EXPECT_THROW(make("horizon", "0.0005"), Error);
  EXPECT_THROW(make("noise.refinement", "40"), Error);
  EXPECT_THROW(make("cocycle_pairs", "1-1"), Error);
}

TEST(Report, EmptyReportIsValid) {
  const auto dir = scratch("empty_report");
  Report r;
  EXPECT_TRUE(r.passed());
  emit_report(r, dir);
  const auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_TRUE(j["assertions"].empty());
  EXPECT_TRUE(fs::exists(dir / "summary.md"));
  fs::remove_all(dir);
}

TEST(Report, AssertionsMustBeDeclared) {
  Report r;
  r.assertions = declare_assertions(ExperimentConfig::make(Experiment::UscPair));
  ASSERT_EQ(r.assertions.size(), 1u);
  EXPECT_FALSE(r.passed());
  r.check("pair_ratio", 2.0);
  EXPECT_TRUE(r.passed());
  r.check("pair_ratio", 3.5);
  EXPECT_EQ(r.failed(), std::vector<std::string>{"pair_ratio"});
  EXPECT_THROW(r.check("something_else", 1.0), std::logic_error);
}

TEST(Report, TableFormat) {
  Table t{"usc", {"epsilon", "d_to_baseline", "se"}, {{0.5, 0.1, 1e-6}, {0.25, 0.05, 2e-7}}};
  std::ostringstream os;
  write_table(os, t);
  EXPECT_EQ(os.str(), "epsilon,d_to_baseline,se\n0.5,0.10000000000000001,9.9999999999999995e-07\n"
                      "0.25,0.050000000000000003,1.9999999999999999e-07\n");
}

TEST(Run, IdentitiesWriteArtifactsAndRerunIdentically) {
  const auto a = scratch("identities_a"), b = scratch("identities_b");
  std::ostringstream log;
  auto c = ExperimentConfig::make(Experiment::Identities, {{"k_max", "4"}, {"output_dir", a.string()}});
  EXPECT_EQ(run(c, log), 0) << log.str();
  c.settings.set("output_dir", b.string());
  c.resolve();
  EXPECT_EQ(run(c, log), 0) << log.str();
  for (const char* f : {"summary.json", "summary.md", "manifest.json", "damping_monotonicity.csv"}) {
    EXPECT_TRUE(fs::exists(a / f)) << f;
  }
  EXPECT_EQ(slurp(a / "damping_monotonicity.csv"), slurp(b / "damping_monotonicity.csv"));

  const auto m = nlohmann::json::parse(slurp(a / "manifest.json"));
  EXPECT_EQ(m["experiment"], "identities");
  EXPECT_EQ(m["assertions"].size(), declare_assertions(c).size());
  EXPECT_TRUE(m["finished"].get<bool>());
  EXPECT_TRUE(m.contains("git_describe"));
  EXPECT_EQ(m["settings"]["k_max"], "4");
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Run, UnwritableOutputIsExitTwo) {
  const auto dir = scratch("blocked");
  fs::create_directories(dir);
  std::ofstream(dir / "file") << "x";
  std::ostringstream log;
  const auto c =
      ExperimentConfig::make(Experiment::Identities, {{"k_max", "2"}, {"output_dir", (dir / "file" / "out").string()}});
  EXPECT_EQ(run(c, log), 2);
  EXPECT_NE(log.str().find("not writable"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Run, FailedAssertionIsExitOneAndNamed) {
  // A pullback far shorter than the entry time cannot satisfy the entry assertion.
  const auto dir = scratch("absorbing_short");
  std::ostringstream log;
  const auto c = ExperimentConfig::make(Experiment::Absorbing, {{"k_max", "4"},
                                                                {"pullback_times", "-0.1"},
                                                                {"ensemble_size", "2"},
                                                                {"output_dir", dir.string()}});
  EXPECT_EQ(run(c, log), 1);
  EXPECT_NE(log.str().find("assertion failed: absorbing/entry_time"), std::string::npos) << log.str();
  fs::remove_all(dir);
}
