#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "ipp/experiment.hpp"

using namespace ipp;
namespace fs = std::filesystem;

namespace {

// A 6 x 6 m field and a 20 s budget keep every run well under a second.
const char* kTinyConfig = R"(
[environment]
width_m = 6
height_m = 6
trials = 3
base_seed = 100

[planner]
planners = cmaes, lattice, rig, coverage
budget_s = 20
lattice = 2.6x2, 5.2x1
max_altitude_m = 8
start_x = 1.5
start_y = 1.5
start_h = 2.6

[cmaes]
max_evaluations = 24

[rig]
samples = 30
step_m = 4

[coverage]
altitude_m = 2.6
)";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) files[e.path().filename().string()] = slurp(e.path());
  return files;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, DefaultsAreTheBenchmark) {
  const RunConfig c = parse_config("");
  EXPECT_EQ(c.environment.width_m, 30.0);
  EXPECT_EQ(c.environment.resolution_m, 0.75);
  EXPECT_EQ(c.environment.trials, 30);
  EXPECT_EQ(c.gp.sigma_n_sq, 1.42);
  EXPECT_EQ(c.sensor.frequency_hz, 0.15);
  EXPECT_EQ(c.budget_s, 200.0);
  EXPECT_EQ(c.num_waypoints, 5);
  EXPECT_EQ(c.mu_threshold_percent, 40.0);
  EXPECT_EQ(c.planners.size(), 3u);
  EXPECT_EQ(c.mission().planner.lattice.points.size(), 30u);
  EXPECT_EQ(c.mission().planner.mu_threshold, 0.4);
  EXPECT_TRUE(validate(c).valid());
  EXPECT_EQ(validate(c).to_string().rfind("valid\n", 0), 0u);
}

TEST(Config, ParsesSectionsAndRoundTrips) {
  const RunConfig c = parse_config(kTinyConfig);
  EXPECT_EQ(c.environment.width_m, 6.0);
  EXPECT_EQ(c.environment.base_seed, 100u);
  EXPECT_EQ(c.planners.size(), 4u);
  EXPECT_EQ(c.lattice.size(), 2u);
  EXPECT_EQ(c.lattice[0].per_side, 2);
  EXPECT_EQ(c.rig.samples, 30);
  const std::string text = format_config(c);
  EXPECT_EQ(format_config(parse_config(text)), text);
}

TEST(Config, UnknownKeysAndBadValuesNameTheKey) {
  EXPECT_NE(error_of("[planner]\nbudget = 3\n").find("planner.budget"), std::string::npos);
  EXPECT_NE(error_of("[plans]\nx = 3\n").find("plans"), std::string::npos);
  EXPECT_NE(error_of("[sensor]\na = lots\n").find("sensor.a"), std::string::npos);
  EXPECT_NE(error_of("[environment]\ntrials = 2.5\n").find("environment.trials"), std::string::npos);
  EXPECT_NE(error_of("[planner]\nplanners = cmaes, bo\n").find("planner.planners"), std::string::npos);
  EXPECT_NE(error_of("[planner]\nlattice = 5\n").find("planner.lattice"), std::string::npos);
}

TEST(Validate, ThresholdOutOfRangeIsNamed) {
  RunConfig c = parse_config("[planner]\nmu_threshold_percent = 150\n");
  const auto r = validate(c);
  ASSERT_FALSE(r.valid());
  EXPECT_NE(r.to_string().find("planner.mu_threshold_percent"), std::string::npos);
}

TEST(Validate, ReportsDerivedQuantities) {
  const auto r = validate(RunConfig{});
  std::map<std::string, std::string> d(r.derived.begin(), r.derived.end());
  EXPECT_NEAR(std::stod(d.at("coverage footprint side (m)")), 10.0, 1e-3);
  EXPECT_EQ(d.at("max frames per mission"), "31");
  EXPECT_EQ(d.at("grid"), "40 x 40 cells");
}

TEST(Validate, CollectsEveryViolation) {
  RunConfig c;
  c.environment.trials = 0;
  c.sensor.fov_deg = 200.0;
  c.jobs = 0;
  EXPECT_EQ(validate(c).violations.size(), 3u);
}

TEST(Seeds, FieldsFollowBaseSeedPlusTrial) {
  RunConfig c = parse_config(kTinyConfig);
  EXPECT_EQ(trial_seed(c, 2), 102u);
  const double r = trial_cluster_radius(c, 2);
  EXPECT_GE(r, 1.0);
  EXPECT_LE(r, 3.0);
  EXPECT_EQ(trial_field(c, 2).values, trial_field(c, 2).values);
  EXPECT_NE(trial_field(c, 1).values, trial_field(c, 2).values);
}

TEST(Run, WritesOneCsvPerTrialAndPlannerPlusSummary) {
  RunConfig c = parse_config(kTinyConfig);
  c.output_dir = fresh_dir("ipp_run_layout").string();
  const auto result = run(c, nullptr);
  const auto files = read_dir(c.output_dir);
  EXPECT_EQ(files.size(), 3u * 4u + 1u);
  for (int t = 0; t < 3; ++t) {
    for (PlannerKind p : c.planners) {
      const auto& csv = files.at(trial_filename(t, p));
      EXPECT_EQ(csv.rfind("t,trace,rmse,wrmse,mll,wmll\n", 0), 0u);
      EXPECT_EQ(csv.find("e+"), std::string::npos);
    }
  }
  EXPECT_EQ(files.at("summary.csv"), result.summary);
  EXPECT_EQ(result.records.size(), 12u);
  fs::remove_all(c.output_dir);
}

TEST(Run, NinetyOneFilesForThirtyTrialsOfThreePlanners) {
  RunConfig c = parse_config(kTinyConfig);
  c.environment.trials = 30;
  c.planners = {PlannerKind::lattice, PlannerKind::rig, PlannerKind::coverage};
  c.budget_s = 8.0;
  c.output_dir = fresh_dir("ipp_run_count").string();
  run(c, nullptr);
  EXPECT_EQ(read_dir(c.output_dir).size(), 91u);
  fs::remove_all(c.output_dir);
}

TEST(Run, ByteIdenticalAcrossRunsAndJobCounts) {
  RunConfig c = parse_config(kTinyConfig);
  c.output_dir = fresh_dir("ipp_run_a").string();
  run(c, nullptr);
  const auto a = read_dir(c.output_dir);
  c.output_dir = fresh_dir("ipp_run_b").string();
  run(c, nullptr);
  const auto b = read_dir(c.output_dir);
  c.output_dir = fresh_dir("ipp_run_c").string();
  c.jobs = 3;
  run(c, nullptr);
  const auto d = read_dir(c.output_dir);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, d);
  for (const auto* dir : {"ipp_run_a", "ipp_run_b", "ipp_run_c"}) fs::remove_all(fs::temp_directory_path() / dir);
}

TEST(Run, SummaryIsRecomputableFromTrialFiles) {
  RunConfig c = parse_config(kTinyConfig);
  c.output_dir = fresh_dir("ipp_run_summary").string();
  const auto result = run(c, nullptr);
  const auto files = read_dir(c.output_dir);
  std::istringstream summary(files.at("summary.csv"));
  std::string line;
  std::getline(summary, line);
  EXPECT_EQ(line, "planner,trials,trace,rmse,wrmse,mll,wmll");
  for (PlannerKind p : c.planners) {
    ASSERT_TRUE(std::getline(summary, line));
    // Independent recomputation: average the last line of each trial file.
    std::vector<double> sums(5, 0.0);
    for (int t = 0; t < c.environment.trials; ++t) {
      std::istringstream csv(files.at(trial_filename(t, p)));
      std::string row, last;
      while (std::getline(csv, row)) {
        if (!row.empty()) last = row;
      }
      std::istringstream cols(last);
      std::string cell;
      std::getline(cols, cell, ',');
      for (double& s : sums) {
        std::getline(cols, cell, ',');
        s += std::stod(cell);
      }
    }
    std::istringstream cols(line);
    std::string cell;
    std::getline(cols, cell, ',');
    EXPECT_EQ(cell, to_string(p));
    std::getline(cols, cell, ',');
    EXPECT_EQ(cell, std::to_string(c.environment.trials));
    for (double s : sums) {
      std::getline(cols, cell, ',');
      const double mean = s / c.environment.trials;
      EXPECT_NEAR(std::stod(cell), mean, 1e-9 * std::max(1.0, std::abs(mean)));
    }
  }
  fs::remove_all(c.output_dir);
}

TEST(Run, TraceNonIncreasingInEveryLog) {
  RunConfig c = parse_config(kTinyConfig);
  c.output_dir = fresh_dir("ipp_run_trace").string();
  const auto result = run(c, nullptr);
  for (const auto& rec : result.records) {
    for (std::size_t i = 1; i < rec.snapshots.size(); ++i) {
      EXPECT_LE(rec.snapshots[i].trace, rec.snapshots[i - 1].trace) << rec.planner << " trial " << rec.trial_id;
    }
  }
  fs::remove_all(c.output_dir);
}

TEST(Run, InvalidConfigWritesNothing) {
  RunConfig c = parse_config(kTinyConfig);
  c.output_dir = fresh_dir("ipp_run_invalid").string();
  c.mu_threshold_percent = 150.0;
  EXPECT_THROW(run(c, nullptr), ConfigError);
  EXPECT_FALSE(fs::exists(c.output_dir));
}
