#pragma once

// Monte-Carlo harness: run configuration, seeded trials across planners,
// per-trial CSV logs and a per-planner summary.
//
// Config files are INI: [section] headers with key = value lines. Every key
// is optional (defaults reproduce the 30 x 30 m benchmark) but unknown
// sections or keys are rejected.
//
// Ground truth is generated in percent and divided by 100 before it reaches
// the filter, so maps, thresholds and every logged metric are in fraction
// units; the GP hyperparameters and sensor variances apply to those units
// as given.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ipp/grid_map.hpp"
#include "ipp/mission.hpp"
#include "ipp/planner.hpp"
#include "ipp/sensor.hpp"
#include "ipp/world.hpp"

namespace ipp {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EnvironmentConfig {
  double width_m = 30.0;
  double height_m = 30.0;
  double resolution_m = 0.75;
  double cluster_radius_min_m = 1.0;
  double cluster_radius_max_m = 3.0;
  int trials = 30;
  std::uint64_t base_seed = 1;
};

struct RunConfig {
  EnvironmentConfig environment;
  Hyperparameters gp;
  double prior_mean_percent = 50.0;
  SensorModel sensor;
  std::vector<PlannerKind> planners{PlannerKind::cmaes, PlannerKind::rig, PlannerKind::coverage};
  double budget_s = 200.0;
  int num_waypoints = 5;
  double mu_threshold_percent = 40.0;
  int measurement_cap = 10;
  std::vector<LatticeLevel> lattice = default_lattice_levels();
  double min_altitude_m = 1.0;
  double max_altitude_m = 26.0;
  Pose start{7.5, 7.5, 8.66, 0.0};
  bool charge_planning_time = false;
  CmaesSettings cmaes;
  RigConfig rig;
  double coverage_altitude_m = 8.66;
  Dynamics dynamics;
  std::string output_dir = "out";
  int jobs = 1;

  GridGeometry geometry() const {
    return GridGeometry::make(environment.width_m, environment.height_m, environment.resolution_m);
  }

  MissionConfig mission() const {
    MissionConfig m;
    m.planner.budget_s = budget_s;
    m.planner.num_waypoints = num_waypoints;
    m.planner.mu_threshold = mu_threshold_percent / 100.0;
    m.planner.lattice = make_lattice(geometry(), lattice);
    m.planner.measurement_cap = static_cast<std::size_t>(measurement_cap);
    m.planner.cmaes = cmaes;
    m.planner.dynamics = dynamics;
    m.planner.min_altitude_m = min_altitude_m;
    m.planner.max_altitude_m = max_altitude_m;
    m.rig = rig;
    m.coverage_altitude_m = coverage_altitude_m;
    m.start = start;
    m.charge_planning_time = charge_planning_time;
    m.value_range = {0.0, 1.0};
    return m;
  }
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v)) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + text + "'");
  }
  return v;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  Int v{};
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + text + "'");
  }
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + text + "'");
}

inline std::vector<PlannerKind> parse_planners(const std::string& key, const std::string& text) {
  std::vector<PlannerKind> out;
  for (const auto& name : split(text, ',')) {
    try {
      const PlannerKind k = parse_planner(name);
      if (std::find(out.begin(), out.end(), k) != out.end()) {
        throw ConfigError("config key '" + key + "': planner '" + name + "' listed twice");
      }
      out.push_back(k);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
  if (out.empty()) throw ConfigError("config key '" + key + "': no planners given");
  return out;
}

/// "8.66x4, 15x3" -> levels (altitude x points per side).
inline std::vector<LatticeLevel> parse_lattice(const std::string& key, const std::string& text) {
  std::vector<LatticeLevel> out;
  for (const auto& item : split(text, ',')) {
    const auto x = item.find('x');
    if (x == std::string::npos) throw ConfigError("config key '" + key + "': expected <altitude>x<count>, got '" + item + "'");
    out.push_back({parse_double(key, item.substr(0, x)), parse_int<int>(key, item.substr(x + 1))});
  }
  if (out.empty()) throw ConfigError("config key '" + key + "': lattice is empty");
  return out;
}

inline std::string join_planners(const std::vector<PlannerKind>& planners) {
  std::string s;
  for (std::size_t i = 0; i < planners.size(); ++i) s += (i ? "," : "") + to_string(planners[i]);
  return s;
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string format_lattice(const std::vector<LatticeLevel>& levels) {
  std::string s;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    s += (i ? "," : "") + format_number(levels[i].altitude_m) + "x" + std::to_string(levels[i].per_side);
  }
  return s;
}

/// Binds each section.key to a setter and a printer over a RunConfig.
struct Field {
  std::function<void(RunConfig&, const std::string& key, const std::string& value)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline const std::map<std::string, std::map<std::string, Field>>& schema() {
  using Sections = std::map<std::string, std::map<std::string, Field>>;
  auto num = [](double RunConfig::*member) {
    return Field{[member](RunConfig& c, const std::string& k, const std::string& v) { c.*member = parse_double(k, v); },
                 [member](const RunConfig& c) { return format_number(c.*member); }};
  };
  auto num_of = [](auto accessor) {
    return Field{[accessor](RunConfig& c, const std::string& k, const std::string& v) { accessor(c) = parse_double(k, v); },
                 [accessor](const RunConfig& c) { return format_number(accessor(const_cast<RunConfig&>(c))); }};
  };
  auto int_of = [](auto accessor) {
    return Field{[accessor](RunConfig& c, const std::string& k, const std::string& v) {
                   accessor(c) = parse_int<std::remove_reference_t<decltype(accessor(c))>>(k, v);
                 },
                 [accessor](const RunConfig& c) { return std::to_string(accessor(const_cast<RunConfig&>(c))); }};
  };
  static const Sections sections = {
      {"environment",
       {{"width_m", num_of([](RunConfig& c) -> double& { return c.environment.width_m; })},
        {"height_m", num_of([](RunConfig& c) -> double& { return c.environment.height_m; })},
        {"resolution_m", num_of([](RunConfig& c) -> double& { return c.environment.resolution_m; })},
        {"cluster_radius_min_m", num_of([](RunConfig& c) -> double& { return c.environment.cluster_radius_min_m; })},
        {"cluster_radius_max_m", num_of([](RunConfig& c) -> double& { return c.environment.cluster_radius_max_m; })},
        {"trials", int_of([](RunConfig& c) -> int& { return c.environment.trials; })},
        {"base_seed", int_of([](RunConfig& c) -> std::uint64_t& { return c.environment.base_seed; })}}},
      {"gp",
       {{"sigma_n_sq", num_of([](RunConfig& c) -> double& { return c.gp.sigma_n_sq; })},
        {"sigma_f_sq", num_of([](RunConfig& c) -> double& { return c.gp.sigma_f_sq; })},
        {"lengthscale_m", num_of([](RunConfig& c) -> double& { return c.gp.lengthscale_m; })},
        {"prior_mean_percent", num(&RunConfig::prior_mean_percent)}}},
      {"sensor",
       {{"a", num_of([](RunConfig& c) -> double& { return c.sensor.a; })},
        {"b", num_of([](RunConfig& c) -> double& { return c.sensor.b; })},
        {"fov_deg", num_of([](RunConfig& c) -> double& { return c.sensor.fov_deg; })},
        {"scale_altitude_m", num_of([](RunConfig& c) -> double& { return c.sensor.scale_altitude_m; })},
        {"scale_factor", num_of([](RunConfig& c) -> double& { return c.sensor.scale_factor; })},
        {"frequency_hz", num_of([](RunConfig& c) -> double& { return c.sensor.frequency_hz; })}}},
      {"planner",
       {{"planners", Field{[](RunConfig& c, const std::string& k, const std::string& v) { c.planners = parse_planners(k, v); },
                           [](const RunConfig& c) { return join_planners(c.planners); }}},
        {"budget_s", num(&RunConfig::budget_s)},
        {"num_waypoints", int_of([](RunConfig& c) -> int& { return c.num_waypoints; })},
        {"mu_threshold_percent", num(&RunConfig::mu_threshold_percent)},
        {"measurement_cap", int_of([](RunConfig& c) -> int& { return c.measurement_cap; })},
        {"lattice", Field{[](RunConfig& c, const std::string& k, const std::string& v) { c.lattice = parse_lattice(k, v); },
                          [](const RunConfig& c) { return format_lattice(c.lattice); }}},
        {"min_altitude_m", num(&RunConfig::min_altitude_m)},
        {"max_altitude_m", num(&RunConfig::max_altitude_m)},
        {"start_x", num_of([](RunConfig& c) -> double& { return c.start.x; })},
        {"start_y", num_of([](RunConfig& c) -> double& { return c.start.y; })},
        {"start_h", num_of([](RunConfig& c) -> double& { return c.start.h; })},
        {"charge_planning_time",
         Field{[](RunConfig& c, const std::string& k, const std::string& v) { c.charge_planning_time = parse_bool(k, v); },
               [](const RunConfig& c) { return std::string(c.charge_planning_time ? "true" : "false"); }}}}},
      {"cmaes",
       {{"max_evaluations", int_of([](RunConfig& c) -> int& { return c.cmaes.max_evaluations; })},
        {"population", int_of([](RunConfig& c) -> int& { return c.cmaes.population; })},
        {"step_planar_m", num_of([](RunConfig& c) -> double& { return c.cmaes.step_planar_m; })},
        {"step_vertical_m", num_of([](RunConfig& c) -> double& { return c.cmaes.step_vertical_m; })}}},
      {"rig",
       {{"step_m", num_of([](RunConfig& c) -> double& { return c.rig.step_m; })},
        {"samples", int_of([](RunConfig& c) -> int& { return c.rig.samples; })}}},
      {"coverage", {{"altitude_m", num(&RunConfig::coverage_altitude_m)}}},
      {"dynamics",
       {{"v_ref", num_of([](RunConfig& c) -> double& { return c.dynamics.v_ref; })},
        {"a_ref", num_of([](RunConfig& c) -> double& { return c.dynamics.a_ref; })},
        {"order", int_of([](RunConfig& c) -> int& { return c.dynamics.order; })}}},
      {"output",
       {{"dir", Field{[](RunConfig& c, const std::string&, const std::string& v) { c.output_dir = trim(v); },
                      [](const RunConfig& c) { return c.output_dir; }}},
        {"jobs", int_of([](RunConfig& c) -> int& { return c.jobs; })}}},
  };
  return sections;
}

}  // namespace detail

/// Parses INI text on top of the defaults. Throws ConfigError naming the key.
inline RunConfig parse_config(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax error: ") + e.what());
  }
  RunConfig cfg;
  const auto& schema = detail::schema();
  for (const auto& [section, body] : tree) {
    const auto s = schema.find(section);
    if (s == schema.end()) {
      if (body.empty()) throw ConfigError("config key '" + section + "': keys must live inside a [section]");
      throw ConfigError("config section '" + section + "' is unknown");
    }
    for (const auto& [key, value] : body) {
      const auto f = s->second.find(key);
      if (f == s->second.end()) throw ConfigError("config key '" + section + "." + key + "' is unknown");
      f->second.set(cfg, section + "." + key, value.data());
    }
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Serializes every key, so the output round-trips through parse_config.
inline std::string format_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& [section, fields] : detail::schema()) {
    out += "[" + section + "]\n";
    for (const auto& [key, field] : fields) out += key + " = " + field.get(cfg) + "\n";
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationReport {
  std::vector<std::string> violations;
  std::vector<std::pair<std::string, std::string>> derived;

  bool valid() const { return violations.empty(); }

  std::string to_string() const {
    std::string s = valid() ? "valid\n" : "invalid\n";
    for (const auto& v : violations) s += "  violation: " + v + "\n";
    for (const auto& [k, v] : derived) s += "  " + k + ": " + v + "\n";
    return s;
  }
};

inline ValidationReport validate(const RunConfig& c) {
  ValidationReport r;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) r.violations.push_back(msg);
  };
  const auto& e = c.environment;
  need(e.width_m > 0.0, "environment.width_m must be positive");
  need(e.height_m > 0.0, "environment.height_m must be positive");
  need(e.resolution_m > 0.0, "environment.resolution_m must be positive");
  need(e.trials >= 1, "environment.trials must be at least 1");
  need(e.cluster_radius_min_m >= 0.5 && e.cluster_radius_max_m <= 10.0 && e.cluster_radius_min_m <= e.cluster_radius_max_m,
       "environment.cluster_radius_min_m/max_m must satisfy 0.5 <= min <= max <= 10");
  need(c.gp.sigma_n_sq > 0.0, "gp.sigma_n_sq must be positive");
  need(c.gp.sigma_f_sq > 0.0, "gp.sigma_f_sq must be positive");
  need(c.gp.lengthscale_m > 0.0, "gp.lengthscale_m must be positive");
  need(c.prior_mean_percent >= 0.0 && c.prior_mean_percent <= 100.0, "gp.prior_mean_percent must lie in [0, 100]");
  need(c.sensor.a > 0.0, "sensor.a must be positive");
  need(c.sensor.b > 0.0, "sensor.b must be positive");
  need(c.sensor.fov_deg > 0.0 && c.sensor.fov_deg < 180.0, "sensor.fov_deg must lie in (0, 180)");
  need(c.sensor.scale_factor > 0.0 && c.sensor.scale_factor <= 1.0, "sensor.scale_factor must lie in (0, 1]");
  need(c.sensor.scale_altitude_m >= 0.0, "sensor.scale_altitude_m must be non-negative");
  need(c.sensor.frequency_hz > 0.0, "sensor.frequency_hz must be positive");
  need(!c.planners.empty(), "planner.planners must list at least one planner");
  need(c.budget_s > 0.0, "planner.budget_s must be positive");
  need(c.num_waypoints >= 2, "planner.num_waypoints must be at least 2");
  need(c.mu_threshold_percent >= 0.0 && c.mu_threshold_percent <= 100.0, "planner.mu_threshold_percent must lie in [0, 100]");
  need(c.measurement_cap >= 1, "planner.measurement_cap must be at least 1");
  need(!c.lattice.empty(), "planner.lattice must have at least one level");
  for (const auto& l : c.lattice) need(l.altitude_m > 0.0 && l.per_side >= 1, "planner.lattice levels need altitude > 0 and count >= 1");
  need(c.min_altitude_m > 0.0 && c.min_altitude_m < c.max_altitude_m, "planner.min_altitude_m/max_altitude_m must satisfy 0 < min < max");
  need(c.start.x >= 0.0 && c.start.x <= e.width_m && c.start.y >= 0.0 && c.start.y <= e.height_m && c.start.h >= 0.0,
       "planner.start_x/start_y/start_h must lie inside the environment");
  need(c.cmaes.max_evaluations >= 1, "cmaes.max_evaluations must be positive");
  need(c.cmaes.population == 0 || c.cmaes.population >= 4, "cmaes.population must be 0 (default) or at least 4");
  need(c.cmaes.step_planar_m > 0.0 && c.cmaes.step_vertical_m > 0.0, "cmaes.step_planar_m/step_vertical_m must be positive");
  need(c.rig.step_m > 0.0, "rig.step_m must be positive");
  need(c.rig.samples >= 0, "rig.samples must be non-negative");
  need(c.coverage_altitude_m > 0.0, "coverage.altitude_m must be positive");
  need(c.dynamics.v_ref > 0.0 && c.dynamics.a_ref > 0.0, "dynamics.v_ref/a_ref must be positive");
  need(c.dynamics.order >= 9, "dynamics.order must be at least 9");
  need(c.jobs >= 1, "output.jobs must be at least 1");
  need(!c.output_dir.empty(), "output.dir must not be empty");

  if (e.width_m > 0.0 && e.height_m > 0.0 && e.resolution_m > 0.0) {
    try {
      const auto g = c.geometry();
      r.derived.emplace_back("grid", std::to_string(g.num_x) + " x " + std::to_string(g.num_y) + " cells");
    } catch (const std::exception& ex) {
      r.violations.push_back(std::string("environment: ") + ex.what());
    }
  }
  if (c.sensor.fov_deg > 0.0 && c.sensor.fov_deg < 180.0) {
    r.derived.emplace_back("coverage footprint side (m)",
                           detail::format_number(2.0 * c.sensor.footprint_half_side(c.coverage_altitude_m)));
  }
  if (c.sensor.frequency_hz > 0.0 && c.budget_s > 0.0) {
    r.derived.emplace_back("max frames per mission",
                           std::to_string(static_cast<long>(std::floor(c.budget_s * c.sensor.frequency_hz + 1e-9)) + 1));
  }
  std::size_t lattice_points = 0;
  for (const auto& l : c.lattice) lattice_points += static_cast<std::size_t>(std::max(0, l.per_side * l.per_side));
  r.derived.emplace_back("lattice points", std::to_string(lattice_points));
  r.derived.emplace_back("planners", detail::join_planners(c.planners));
  return r;
}

// ---------------------------------------------------------------------------
// Execution

inline std::uint64_t trial_seed(const RunConfig& c, int trial) {
  return c.environment.base_seed + static_cast<std::uint64_t>(trial);
}

/// Cluster radius drawn uniformly in the configured range from the trial seed.
inline double trial_cluster_radius(const RunConfig& c, int trial) {
  std::mt19937_64 rng(trial_seed(c, trial) ^ 0xC2B2AE3D27D4EB4FULL);
  std::uniform_real_distribution<double> u(c.environment.cluster_radius_min_m, c.environment.cluster_radius_max_m);
  return u(rng);
}

inline GroundTruth trial_field(const RunConfig& c, int trial) {
  return generate_field(c.geometry(), trial_cluster_radius(c, trial), trial_seed(c, trial));
}

inline std::string trial_filename(int trial, PlannerKind planner) {
  return "trial_" + std::to_string(trial) + "_" + to_string(planner) + ".csv";
}

inline const char* kTrialHeader = "t,trace,rmse,wrmse,mll,wmll";
inline const char* kSummaryHeader = "planner,trials,trace,rmse,wrmse,mll,wmll";

/// CSV body for one mission; numbers are printed with 10 significant digits.
inline std::string trial_csv(const TrialRecord& record) {
  std::string out = std::string(kTrialHeader) + "\n";
  for (const auto& s : record.snapshots) {
    out += detail::format_number(s.t) + "," + detail::format_number(s.trace) + "," + detail::format_number(s.rmse) + "," +
           detail::format_number(s.wrmse) + "," + detail::format_number(s.mll) + "," + detail::format_number(s.wmll) + "\n";
  }
  return out;
}

/// Final-row metrics parsed back from a trial CSV body.
inline std::array<double, 5> final_metrics(const std::string& csv) {
  const auto lines = detail::split(csv, '\n');
  if (lines.size() < 2) throw std::runtime_error("trial log has no rows");
  const auto cols = detail::split(lines.back(), ',');
  if (cols.size() != 6) throw std::runtime_error("trial log row has " + std::to_string(cols.size()) + " columns");
  std::array<double, 5> m{};
  for (std::size_t i = 0; i < 5; ++i) m[i] = detail::parse_double("csv", cols[i + 1]);
  return m;
}

/// Per-planner means of the final rows of each trial log.
inline std::string summary_csv(const std::vector<PlannerKind>& planners,
                               const std::map<PlannerKind, std::vector<std::string>>& logs) {
  std::string out = std::string(kSummaryHeader) + "\n";
  for (PlannerKind p : planners) {
    const auto& csvs = logs.at(p);
    std::array<double, 5> sum{};
    for (const auto& csv : csvs) {
      const auto m = final_metrics(csv);
      for (std::size_t i = 0; i < 5; ++i) sum[i] += m[i];
    }
    out += to_string(p) + "," + std::to_string(csvs.size());
    for (double v : sum) out += "," + detail::format_number(v / static_cast<double>(csvs.size()));
    out += "\n";
  }
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

struct RunResult {
  std::vector<TrialRecord> records;  ///< trial-major, planners in configured order
  std::string summary;
};

/// Executes every (trial, planner) mission on `cfg.jobs` worker threads,
/// writes one CSV per mission and then summary.csv. If any mission fails the
/// error is rethrown and no summary is written.
inline RunResult run(const RunConfig& cfg, std::ostream* log = &std::cerr) {
  const auto report = validate(cfg);
  if (!report.valid()) throw ConfigError("invalid config: " + report.violations.front());

  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);

  const GridGeometry g = cfg.geometry();
  const MissionConfig mission = cfg.mission();
  const GridMap prior = build_prior(g, cfg.gp, cfg.prior_mean_percent / 100.0);

  const int trials = cfg.environment.trials;
  const auto np = static_cast<int>(cfg.planners.size());
  const int jobs_total = trials * np;
  std::vector<TrialRecord> records(static_cast<std::size_t>(jobs_total));
  std::vector<std::string> csvs(static_cast<std::size_t>(jobs_total));
  std::atomic<int> next{0};
  std::mutex guard;
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      const int job = next.fetch_add(1);
      if (job >= jobs_total) return;
      {
        std::lock_guard<std::mutex> lock(guard);
        if (failure) return;
      }
      const int trial = job / np;
      const PlannerKind planner = cfg.planners[static_cast<std::size_t>(job % np)];
      try {
        GroundTruth gt = trial_field(cfg, trial);
        gt.values /= 100.0;
        TrialRecord rec = run_mission(gt, prior, planner, mission, cfg.sensor, trial_seed(cfg, trial));
        rec.trial_id = trial;
        std::string csv = trial_csv(rec);
        write_text(dir / trial_filename(trial, planner), csv);
        if (log) {
          std::lock_guard<std::mutex> lock(guard);
          const auto& last = rec.snapshots.back();
          *log << "trial " << trial << " " << rec.planner << ": frames=" << rec.frames.size() << " trace=" << last.trace
               << " rmse=" << last.rmse << " planning=" << rec.planning_seconds << "s\n";
        }
        records[static_cast<std::size_t>(job)] = std::move(rec);
        csvs[static_cast<std::size_t>(job)] = std::move(csv);
      } catch (...) {
        std::lock_guard<std::mutex> lock(guard);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const int workers = std::max(1, std::min(cfg.jobs, jobs_total));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::map<PlannerKind, std::vector<std::string>> logs;
  for (int job = 0; job < jobs_total; ++job) {
    logs[cfg.planners[static_cast<std::size_t>(job % np)]].push_back(csvs[static_cast<std::size_t>(job)]);
  }
  RunResult result;
  result.summary = summary_csv(cfg.planners, logs);
  write_text(dir / "summary.csv", result.summary);
  result.records = std::move(records);
  return result;
}

}  // namespace ipp
