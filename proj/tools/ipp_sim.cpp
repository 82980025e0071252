// ipp_sim: command-line front end for the Monte-Carlo planner comparison.
//
//   ipp_sim run --config run.ini [--planners cmaes,rig] [--trials N] [--out DIR] [--jobs K]
//   ipp_sim validate --config run.ini
//   ipp_sim export-field --config run.ini --trial 0 --out field.csv
//   ipp_sim default-config

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ipp/experiment.hpp"
#include "ipp/world.hpp"

namespace {

ipp::RunConfig load(const std::string& path) {
  return path.empty() ? ipp::RunConfig{} : ipp::load_config(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Informative path planning simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string planners;
  std::string out_dir;
  int trials = 0;
  int jobs = 0;
  int trial = 0;
  std::string field_out = "field.csv";

  auto* run = app.add_subcommand("run", "Run seeded trials and write per-trial CSVs plus summary.csv");
  run->add_option("--config", config_path, "INI run configuration")->required();
  run->add_option("--planners", planners, "Comma-separated subset of cmaes,lattice,rig,coverage");
  run->add_option("--trials", trials, "Number of trials (overrides environment.trials)")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Output directory (overrides output.dir)");
  run->add_option("--jobs", jobs, "Worker threads (overrides output.jobs)")->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "Check a configuration and print derived quantities");
  validate->add_option("--config", config_path, "INI run configuration")->required();

  auto* export_field = app.add_subcommand("export-field", "Write one trial's ground-truth field as CSV");
  export_field->add_option("--config", config_path, "INI run configuration (defaults if omitted)");
  export_field->add_option("--trial", trial, "Trial index")->check(CLI::NonNegativeNumber);
  export_field->add_option("--out", field_out, "Output CSV path");

  app.add_subcommand("default-config", "Print the default configuration");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("default-config")) {
      std::cout << ipp::format_config(ipp::RunConfig{});
      return 0;
    }
    ipp::RunConfig cfg = load(config_path);
    if (*validate) {
      const auto report = ipp::validate(cfg);
      std::cout << report.to_string();
      return report.valid() ? 0 : 1;
    }
    if (*export_field) {
      ipp::GroundTruth gt = ipp::trial_field(cfg, trial);
      ipp::write_field_csv(field_out, gt.geometry, gt.values);
      std::cerr << "wrote " << field_out << " (seed " << gt.seed << ", radius " << ipp::trial_cluster_radius(cfg, trial)
                << " m)\n";
      return 0;
    }
    if (!planners.empty()) cfg.planners = ipp::detail::parse_planners("--planners", planners);
    if (trials > 0) cfg.environment.trials = trials;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (jobs > 0) cfg.jobs = jobs;
    const auto report = ipp::validate(cfg);
    if (!report.valid()) {
      std::cerr << report.to_string();
      return 1;
    }
    const auto result = ipp::run(cfg);
    std::cout << result.summary;
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
