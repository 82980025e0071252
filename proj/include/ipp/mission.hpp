#pragma once

// Budgeted replan-execute loop shared by every planner.
//
// Frames are triggered on a global clock at t = k / f. Each round plans from
// the current pose, flies the whole plan, fuses a simulated noisy frame at
// every trigger that falls inside it and logs the map metrics after each
// fusion. The mission ends once the elapsed time reaches the budget.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipp/benchmarks.hpp"
#include "ipp/fusion.hpp"
#include "ipp/metrics.hpp"
#include "ipp/planner.hpp"
#include "ipp/trajectory.hpp"
#include "ipp/world.hpp"

namespace ipp {

enum class PlannerKind { cmaes, lattice, rig, coverage };

inline std::string to_string(PlannerKind kind) {
  switch (kind) {
    case PlannerKind::cmaes: return "cmaes";
    case PlannerKind::lattice: return "lattice";
    case PlannerKind::rig: return "rig";
    case PlannerKind::coverage: return "coverage";
  }
  return "unknown";
}

inline PlannerKind parse_planner(const std::string& name) {
  if (name == "cmaes") return PlannerKind::cmaes;
  if (name == "lattice") return PlannerKind::lattice;
  if (name == "rig") return PlannerKind::rig;
  if (name == "coverage") return PlannerKind::coverage;
  throw std::invalid_argument("unknown planner '" + name + "' (expected cmaes, lattice, rig or coverage)");
}

struct MissionConfig {
  PlannerConfig planner;
  RigConfig rig;
  double coverage_altitude_m = 8.66;
  Pose start{7.5, 7.5, 8.66, 0.0};
  bool charge_planning_time = false;
  ValueRange value_range;  ///< field range the metrics clamp the mean to
};

struct TrialRecord {
  int trial_id = 0;
  std::uint64_t seed = 0;
  std::string planner;
  std::vector<MetricSnapshot> snapshots;  ///< t = 0 prior, then one per fused frame
  std::vector<Pose> frames;               ///< where each fused frame was taken
  double planning_seconds = 0.0;
};

namespace detail {

/// One round of flight: pose as a function of leg time, and the leg length.
struct Leg {
  std::function<Pose(double)> pose_at;
  double duration = 0.0;
  Pose end;
};

inline Leg polynomial_leg(const std::vector<Pose>& waypoints, const Dynamics& dyn) {
  Trajectory traj = plan_polynomial(waypoints, dyn);
  Leg leg;
  leg.duration = std::max(travel_time(traj), kMinSegmentTime);
  leg.end = waypoints.back();
  leg.pose_at = [traj = std::move(traj)](double t) { return traj.pose_at(t); };
  return leg;
}

}  // namespace detail

/// Runs one mission of `kind` against ground truth expressed in the map's units.
inline TrialRecord run_mission(const GroundTruth& gt, const GridMap& prior, PlannerKind kind,
                               const MissionConfig& cfg, const SensorModel& sm, std::uint64_t seed) {
  cfg.planner.validate();
  sm.validate();
  if (!(gt.geometry == prior.geometry)) throw std::invalid_argument("run_mission: ground truth and map grids differ");

  const GridGeometry& g = prior.geometry;
  const double budget = cfg.planner.budget_s;
  const double period = 1.0 / sm.frequency_hz;

  // Separate streams so planner randomness never shifts the sensor noise.
  std::mt19937_64 noise_rng(seed);
  std::mt19937_64 plan_rng(seed ^ 0x9E3779B97F4A7C15ULL);

  TrialRecord record;
  record.seed = seed;
  record.planner = to_string(kind);

  GridMap map = prior;
  Pose pose = clamp_to(g, cfg.start);
  pose.t = 0.0;
  double elapsed = 0.0;
  long next_trigger = 0;
  record.snapshots.push_back(snapshot(0.0, map, gt.values, cfg.value_range));

  while (elapsed < budget) {
    const double phase = static_cast<double>(next_trigger) * period - elapsed;
    const auto t0 = std::chrono::steady_clock::now();
    detail::Leg leg;
    switch (kind) {
      case PlannerKind::coverage: {
        CoveragePath path = coverage_path(g, cfg.coverage_altitude_m, sm.fov_deg, budget - elapsed, pose);
        leg.duration = path.vertices.back().t;
        leg.end = path.vertices.back();
        leg.pose_at = [path = std::move(path)](double t) { return coverage_pose_at(path, t); };
        break;
      }
      case PlannerKind::lattice:
      case PlannerKind::cmaes: {
        auto waypoints = greedy_lattice_plan(map, pose, cfg.planner, sm);
        if (kind == PlannerKind::cmaes) {
          waypoints = refine_cmaes(waypoints, map, cfg.planner, sm, plan_rng(), phase).waypoints;
        }
        leg = detail::polynomial_leg(waypoints, cfg.planner.dynamics);
        break;
      }
      case PlannerKind::rig: {
        leg = detail::polynomial_leg(rig_tree_plan(map, pose, cfg.rig, cfg.planner, sm, plan_rng()),
                                     cfg.planner.dynamics);
        break;
      }
    }
    const double planning = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    record.planning_seconds += planning;
    if (cfg.charge_planning_time) {
      // The vehicle hovers while planning; triggers during that time are lost.
      elapsed += planning;
      next_trigger = std::max(next_trigger, static_cast<long>(std::ceil(elapsed / period - 1e-9)));
    }

    const double leg_end = elapsed + leg.duration;
    for (;; ++next_trigger) {
      const double t = static_cast<double>(next_trigger) * period;
      if (t > leg_end + 1e-9 || t > budget + 1e-9) break;
      Pose at = clamp_to(g, leg.pose_at(std::clamp(t - elapsed, 0.0, leg.duration)));
      at.t = t;
      const Observation obs = observe(g, at, sm);
      if (obs.empty()) continue;
      fuse(map, sample_measurement(gt, at, sm, noise_rng()));
      record.frames.push_back(at);
      record.snapshots.push_back(snapshot(t, map, gt.values, cfg.value_range));
    }
    elapsed = leg_end;
    pose = clamp_to(g, leg.end);
    pose.t = 0.0;
  }
  return record;
}

/// Builds the prior from `hp` and runs the mission.
inline TrialRecord run_mission(const GroundTruth& gt, const MissionConfig& cfg, const SensorModel& sm,
                               const Hyperparameters& hp, double prior_mean, PlannerKind kind, std::uint64_t seed) {
  const GridMap prior = build_prior(gt.geometry, hp, prior_mean);
  return run_mission(gt, prior, kind, cfg, sm, seed);
}

}  // namespace ipp
