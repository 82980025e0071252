#pragma once

// Two-stage fixed-horizon planner: greedy selection of viewpoints from a
// coarse 3-D lattice, then CMA-ES refinement of the resulting polynomial
// trajectory. Both stages maximize information gain per unit travel time,
// where gain is the reduction in the trace of the map covariance over cells
// whose mean is at or above the interest threshold.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ipp/cmaes.hpp"
#include "ipp/fusion.hpp"
#include "ipp/grid_map.hpp"
#include "ipp/sensor.hpp"
#include "ipp/trajectory.hpp"
#include "ipp/world.hpp"

namespace ipp {

struct Lattice {
  std::vector<Pose> points;
};

/// One lattice level: a k x k grid of points at a fixed altitude.
struct LatticeLevel {
  double altitude_m = 0.0;
  int per_side = 1;
};

inline Lattice make_lattice(const GridGeometry& g, const std::vector<LatticeLevel>& levels) {
  Lattice lattice;
  for (const auto& level : levels) {
    if (level.per_side < 1 || !(level.altitude_m > 0.0)) throw std::invalid_argument("lattice level is degenerate");
    const double k = static_cast<double>(level.per_side);
    for (int j = 0; j < level.per_side; ++j) {
      for (int i = 0; i < level.per_side; ++i) {
        lattice.points.push_back({(i + 0.5) * g.width_m / k, (j + 0.5) * g.height_m / k, level.altitude_m, 0.0});
      }
    }
  }
  return lattice;
}

/// 30 points: 4x4 at 8.66 m (10 m footprint at 60 deg), 3x3 at 15 m,
/// 2x2 at 21.65 m and one point at 26 m whose footprint spans a 30 m field.
inline std::vector<LatticeLevel> default_lattice_levels() {
  return {{8.66, 4}, {15.0, 3}, {21.65, 2}, {26.0, 1}};
}

inline Lattice default_lattice(const GridGeometry& g) { return make_lattice(g, default_lattice_levels()); }

struct CmaesSettings {
  int max_evaluations = 120;
  int population = 0;
  double step_planar_m = 3.0;
  double step_vertical_m = 4.0;
};

struct PlannerConfig {
  double budget_s = 200.0;
  int num_waypoints = 5;
  double mu_threshold = 0.4;  ///< in the map's value units
  Lattice lattice;
  std::size_t measurement_cap = 10;
  CmaesSettings cmaes;
  Dynamics dynamics;
  double min_altitude_m = 1.0;
  double max_altitude_m = 26.0;

  void validate() const {
    if (!(budget_s > 0.0)) throw std::invalid_argument("planner: budget must be positive");
    if (num_waypoints < 2) throw std::invalid_argument("planner: num_waypoints must be at least 2");
    if (!(mu_threshold >= 0.0)) throw std::invalid_argument("planner: mu_threshold must be non-negative");
    if (lattice.points.empty()) throw std::invalid_argument("planner: lattice is empty");
    if (!(min_altitude_m > 0.0 && min_altitude_m < max_altitude_m)) {
      throw std::invalid_argument("planner: altitude bounds must satisfy 0 < min < max");
    }
    dynamics.validate();
  }
};

/// 1 for cells whose mean is at least `threshold`, 0 otherwise.
inline Eigen::VectorXd interest_mask(const GridMap& map, double threshold) {
  return (map.mean.array() >= threshold).cast<double>().matrix();
}

inline Pose clamp_to(const GridGeometry& g, Pose p) {
  p.x = std::clamp(p.x, 0.0, g.width_m);
  p.y = std::clamp(p.y, 0.0, g.height_m);
  p.h = std::max(0.0, p.h);
  return p;
}

/// Masked trace reduction from fusing frames at `poses` in order. Only the
/// covariance is propagated, so no measurement values are needed.
inline double utility(const GridMap& map, const std::vector<Pose>& poses, const SensorModel& sm,
                      const Eigen::VectorXd& mask) {
  if (poses.empty()) return 0.0;
  TraceReduction reduction(map.covariance, mask);
  for (const auto& p : poses) reduction.add(observe(map.geometry, clamp_to(map.geometry, p), sm));
  return reduction.total();
}

inline double utility(const GridMap& map, const std::vector<Pose>& poses, const SensorModel& sm,
                      double mu_threshold) {
  if (poses.empty()) return 0.0;
  return utility(map, poses, sm, interest_mask(map, mu_threshold));
}

/// Greedy viewpoint selection over the lattice. Each pick maximizes
/// single-frame gain divided by straight-line travel time at v_ref, and its
/// frame is fused into a working covariance before the next pick. Points
/// coincident with the previous waypoint are skipped; ties keep the lowest
/// lattice index.
inline std::vector<Pose> greedy_lattice_plan(const GridMap& map, const Pose& start, const PlannerConfig& cfg,
                                             const SensorModel& sm) {
  cfg.validate();
  const Eigen::VectorXd mask = interest_mask(map, cfg.mu_threshold);
  GridMap working = map;
  std::vector<Pose> plan{start};
  plan.front().t = 0.0;
  for (int k = 1; k < cfg.num_waypoints; ++k) {
    const Pose& last = plan.back();
    std::size_t best = cfg.lattice.points.size();
    double best_rate = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cfg.lattice.points.size(); ++j) {
      const Pose& candidate = cfg.lattice.points[j];
      const double d = distance(last, candidate);
      if (d < 1e-6) continue;
      const Observation obs = observe(map.geometry, candidate, sm);
      double gain = 0.0;
      if (!obs.empty()) {
        TraceReduction reduction(working.covariance, mask);
        gain = reduction.add(obs);
      }
      const double rate = gain / (d / cfg.dynamics.v_ref);
      if (rate > best_rate) {
        best_rate = rate;
        best = j;
      }
    }
    if (best == cfg.lattice.points.size()) best = 0;
    const Pose pick = cfg.lattice.points[best];
    fuse_covariance(working, observe(map.geometry, pick, sm));
    plan.push_back(pick);
  }
  return plan;
}

/// Gain per second of the polynomial through `waypoints`, with frames at
/// plan times phase, phase + 1/f, ... capped at cfg.measurement_cap.
inline double plan_rate(const std::vector<Pose>& waypoints, const GridMap& map, const Eigen::VectorXd& mask,
                        const SensorModel& sm, const PlannerConfig& cfg, double phase_s = 0.0) {
  const Trajectory traj = plan_polynomial(waypoints, cfg.dynamics);
  const double time = travel_time(traj);
  if (!(time > 0.0)) return 0.0;
  const auto poses = measurement_poses(traj, sm.frequency_hz, cfg.measurement_cap, phase_s);
  return utility(map, poses, sm, mask) / time;
}

/// Packs waypoints 2..N into the optimizer's decision vector (x, y, h per waypoint).
inline Eigen::VectorXd pack_waypoints(const std::vector<Pose>& waypoints) {
  Eigen::VectorXd v(3 * static_cast<Index>(waypoints.size() - 1));
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    const auto o = 3 * static_cast<Index>(i - 1);
    v(o) = waypoints[i].x;
    v(o + 1) = waypoints[i].y;
    v(o + 2) = waypoints[i].h;
  }
  return v;
}

inline std::vector<Pose> unpack_waypoints(const Pose& start, const Eigen::VectorXd& v) {
  std::vector<Pose> waypoints{start};
  for (Index o = 0; o + 2 < v.size(); o += 3) waypoints.push_back({v(o), v(o + 1), v(o + 2), 0.0});
  return waypoints;
}

struct RefineResult {
  std::vector<Pose> waypoints;
  double initial_rate = 0.0;
  double rate = 0.0;
  int evaluations = 0;
};

/// CMA-ES over the free waypoints (the first stays clamped to the current
/// pose), maximizing plan_rate. Returns whichever of the initial and the
/// optimized waypoints scores better.
inline RefineResult refine_cmaes(const std::vector<Pose>& initial, const GridMap& map, const PlannerConfig& cfg,
                                 const SensorModel& sm, std::uint64_t seed, double phase_s = 0.0) {
  cfg.validate();
  if (initial.size() < 2) throw std::invalid_argument("refine_cmaes: need at least two waypoints");
  const Eigen::VectorXd mask = interest_mask(map, cfg.mu_threshold);
  const Pose& start = initial.front();
  const auto dims = 3 * static_cast<Index>(initial.size() - 1);

  CmaesConfig cc;
  cc.initial_mean = pack_waypoints(initial);
  cc.initial_step_sizes.resize(dims);
  cc.lower.resize(dims);
  cc.upper.resize(dims);
  for (Index o = 0; o < dims; o += 3) {
    cc.initial_step_sizes.segment(o, 3) << cfg.cmaes.step_planar_m, cfg.cmaes.step_planar_m, cfg.cmaes.step_vertical_m;
    cc.lower.segment(o, 3) << 0.0, 0.0, cfg.min_altitude_m;
    cc.upper.segment(o, 3) << map.geometry.width_m, map.geometry.height_m, cfg.max_altitude_m;
  }
  cc.initial_mean = cc.initial_mean.cwiseMax(cc.lower).cwiseMin(cc.upper);
  cc.population = cfg.cmaes.population;
  cc.max_evaluations = cfg.cmaes.max_evaluations;
  cc.seed = seed;

  auto rate_of = [&](const std::vector<Pose>& wps) { return plan_rate(wps, map, mask, sm, cfg, phase_s); };

  RefineResult out;
  out.waypoints = initial;
  out.initial_rate = rate_of(initial);
  out.rate = out.initial_rate;
  try {
    const CmaesResult res = minimize([&](const Eigen::VectorXd& x) { return -rate_of(unpack_waypoints(start, x)); }, cc);
    out.evaluations = res.evaluations;
    if (std::isfinite(res.best_cost) && -res.best_cost > out.initial_rate) {
      out.waypoints = unpack_waypoints(start, res.best);
      out.rate = -res.best_cost;
    }
  } catch (const std::exception&) {
    // Optimizer failure keeps the lattice solution.
  }
  return out;
}

}  // namespace ipp
