#pragma once

// Baseline planners: a boustrophedon coverage sweep and a simplified
// rapidly exploring information gathering (RIG) tree.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "ipp/fusion.hpp"
#include "ipp/planner.hpp"
#include "ipp/trajectory.hpp"
#include "ipp/world.hpp"

namespace ipp {

struct CoveragePath {
  std::vector<Pose> vertices;  ///< polyline corners, t = arrival time
  double speed = 0.0;
  double length = 0.0;
  bool complete = true;        ///< false when v_max could not finish the sweep within budget
};

/// Serpentine sweep along the longer axis at a fixed altitude. Swaths are one
/// footprint side apart and span the full field; the sweep starts at the
/// corner nearest `start` and its speed is chosen so the path takes exactly
/// the budget (capped at v_max).
inline CoveragePath coverage_path(const GridGeometry& g, double altitude_m, double fov_deg, double budget_s,
                                  const Pose& start = {}, double v_max = std::numeric_limits<double>::infinity()) {
  constexpr double kPi = 3.14159265358979323846;
  const double side = 2.0 * altitude_m * std::tan(0.5 * fov_deg * kPi / 180.0);
  if (!(side > 0.0)) throw std::invalid_argument("coverage: altitude gives an empty footprint");
  if (!(budget_s > 0.0)) throw std::invalid_argument("coverage: budget must be positive");

  const bool along_x = g.width_m >= g.height_m;
  const double sweep_len = along_x ? g.width_m : g.height_m;
  const double cross_len = along_x ? g.height_m : g.width_m;
  const int swaths = std::max(1, static_cast<int>(std::ceil(cross_len / side - 1e-3)));

  std::vector<double> offsets;
  for (int i = 0; i < swaths; ++i) offsets.push_back(std::min(0.5 * side + i * side, cross_len - 0.5 * side));
  if (swaths == 1) offsets.front() = 0.5 * cross_len;

  // Start at the corner nearest the start pose.
  const double s_along = along_x ? start.x : start.y;
  const double s_cross = along_x ? start.y : start.x;
  const bool flip_along = s_along > 0.5 * sweep_len;
  const bool flip_cross = s_cross > 0.5 * cross_len;
  if (flip_cross) {
    for (auto& o : offsets) o = cross_len - o;
  }

  CoveragePath path;
  auto push = [&](double along, double cross) {
    Pose p;
    p.x = along_x ? along : cross;
    p.y = along_x ? cross : along;
    p.h = altitude_m;
    if (!path.vertices.empty()) path.length += distance(path.vertices.back(), p);
    path.vertices.push_back(p);
  };
  for (int i = 0; i < swaths; ++i) {
    const bool forward = (i % 2 == 0) != flip_along;
    push(forward ? 0.0 : sweep_len, offsets[static_cast<std::size_t>(i)]);
    push(forward ? sweep_len : 0.0, offsets[static_cast<std::size_t>(i)]);
  }
  path.speed = path.length / budget_s;
  if (path.speed > v_max) {
    path.speed = v_max;
    path.complete = false;
    std::cerr << "warning: coverage sweep of " << path.length << " m does not fit the budget at " << v_max
              << " m/s; flying a partial pass\n";
  }
  double t = 0.0;
  for (std::size_t i = 0; i < path.vertices.size(); ++i) {
    if (i) t += distance(path.vertices[i - 1], path.vertices[i]) / path.speed;
    path.vertices[i].t = t;
  }
  return path;
}

/// Pose on the coverage polyline at time t.
inline Pose coverage_pose_at(const CoveragePath& path, double t) {
  const auto& v = path.vertices;
  if (t <= 0.0 || v.size() == 1) return {v.front().x, v.front().y, v.front().h, t};
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (t <= v[i].t || i + 1 == v.size()) {
      const double span = v[i].t - v[i - 1].t;
      const double a = span > 0.0 ? std::clamp((t - v[i - 1].t) / span, 0.0, 1.0) : 1.0;
      return {v[i - 1].x + a * (v[i].x - v[i - 1].x), v[i - 1].y + a * (v[i].y - v[i - 1].y), v[i].h, t};
    }
  }
  return v.back();
}

/// Measurement poses of the lawnmower sweep, at t = 0, 1/f, ... <= budget.
inline std::vector<Pose> coverage_plan(const GridGeometry& g, double altitude_m, double fov_deg, double budget_s,
                                       double frequency_hz, const Pose& start = {},
                                       double v_max = std::numeric_limits<double>::infinity()) {
  if (!(frequency_hz > 0.0)) throw std::invalid_argument("coverage: frequency must be positive");
  const CoveragePath path = coverage_path(g, altitude_m, fov_deg, budget_s, start, v_max);
  const double end = std::min(budget_s, path.vertices.back().t);
  std::vector<Pose> poses;
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) / frequency_hz;
    if (t > end + 1e-9) break;
    poses.push_back(coverage_pose_at(path, std::min(t, end)));
    poses.back().t = t;
  }
  return poses;
}

struct RigConfig {
  double step_m = 10.0;
  int samples = 200;
};

struct RigVertex {
  Pose pose;
  int parent = -1;
  int depth = 0;
  double gain = 0.0;  ///< cumulative gain along the root path
  double time = 0.0;  ///< cumulative rest-to-rest travel time
};

/// Grows the information-gathering tree from `start`. Samples are drawn
/// uniformly in the workspace box, the nearest vertex with spare depth is
/// steered at most `step_m` toward each sample, and the new vertex's score is
/// its parent's cumulative gain plus the masked single-frame gain at the new
/// pose against the current map. Depth is capped at num_waypoints - 1 edges.
inline std::vector<RigVertex> build_rig_tree(const GridMap& map, const Pose& start, const RigConfig& rig,
                                             const PlannerConfig& cfg, const SensorModel& sm, std::uint64_t seed) {
  if (!(rig.step_m > 0.0)) throw std::invalid_argument("rig: step must be positive");
  const Eigen::VectorXd mask = interest_mask(map, cfg.mu_threshold);
  std::vector<RigVertex> tree;
  tree.push_back({start, -1, 0, 0.0, 0.0});
  tree.front().pose.t = 0.0;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, map.geometry.width_m);
  std::uniform_real_distribution<double> uy(0.0, map.geometry.height_m);
  std::uniform_real_distribution<double> uh(cfg.min_altitude_m, cfg.max_altitude_m);
  const int max_depth = cfg.num_waypoints - 1;

  for (int s = 0; s < rig.samples; ++s) {
    const Pose target{ux(rng), uy(rng), uh(rng), 0.0};
    int nearest = -1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < tree.size(); ++v) {
      if (tree[v].depth >= max_depth) continue;
      const double d = distance(tree[v].pose, target);
      if (d < best) {
        best = d;
        nearest = static_cast<int>(v);
      }
    }
    if (nearest < 0 || best < 1e-9) continue;
    const Pose& from = tree[static_cast<std::size_t>(nearest)].pose;
    Pose to = target;
    if (best > rig.step_m) {
      const double a = rig.step_m / best;
      to = {from.x + a * (target.x - from.x), from.y + a * (target.y - from.y), from.h + a * (target.h - from.h), 0.0};
    }
    const Observation obs = observe(map.geometry, to, sm);
    double gain = 0.0;
    if (!obs.empty()) {
      TraceReduction reduction(map.covariance, mask);
      gain = reduction.add(obs);
    }
    const RigVertex& parent = tree[static_cast<std::size_t>(nearest)];
    tree.push_back({to, nearest, parent.depth + 1, parent.gain + gain,
                    parent.time + segment_time(distance(from, to), cfg.dynamics.v_ref, cfg.dynamics.a_ref)});
  }
  return tree;
}

/// Waypoints from the root to the vertex with the best gain per time.
inline std::vector<Pose> rig_tree_plan(const GridMap& map, const Pose& start, const RigConfig& rig,
                                       const PlannerConfig& cfg, const SensorModel& sm, std::uint64_t seed) {
  const auto tree = build_rig_tree(map, start, rig, cfg, sm, seed);
  int best = -1;
  double best_rate = -std::numeric_limits<double>::infinity();
  for (std::size_t v = 1; v < tree.size(); ++v) {
    const double rate = tree[v].gain / tree[v].time;
    if (rate > best_rate) {
      best_rate = rate;
      best = static_cast<int>(v);
    }
  }
  std::vector<Pose> path;
  for (int v = best; v > 0; v = tree[static_cast<std::size_t>(v)].parent) path.push_back(tree[static_cast<std::size_t>(v)].pose);
  path.push_back(tree.front().pose);
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace ipp
