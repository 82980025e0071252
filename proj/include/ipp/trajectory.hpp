#pragma once

// Smooth polynomial trajectories through 3-D control waypoints.
//
// Each of the N-1 segments is an order-k polynomial per axis (x, y, h) in
// normalized time tau = t / T_s. Coefficients minimize the integrated squared
// snap subject to waypoint interpolation, zero derivatives 1..4 at both ends
// and continuity of derivatives 1..4 at interior waypoints. Segment durations
// come from a rest-to-rest trapezoidal velocity profile on the straight line
// between consecutive waypoints.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/LU>

#include "ipp/world.hpp"

namespace ipp {

struct Dynamics {
  double v_ref = 5.0;  ///< m/s
  double a_ref = 2.0;  ///< m/s^2
  int order = 12;      ///< polynomial order k

  void validate() const {
    if (!(v_ref > 0.0) || !(a_ref > 0.0)) throw std::invalid_argument("dynamics: v_ref and a_ref must be positive");
    if (order < 9) throw std::invalid_argument("dynamics: polynomial order must be at least 9");
  }
};

/// Shortest segment duration, used for coincident or nearly coincident waypoints.
inline constexpr double kMinSegmentTime = 0.1;

/// Rest-to-rest travel time over `length` with speed and acceleration limits.
inline double segment_time(double length, double v_ref, double a_ref) {
  double t;
  if (length * a_ref <= v_ref * v_ref) {
    t = 2.0 * std::sqrt(length / a_ref);  // triangular profile, never reaches v_ref
  } else {
    t = length / v_ref + v_ref / a_ref;
  }
  return std::max(t, kMinSegmentTime);
}

namespace detail {

inline constexpr int kSnap = 4;

/// d^r/dtau^r of tau^j, as a coefficient times tau^(j-r).
inline double falling(int j, int r) {
  double v = 1.0;
  for (int i = 0; i < r; ++i) v *= static_cast<double>(j - i);
  return v;
}

/// Row vector mapping one segment's coefficients to d^r/dt^r at tau.
inline Eigen::RowVectorXd derivative_row(int order, int r, double tau, double duration) {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(order + 1);
  const double scale = std::pow(duration, -r);
  for (int j = r; j <= order; ++j) row(j) = falling(j, r) * std::pow(tau, j - r) * scale;
  return row;
}

/// Equality constraints A c = b (b per axis is built separately) for all segments.
inline Eigen::MatrixXd snap_constraints(const std::vector<double>& times, int order) {
  const int m = static_cast<int>(times.size());
  const int nc = order + 1;
  const int rows = 2 * m + 2 * kSnap + kSnap * (m - 1);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, m * nc);
  int r = 0;
  for (int s = 0; s < m; ++s) {
    a.block(r++, s * nc, 1, nc) = derivative_row(order, 0, 0.0, times[s]);
    a.block(r++, s * nc, 1, nc) = derivative_row(order, 0, 1.0, times[s]);
  }
  for (int d = 1; d <= kSnap; ++d) {
    a.block(r++, 0, 1, nc) = derivative_row(order, d, 0.0, times.front());
    a.block(r++, (m - 1) * nc, 1, nc) = derivative_row(order, d, 1.0, times.back());
  }
  for (int s = 0; s + 1 < m; ++s) {
    for (int d = 1; d <= kSnap; ++d) {
      a.block(r, s * nc, 1, nc) = derivative_row(order, d, 1.0, times[s]);
      a.block(r, (s + 1) * nc, 1, nc) = -derivative_row(order, d, 0.0, times[s + 1]);
      ++r;
    }
  }
  return a;
}

/// Hessian of sum_s integral_0^T_s (d^4 p / dt^4)^2 dt in the stacked coefficients.
inline Eigen::MatrixXd snap_hessian(const std::vector<double>& times, int order) {
  const int m = static_cast<int>(times.size());
  const int nc = order + 1;
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(m * nc, m * nc);
  for (int s = 0; s < m; ++s) {
    const double scale = std::pow(times[s], 1 - 2 * kSnap);
    for (int i = kSnap; i <= order; ++i) {
      for (int j = kSnap; j <= order; ++j) {
        q(s * nc + i, s * nc + j) =
            scale * falling(i, kSnap) * falling(j, kSnap) / static_cast<double>(i + j - 2 * kSnap + 1);
      }
    }
  }
  return q;
}

}  // namespace detail

class Trajectory {
 public:
  Trajectory() = default;

  const std::vector<Pose>& waypoints() const { return waypoints_; }
  const std::vector<double>& segment_times() const { return times_; }
  int order() const { return order_; }
  std::size_t num_segments() const { return times_.size(); }

  /// Stacked coefficients of one axis (0 = x, 1 = y, 2 = h), segment-major.
  const Eigen::VectorXd& coefficients(int axis) const { return coeffs_[static_cast<std::size_t>(axis)]; }

  double total_time() const {
    double t = 0.0;
    for (double s : times_) t += s;
    return t;
  }

  /// d^r/dt^r of the position at plan time t (r = 0 for position).
  Eigen::Vector3d derivative(double t, int r) const {
    if (times_.empty()) {
      if (r > 0) return Eigen::Vector3d::Zero();
      return {waypoints_.front().x, waypoints_.front().y, waypoints_.front().h};
    }
    std::size_t s = 0;
    double start = 0.0;
    while (s + 1 < times_.size() && t > start + times_[s]) {
      start += times_[s];
      ++s;
    }
    const double tau = std::clamp((t - start) / times_[s], 0.0, 1.0);
    return segment_derivative(s, tau, r);
  }

  Eigen::Vector3d segment_derivative(std::size_t s, double tau, int r) const {
    const int nc = order_ + 1;
    const Eigen::RowVectorXd row = detail::derivative_row(order_, r, tau, times_[s]);
    Eigen::Vector3d out;
    for (int axis = 0; axis < 3; ++axis) {
      out(axis) = row.dot(coeffs_[static_cast<std::size_t>(axis)].segment(static_cast<Index>(s) * nc, nc));
    }
    return out;
  }

  /// Pose at plan time t; altitude is floored at zero.
  Pose pose_at(double t) const {
    const Eigen::Vector3d p = derivative(t, 0);
    return {p(0), p(1), std::max(0.0, p(2)), t};
  }

  /// Integrated squared snap summed over the three axes.
  double snap_cost() const {
    if (times_.empty()) return 0.0;
    const Eigen::MatrixXd q = detail::snap_hessian(times_, order_);
    double cost = 0.0;
    for (const auto& c : coeffs_) cost += c.dot(q * c);
    return cost;
  }

 private:
  friend Trajectory plan_polynomial(const std::vector<Pose>&, const Dynamics&);

  std::vector<Pose> waypoints_;
  std::vector<double> times_;
  int order_ = 12;
  std::array<Eigen::VectorXd, 3> coeffs_;
};

/// Minimum-snap trajectory through `waypoints` (first waypoint = current pose).
inline Trajectory plan_polynomial(const std::vector<Pose>& waypoints, const Dynamics& dyn) {
  dyn.validate();
  if (waypoints.empty()) throw std::invalid_argument("plan_polynomial: no waypoints");
  Trajectory traj;
  traj.waypoints_ = waypoints;
  traj.order_ = dyn.order;
  if (waypoints.size() == 1) return traj;

  const std::size_t m = waypoints.size() - 1;
  traj.times_.resize(m);
  for (std::size_t s = 0; s < m; ++s) {
    traj.times_[s] = segment_time(distance(waypoints[s], waypoints[s + 1]), dyn.v_ref, dyn.a_ref);
  }

  const Eigen::MatrixXd a = detail::snap_constraints(traj.times_, dyn.order);
  const Eigen::MatrixXd q = detail::snap_hessian(traj.times_, dyn.order);
  const Index nv = a.cols(), nr = a.rows();
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nv + nr, nv + nr);
  kkt.topLeftCorner(nv, nv) = 2.0 * q;
  kkt.topRightCorner(nv, nr) = a.transpose();
  kkt.bottomLeftCorner(nr, nv) = a;

  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nv + nr, 3);
  for (std::size_t s = 0; s < m; ++s) {
    const Pose& p0 = waypoints[s];
    const Pose& p1 = waypoints[s + 1];
    rhs.row(nv + 2 * static_cast<Index>(s)) << p0.x, p0.y, p0.h;
    rhs.row(nv + 2 * static_cast<Index>(s) + 1) << p1.x, p1.y, p1.h;
  }
  const Eigen::MatrixXd sol = kkt.fullPivLu().solve(rhs);
  for (int axis = 0; axis < 3; ++axis) traj.coeffs_[static_cast<std::size_t>(axis)] = sol.col(axis).head(nv);
  return traj;
}

inline double travel_time(const Trajectory& traj) { return traj.total_time(); }

/// Constant-frequency trigger poses at plan times phase, phase + 1/f, ...
/// up to the end of the trajectory, truncated to `cap` poses (0 = no cap).
inline std::vector<Pose> measurement_poses(const Trajectory& traj, double frequency_hz, std::size_t cap = 10,
                                           double phase_s = 0.0) {
  if (!(frequency_hz > 0.0)) throw std::invalid_argument("measurement_poses: frequency must be positive");
  std::vector<Pose> poses;
  const double period = 1.0 / frequency_hz;
  const double end = traj.total_time() + 1e-9;
  for (std::size_t k = 0;; ++k) {
    if (cap != 0 && poses.size() >= cap) break;
    const double t = phase_s + static_cast<double>(k) * period;
    if (t > end) break;
    poses.push_back(traj.pose_at(std::min(t, traj.total_time())));
    poses.back().t = t;
  }
  return poses;
}

/// Samples the trajectory at `rate_hz` into CSV columns t,x,y,h.
inline void write_trajectory_csv(const std::string& path, const Trajectory& traj, double rate_hz = 50.0) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "t,x,y,h\n" << std::setprecision(10);
  const double total = traj.total_time();
  const auto steps = static_cast<std::size_t>(std::floor(total * rate_hz + 1e-9));
  for (std::size_t i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / rate_hz;
    const Pose p = traj.pose_at(t);
    out << t << ',' << p.x << ',' << p.y << ',' << p.h << '\n';
  }
}

}  // namespace ipp
