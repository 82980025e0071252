#pragma once

// Map quality against ground truth. Values are compared in whatever units
// the map and truth share; the mission loop uses fractions in [0, 1]. The
// filter never clamps its mean, so metrics clamp it to the field's value
// range when one is given.

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "ipp/grid_map.hpp"

namespace ipp {

inline constexpr double kVarianceFloor = 1e-9;

/// Admissible field values; the default leaves the mean untouched.
struct ValueRange {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

struct MetricSnapshot {
  double t = 0.0;
  double trace = 0.0;
  double rmse = 0.0;
  double wrmse = 0.0;
  double mll = 0.0;
  double wmll = 0.0;
};

namespace detail {

inline void check_sizes(const GridMap& map, const Eigen::VectorXd& truth) {
  if (map.mean.size() != truth.size()) throw std::invalid_argument("metrics: map and ground truth sizes differ");
}

/// Normalized weights proportional to the truth; uniform when the truth sums to zero.
inline Eigen::VectorXd truth_weights(const Eigen::VectorXd& truth) {
  const double total = truth.sum();
  if (!(total > 0.0)) return Eigen::VectorXd::Constant(truth.size(), 1.0 / static_cast<double>(truth.size()));
  return truth / total;
}

inline Eigen::ArrayXd clamped_mean(const GridMap& map, const ValueRange& range) {
  return map.mean.array().max(range.lo).min(range.hi);
}

inline Eigen::VectorXd cell_log_loss(const GridMap& map, const Eigen::VectorXd& truth, const ValueRange& range) {
  constexpr double kTwoPi = 6.283185307179586476925;
  const Eigen::ArrayXd var = map.covariance.diagonal().array().max(kVarianceFloor);
  const Eigen::ArrayXd err = truth.array() - clamped_mean(map, range);
  return (0.5 * (kTwoPi * var).log() + err.square() / (2.0 * var)).matrix();
}

}  // namespace detail

inline double rmse(const GridMap& map, const Eigen::VectorXd& truth, const ValueRange& range = {}) {
  detail::check_sizes(map, truth);
  return std::sqrt((detail::clamped_mean(map, range) - truth.array()).square().mean());
}

/// Mean per-cell Gaussian negative log likelihood of the truth (lower is better).
inline double mll(const GridMap& map, const Eigen::VectorXd& truth, const ValueRange& range = {}) {
  detail::check_sizes(map, truth);
  return detail::cell_log_loss(map, truth, range).mean();
}

/// RMSE with per-cell weights proportional to the true value.
inline double wrmse(const GridMap& map, const Eigen::VectorXd& truth, const ValueRange& range = {}) {
  detail::check_sizes(map, truth);
  const Eigen::VectorXd w = detail::truth_weights(truth);
  return std::sqrt(w.dot((detail::clamped_mean(map, range) - truth.array()).square().matrix()));
}

inline double wmll(const GridMap& map, const Eigen::VectorXd& truth, const ValueRange& range = {}) {
  detail::check_sizes(map, truth);
  return detail::truth_weights(truth).dot(detail::cell_log_loss(map, truth, range));
}

inline MetricSnapshot snapshot(double t, const GridMap& map, const Eigen::VectorXd& truth,
                               const ValueRange& range = {}) {
  return {t, trace(map), rmse(map, truth, range), wrmse(map, truth, range), mll(map, truth, range),
          wmll(map, truth, range)};
}

}  // namespace ipp
