#pragma once

// Simulated environment: ground-truth random fields and the downward camera.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "ipp/fusion.hpp"
#include "ipp/grid_map.hpp"
#include "ipp/sensor.hpp"

namespace ipp {

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double h = 0.0;  ///< altitude above ground
  double t = 0.0;  ///< mission seconds

  bool operator==(const Pose&) const = default;
};

inline double distance(const Pose& a, const Pose& b) {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.h - b.h) * (a.h - b.h));
}

struct GroundTruth {
  GridGeometry geometry;
  Eigen::VectorXd values;
  std::uint64_t seed = 0;
};

/// Lower factor L with L L^T = C for a squared-exponential correlation over the grid.
inline Eigen::MatrixXd field_factor(const GridGeometry& geometry, double cluster_radius_m) {
  const Index n = geometry.size();
  Eigen::MatrixXd c(n, n);
  const double inv = 1.0 / (2.0 * cluster_radius_m * cluster_radius_m);
  for (Index j = 0; j < n; ++j) {
    for (Index i = j; i < n; ++i) {
      const double dx = geometry.center_x(i) - geometry.center_x(j);
      const double dy = geometry.center_y(i) - geometry.center_y(j);
      const double v = std::exp(-(dx * dx + dy * dy) * inv);
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  c.diagonal().array() += 1e-8;
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  // Smooth kernels can lose definiteness to round-off; use the clipped spectrum.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

/// Zero-mean Gaussian random field with squared-exponential correlation of
/// lengthscale `cluster_radius_m`, min-max rescaled onto [0, 100].
inline GroundTruth generate_field(const GridGeometry& geometry, double cluster_radius_m, std::uint64_t seed) {
  if (geometry.size() < 2) throw std::invalid_argument("generate_field: grid needs at least two cells");
  if (!(cluster_radius_m >= 0.5 && cluster_radius_m <= 10.0)) {
    throw std::invalid_argument("generate_field: cluster radius must lie in [0.5, 10] m");
  }
  const Eigen::MatrixXd factor = field_factor(geometry, cluster_radius_m);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(geometry.size());
  for (Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
  Eigen::VectorXd field = factor * z;
  const double lo = field.minCoeff();
  const double hi = field.maxCoeff();
  if (!(hi > lo)) throw std::runtime_error("generate_field: degenerate field");
  GroundTruth gt;
  gt.geometry = geometry;
  gt.seed = seed;
  gt.values = (field.array() - lo) / (hi - lo) * 100.0;
  return gt;
}

/// Cells whose centers fall inside the square footprint of half side
/// h tan(fov/2) around (x, y). Zero altitude sees nothing.
inline std::vector<Index> footprint(const GridGeometry& geometry, const Pose& pose, double fov_deg) {
  std::vector<Index> cells;
  if (!(pose.h > 0.0)) return cells;
  constexpr double kPi = 3.14159265358979323846;
  const double half = pose.h * std::tan(0.5 * fov_deg * kPi / 180.0) + 1e-9;
  const double cx = geometry.cell_x(), cy = geometry.cell_y();
  // Center of column i is (i + 0.5) cx; solve for the admissible index range.
  const auto lo_x = std::max<Index>(0, static_cast<Index>(std::ceil((pose.x - half) / cx - 0.5)));
  const auto hi_x = std::min<Index>(geometry.num_x - 1, static_cast<Index>(std::floor((pose.x + half) / cx - 0.5)));
  const auto lo_y = std::max<Index>(0, static_cast<Index>(std::ceil((pose.y - half) / cy - 0.5)));
  const auto hi_y = std::min<Index>(geometry.num_y - 1, static_cast<Index>(std::floor((pose.y + half) / cy - 0.5)));
  for (Index iy = lo_y; iy <= hi_y; ++iy) {
    for (Index ix = lo_x; ix <= hi_x; ++ix) cells.push_back(geometry.index(ix, iy));
  }
  return cells;
}

/// Observation structure of a frame taken at `pose`; empty when nothing is in view.
inline Observation observe(const GridGeometry& geometry, const Pose& pose, const SensorModel& sm) {
  Observation obs;
  const auto cells = footprint(geometry, pose, sm.fov_deg);
  if (cells.empty()) return obs;
  obs.rows = build_observation(geometry, cells, pose.h, sm);
  obs.noise_var = noise_variance(pose.h, sm);
  return obs;
}

/// Simulated noisy frame: each row reads the weighted ground truth plus
/// Gaussian noise of variance noise_variance(h).
inline Measurement sample_measurement(const GroundTruth& gt, const Pose& pose, const SensorModel& sm,
                                      std::uint64_t seed) {
  const auto cells = footprint(gt.geometry, pose, sm.fov_deg);
  const auto rows = build_observation(gt.geometry, cells, pose.h, sm);
  const double var = noise_variance(pose.h, sm);
  const double sd = std::sqrt(var);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Measurement meas;
  meas.rows.reserve(rows.size());
  for (const auto& row : rows) {
    double truth = 0.0;
    for (std::size_t i = 0; i < row.cells.size(); ++i) truth += row.weights[i] * gt.values(row.cells[i]);
    meas.rows.push_back({row.cells, row.weights, truth + sd * normal(rng), var});
  }
  return meas;
}

/// Writes a per-cell field as CSV: a geometry header line, then one line per
/// grid row (iy ascending) with num_x comma-separated values.
inline void write_field_csv(const std::string& path, const GridGeometry& geometry, const Eigen::VectorXd& values) {
  if (values.size() != geometry.size()) throw std::invalid_argument("write_field_csv: size mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "# num_x=" << geometry.num_x << ",num_y=" << geometry.num_y << ",resolution_m=" << geometry.resolution_m
      << ",width_m=" << geometry.width_m << ",height_m=" << geometry.height_m << '\n';
  out << std::setprecision(10);
  for (Index iy = 0; iy < geometry.num_y; ++iy) {
    for (Index ix = 0; ix < geometry.num_x; ++ix) {
      if (ix) out << ',';
      out << values(geometry.index(ix, iy));
    }
    out << '\n';
  }
}

}  // namespace ipp
