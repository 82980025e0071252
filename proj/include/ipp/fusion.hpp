#pragma once

// Sequential Bayesian fusion of camera frames into a GridMap.
//
// Every update is a linear-Gaussian Kalman step
//   mu+ = mu- + K v,   P+ = P- - K H P-,
//   K = P- H^T S^-1,   v = z - H mu-,   S = H P- H^T + R,
// whose cost depends only on the map size and the frame, never on how many
// frames were fused before.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "ipp/grid_map.hpp"
#include "ipp/sensor.hpp"

namespace ipp {

struct MeasurementRow {
  std::vector<Index> cells;
  std::vector<double> weights;
  double value = 0.0;
  double noise_var = 0.0;
};

struct Measurement {
  std::vector<MeasurementRow> rows;

  Index num_rows() const { return static_cast<Index>(rows.size()); }
};

class DegenerateMeasurement : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <typename Row>
void check_row(const Row& row, Index n, std::size_t r) {
  const std::string at = "row " + std::to_string(r) + ": ";
  if (row.cells.empty() || row.cells.size() != row.weights.size()) {
    throw std::invalid_argument(at + "cells and weights must be non-empty and of equal length");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < row.cells.size(); ++i) {
    if (row.cells[i] < 0 || row.cells[i] >= n) throw std::out_of_range(at + "cell index outside grid");
    if (!(row.weights[i] >= 0.0)) throw std::invalid_argument(at + "negative weight");
    sum += row.weights[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument(at + "weights must sum to 1");
}

/// B = P H^T, one column per row of H.
template <typename Rows>
Eigen::MatrixXd cov_times_ht(const Eigen::MatrixXd& cov, const Rows& rows) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(cov.rows(), static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t i = 0; i < rows[r].cells.size(); ++i) {
      b.col(static_cast<Index>(r)) += rows[r].weights[i] * cov.col(rows[r].cells[i]);
    }
  }
  return b;
}

/// H X for a matrix X with one row per grid cell.
template <typename Rows>
Eigen::MatrixXd h_times(const Rows& rows, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t i = 0; i < rows[r].cells.size(); ++i) {
      out.row(static_cast<Index>(r)) += rows[r].weights[i] * x.row(rows[r].cells[i]);
    }
  }
  return out;
}

/// Columns of X^T H^T for X stored transposed (m x n): gathers contiguous columns.
template <typename Rows>
Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& xt, const Rows& rows) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(xt.rows(), static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t i = 0; i < rows[r].cells.size(); ++i) {
      out.col(static_cast<Index>(r)) += rows[r].weights[i] * xt.col(rows[r].cells[i]);
    }
  }
  return out;
}

/// Cholesky of the innovation covariance; throws when S is numerically singular.
inline Eigen::LLT<Eigen::MatrixXd> factor_innovation(const Eigen::MatrixXd& s) {
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  const double scale = std::max(s.diagonal().maxCoeff(), std::numeric_limits<double>::min());
  if (llt.info() != Eigen::Success) {
    throw DegenerateMeasurement("innovation covariance is not positive definite (duplicate noise-free rows?)");
  }
  const Eigen::MatrixXd& l = llt.matrixLLT();
  for (Index i = 0; i < s.rows(); ++i) {
    if (!(l(i, i) * l(i, i) > 1e-13 * scale)) {
      throw DegenerateMeasurement("innovation covariance is singular at row " + std::to_string(i));
    }
  }
  return llt;
}

}  // namespace detail

inline void validate(const Measurement& meas, const GridGeometry& geometry) {
  if (meas.rows.empty()) throw std::invalid_argument("measurement has no rows");
  for (std::size_t r = 0; r < meas.rows.size(); ++r) {
    detail::check_row(meas.rows[r], geometry.size(), r);
    if (!(meas.rows[r].noise_var > 0.0) || !std::isfinite(meas.rows[r].value)) {
      throw std::invalid_argument("row " + std::to_string(r) + ": noise_var must be positive and value finite");
    }
  }
}

/// Fuses one frame into the map in place.
inline void fuse(GridMap& map, const Measurement& meas) {
  validate(meas, map.geometry);
  const Index m = meas.num_rows();
  const Eigen::MatrixXd b = detail::cov_times_ht(map.covariance, meas.rows);
  Eigen::MatrixXd s = detail::h_times(meas.rows, b);
  Eigen::VectorXd innovation(m);
  for (Index r = 0; r < m; ++r) {
    const auto& row = meas.rows[static_cast<std::size_t>(r)];
    s(r, r) += row.noise_var;
    double predicted = 0.0;
    for (std::size_t i = 0; i < row.cells.size(); ++i) predicted += row.weights[i] * map.mean(row.cells[i]);
    innovation(r) = row.value - predicted;
  }
  s = 0.5 * (s + s.transpose()).eval();
  const auto llt = detail::factor_innovation(s);
  // W = L^-1 B^T so that K v = W^T L^-1 v and K H P = W^T W.
  const Eigen::MatrixXd w = llt.matrixL().solve(b.transpose());
  const Eigen::VectorXd u = llt.matrixL().solve(innovation);
  map.mean.noalias() += w.transpose() * u;
  map.covariance.noalias() -= w.transpose() * w;
  symmetrize(map.covariance);
}

inline GridMap kf_update(GridMap map, const Measurement& meas) {
  fuse(map, meas);
  return map;
}

/// Covariance-only update: the value-free half of the Kalman step.
inline void fuse_covariance(GridMap& map, const Observation& obs) {
  if (obs.empty()) return;
  if (!(obs.noise_var > 0.0)) throw std::invalid_argument("fuse_covariance: noise_var must be positive");
  const Eigen::MatrixXd b = detail::cov_times_ht(map.covariance, obs.rows);
  Eigen::MatrixXd s = detail::h_times(obs.rows, b);
  s.diagonal().array() += obs.noise_var;
  s = 0.5 * (s + s.transpose()).eval();
  const auto llt = detail::factor_innovation(s);
  const Eigen::MatrixXd w = llt.matrixL().solve(b.transpose());
  map.covariance.noalias() -= w.transpose() * w;
  symmetrize(map.covariance);
}

/// Masked trace reduction of a frame sequence, evaluated against a fixed
/// covariance without materializing the intermediate posteriors.
///
/// After frames 1..j the covariance is P - sum_k W_k^T W_k, where each W_k is
/// m_k x n. Adding a frame costs O(n m (m + sum of earlier m_k)) instead of
/// the O(n^2 m) of a dense update. The referenced covariance must outlive
/// this object.
class TraceReduction {
 public:
  /// `mask(i)` is 1 for cells counted in the trace and 0 otherwise.
  TraceReduction(const Eigen::MatrixXd& covariance, Eigen::VectorXd mask)
      : covariance_(covariance), mask_(std::move(mask)) {
    if (mask_.size() != covariance_.rows()) throw std::invalid_argument("TraceReduction: mask size mismatch");
  }

  /// Conditions on one more frame and returns its marginal masked reduction.
  double add(const Observation& obs) {
    if (obs.empty()) return 0.0;
    Eigen::MatrixXd b = detail::cov_times_ht(covariance_, obs.rows);
    for (const auto& w : factors_) {
      const Eigen::MatrixXd g = detail::gather_columns(w, obs.rows);
      b.noalias() -= w.transpose() * g;
    }
    Eigen::MatrixXd s = detail::h_times(obs.rows, b);
    s.diagonal().array() += obs.noise_var;
    s = 0.5 * (s + s.transpose()).eval();
    const auto llt = detail::factor_innovation(s);
    Eigen::MatrixXd w = llt.matrixL().solve(b.transpose());
    const double gain = w.colwise().squaredNorm().dot(mask_);
    factors_.push_back(std::move(w));
    total_ += gain;
    return gain;
  }

  double total() const { return total_; }

 private:
  const Eigen::MatrixXd& covariance_;
  Eigen::VectorXd mask_;
  std::vector<Eigen::MatrixXd> factors_;
  double total_ = 0.0;
};

}  // namespace ipp
