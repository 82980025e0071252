#pragma once

// Discretized Gaussian-process terrain belief: a mean vector and full
// covariance over a fixed-resolution 2-D cell grid.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace ipp {

using Index = Eigen::Index;

/// Fixed-resolution grid over a rectangular environment [0,width] x [0,height].
///
/// Cells are linearized row-major: index = iy * num_x + ix, where ix runs
/// along x (width) and iy along y (height). Cell (ix, iy) has its center at
/// ((ix + 0.5) * cell_x, (iy + 0.5) * cell_y) with cell_x = width / num_x.
/// When width is a multiple of the resolution, cell_x equals resolution.
struct GridGeometry {
  double width_m = 30.0;
  double height_m = 30.0;
  double resolution_m = 0.75;
  Index num_x = 40;
  Index num_y = 40;

  static GridGeometry make(double width_m, double height_m, double resolution_m) {
    if (!(width_m > 0.0) || !(height_m > 0.0) || !(resolution_m > 0.0)) {
      throw std::invalid_argument("grid geometry: width, height and resolution must be positive");
    }
    GridGeometry g;
    g.width_m = width_m;
    g.height_m = height_m;
    g.resolution_m = resolution_m;
    g.num_x = static_cast<Index>(std::lround(width_m / resolution_m));
    g.num_y = static_cast<Index>(std::lround(height_m / resolution_m));
    if (g.num_x < 1 || g.num_y < 1) {
      throw std::invalid_argument("grid geometry: resolution coarser than the environment");
    }
    return g;
  }

  Index size() const { return num_x * num_y; }
  double cell_x() const { return width_m / static_cast<double>(num_x); }
  double cell_y() const { return height_m / static_cast<double>(num_y); }

  Index index(Index ix, Index iy) const { return iy * num_x + ix; }
  Index ix(Index idx) const { return idx % num_x; }
  Index iy(Index idx) const { return idx / num_x; }

  double center_x(Index idx) const { return (static_cast<double>(ix(idx)) + 0.5) * cell_x(); }
  double center_y(Index idx) const { return (static_cast<double>(iy(idx)) + 0.5) * cell_y(); }

  bool contains(double x, double y) const {
    return x >= 0.0 && x <= width_m && y >= 0.0 && y <= height_m;
  }

  bool operator==(const GridGeometry&) const = default;
};

/// GP hyperparameters {sigma_n^2, sigma_f^2, l}.
struct Hyperparameters {
  double sigma_n_sq = 1.42;
  double sigma_f_sq = 1.82;
  double lengthscale_m = 3.67;

  void validate() const {
    if (!(sigma_n_sq > 0.0) || !(sigma_f_sq > 0.0) || !(lengthscale_m > 0.0)) {
      throw std::invalid_argument("hyperparameters must be strictly positive");
    }
  }
};

struct GridMap {
  GridGeometry geometry;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;

  Index size() const { return mean.size(); }
};

/// Isotropic Matern 3/2 covariance at distance d.
inline double matern32(double d, const Hyperparameters& hp) {
  const double r = std::sqrt(3.0) * std::abs(d) / hp.lengthscale_m;
  return hp.sigma_f_sq * (1.0 + r) * std::exp(-r);
}

/// Kernel matrix K(X, X) over the cell centers.
inline Eigen::MatrixXd kernel_matrix(const GridGeometry& g, const Hyperparameters& hp) {
  const Index n = g.size();
  Eigen::MatrixXd k(n, n);
  for (Index j = 0; j < n; ++j) {
    const double xj = g.center_x(j), yj = g.center_y(j);
    k(j, j) = hp.sigma_f_sq;
    for (Index i = j + 1; i < n; ++i) {
      const double v = matern32(std::hypot(g.center_x(i) - xj, g.center_y(i) - yj), hp);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

inline void symmetrize(Eigen::MatrixXd& m) {
  m = 0.5 * (m + m.transpose()).eval();
}

/// Correlated prior map: uniform mean and the GP posterior covariance
///   P = K - K [K + sigma_n^2 I]^-1 K
/// with training and prediction locations both equal to the grid centers.
inline GridMap build_prior(const GridGeometry& geometry, const Hyperparameters& hp, double prior_mean) {
  hp.validate();
  if (geometry.size() < 1) {
    throw std::invalid_argument("build_prior: empty grid");
  }
  if (!(prior_mean >= 0.0 && prior_mean <= 100.0)) {
    throw std::invalid_argument("build_prior: prior_mean must lie in [0, 100]");
  }
  const Index n = geometry.size();
  const Eigen::MatrixXd k = kernel_matrix(geometry, hp);
  Eigen::MatrixXd noisy = k;
  noisy.diagonal().array() += hp.sigma_n_sq;
  Eigen::LLT<Eigen::MatrixXd> llt(noisy);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("build_prior: K + sigma_n^2 I is not positive definite");
  }
  // K - K (K+s I)^-1 K = K - V^T V with V = L^-1 K.
  Eigen::MatrixXd v = llt.matrixL().solve(k);
  GridMap map;
  map.geometry = geometry;
  map.mean = Eigen::VectorXd::Constant(n, prior_mean);
  map.covariance = k;
  map.covariance.noalias() -= v.transpose() * v;
  symmetrize(map.covariance);
  return map;
}

inline double trace(const GridMap& map) { return map.covariance.trace(); }

}  // namespace ipp
