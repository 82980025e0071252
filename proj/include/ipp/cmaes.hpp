#pragma once

// (mu/mu_w, lambda) Covariance Matrix Adaptation Evolution Strategy for
// box-constrained minimization.
//
// Standard constants: weighted recombination, cumulative step-size
// adaptation and rank-one plus rank-mu covariance updates. Per-coordinate
// initial step sizes are handled by optimizing in a scaled space where the
// initial search distribution is isotropic with sigma = 1.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace ipp {

struct CmaesConfig {
  Eigen::VectorXd initial_mean;
  Eigen::VectorXd initial_step_sizes;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  int population = 0;  ///< 0 selects 4 + floor(3 ln n)
  int max_evaluations = 1000;
  std::uint64_t seed = 1;
  int max_resamples = 100;
  double min_step = 1e-8;

  Eigen::Index dimension() const { return initial_mean.size(); }

  int lambda() const {
    if (population > 0) return population;
    return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(dimension()))));
  }

  void validate() const {
    const auto n = dimension();
    if (n < 1) throw std::invalid_argument("cmaes: dimension must be at least 1");
    if (initial_step_sizes.size() != n || lower.size() != n || upper.size() != n) {
      throw std::invalid_argument("cmaes: vector sizes disagree with dimension");
    }
    if (lambda() < 4) throw std::invalid_argument("cmaes: population must be at least 4");
    if (max_evaluations < 1) throw std::invalid_argument("cmaes: max_evaluations must be positive");
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!std::isfinite(lower(i)) || !std::isfinite(upper(i)) || !(lower(i) < upper(i))) {
        throw std::invalid_argument("cmaes: bounds must be finite with lower < upper");
      }
      if (!(initial_step_sizes(i) > 0.0)) throw std::invalid_argument("cmaes: step sizes must be positive");
    }
  }
};

struct CmaesResult {
  Eigen::VectorXd best;
  double best_cost = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  int generations = 0;
  std::vector<double> best_history;  ///< best-so-far cost after each generation
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

inline CmaesResult minimize(const Objective& objective, const CmaesConfig& cfg) {
  cfg.validate();
  using Eigen::Index;
  using Eigen::MatrixXd;
  using Eigen::VectorXd;

  const Index n = cfg.dimension();
  const double dn = static_cast<double>(n);
  const int lambda = cfg.lambda();
  const int mu = lambda / 2;

  VectorXd weights(mu);
  for (int i = 0; i < mu; ++i) weights(i) = std::log(mu + 0.5) - std::log(i + 1.0);
  weights /= weights.sum();
  const double mu_eff = 1.0 / weights.squaredNorm();

  const double c_sigma = (mu_eff + 2.0) / (dn + mu_eff + 5.0);
  const double d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff - 1.0) / (dn + 1.0)) - 1.0) + c_sigma;
  const double c_c = (4.0 + mu_eff / dn) / (dn + 4.0 + 2.0 * mu_eff / dn);
  const double c_1 = 2.0 / ((dn + 1.3) * (dn + 1.3) + mu_eff);
  const double c_mu = std::min(1.0 - c_1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((dn + 2.0) * (dn + 2.0) + mu_eff));
  const double chi_n = std::sqrt(dn) * (1.0 - 1.0 / (4.0 * dn) + 1.0 / (21.0 * dn * dn));

  // Internal coordinates u map to x = origin + scale .* u.
  const VectorXd origin = cfg.initial_mean.cwiseMax(cfg.lower).cwiseMin(cfg.upper);
  const VectorXd& scale = cfg.initial_step_sizes;
  const VectorXd lo = (cfg.lower - origin).cwiseQuotient(scale);
  const VectorXd hi = (cfg.upper - origin).cwiseQuotient(scale);
  auto to_external = [&](const VectorXd& u) -> VectorXd { return origin + scale.cwiseProduct(u); };
  auto inside = [&](const VectorXd& u) { return (u.array() >= lo.array()).all() && (u.array() <= hi.array()).all(); };

  VectorXd mean = VectorXd::Zero(n);
  double sigma = 1.0;
  MatrixXd cov = MatrixXd::Identity(n, n);
  MatrixXd basis = MatrixXd::Identity(n, n);
  VectorXd axis = VectorXd::Ones(n);
  VectorXd path_sigma = VectorXd::Zero(n);
  VectorXd path_c = VectorXd::Zero(n);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  CmaesResult result;
  auto evaluate = [&](const VectorXd& u) {
    const VectorXd x = to_external(u);
    double f = objective(x);
    if (!std::isfinite(f)) f = std::numeric_limits<double>::infinity();
    ++result.evaluations;
    if (f < result.best_cost || result.best.size() == 0) {
      result.best_cost = f;
      result.best = x;
    }
    return f;
  };

  std::vector<VectorXd> candidates(static_cast<std::size_t>(lambda));
  std::vector<double> costs(static_cast<std::size_t>(lambda));
  std::vector<int> order(static_cast<std::size_t>(lambda));

  while (result.evaluations + lambda <= cfg.max_evaluations) {
    for (int k = 0; k < lambda; ++k) {
      VectorXd u(n);
      bool ok = false;
      for (int attempt = 0; attempt < cfg.max_resamples && !ok; ++attempt) {
        VectorXd z(n);
        for (Index i = 0; i < n; ++i) z(i) = normal(rng);
        u = mean + sigma * (basis * axis.cwiseProduct(z));
        ok = inside(u);
      }
      if (!ok) u = u.cwiseMax(lo).cwiseMin(hi);
      candidates[static_cast<std::size_t>(k)] = u;
      costs[static_cast<std::size_t>(k)] = evaluate(u);
    }
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return costs[static_cast<std::size_t>(a)] < costs[static_cast<std::size_t>(b)];
    });

    const VectorXd old_mean = mean;
    mean.setZero();
    for (int i = 0; i < mu; ++i) mean += weights(i) * candidates[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    const VectorXd step = (mean - old_mean) / sigma;

    // C^-1/2 step = B D^-1 B^T step
    const VectorXd whitened = basis * (basis.transpose() * step).cwiseQuotient(axis);
    path_sigma = (1.0 - c_sigma) * path_sigma + std::sqrt(c_sigma * (2.0 - c_sigma) * mu_eff) * whitened;
    ++result.generations;
    const double ps_norm = path_sigma.norm();
    const double decay = std::sqrt(1.0 - std::pow(1.0 - c_sigma, 2.0 * result.generations));
    const bool h_sigma = ps_norm / decay / chi_n < 1.4 + 2.0 / (dn + 1.0);
    path_c = (1.0 - c_c) * path_c + (h_sigma ? std::sqrt(c_c * (2.0 - c_c) * mu_eff) : 0.0) * step;

    MatrixXd rank_mu = MatrixXd::Zero(n, n);
    for (int i = 0; i < mu; ++i) {
      const VectorXd y = (candidates[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] - old_mean) / sigma;
      rank_mu.noalias() += weights(i) * y * y.transpose();
    }
    const double correction = h_sigma ? 0.0 : c_c * (2.0 - c_c);
    cov = (1.0 - c_1 - c_mu) * cov + c_1 * (path_c * path_c.transpose() + correction * cov) + c_mu * rank_mu;
    cov = 0.5 * (cov + cov.transpose()).eval();

    sigma *= std::exp((c_sigma / d_sigma) * (ps_norm / chi_n - 1.0));

    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov);
    basis = eig.eigenvectors();
    axis = eig.eigenvalues().cwiseMax(1e-20).cwiseSqrt();
    result.best_history.push_back(result.best_cost);

    if (!std::isfinite(sigma) || sigma * axis.maxCoeff() < cfg.min_step) break;
  }
  if (result.best.size() == 0) {
    result.best = origin;
    result.best_cost = objective(origin);
    if (!std::isfinite(result.best_cost)) result.best_cost = std::numeric_limits<double>::infinity();
    ++result.evaluations;
  }
  return result;
}

}  // namespace ipp
