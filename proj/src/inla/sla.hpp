#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "inla/gaussian_approx.hpp"
#include "inla/model.hpp"

namespace inla {

struct SlaOptions {
  double grid_lo = -6.0;
  double grid_hi = 6.0;
  double grid_step = 0.05;
  // cubic term damped linearly to zero between these |s|
  double damp_start = 3.0;
  double damp_end = 6.0;
};

struct Gammas {
  double gamma1 = 0.0;
  double gamma3 = 0.0;
};

// Simplified Laplace density of one linear functional t = a^T x at one theta,
// in standardized coordinates s = (t - mean) / sd:
//   log p(s) = const - s^2/2 + gamma1 s + gamma3 s^3 / 6 (cubic damped in the tails)
struct SlaDensity {
  double mean = 0.0;
  double sd = 1.0;
  double gamma1 = 0.0;
  double gamma3 = 0.0;
  double log_norm = 0.0;  // log of the integral over the standardized grid
  bool fallback = false;  // bimodal on the grid; reduced to the Gaussian
  SlaOptions options;

  double log_kernel(double s) const;
  // normalized, in standardized coordinates; -inf outside the grid
  double log_density_standardized(double s) const;
  // normalized density on the natural scale
  double density(double t) const;
  std::vector<double> grid() const;
};

SlaDensity sla_density(double mean, double sd, Gammas g, const SlaOptions& options = {});

// Per-theta state shared by every anchor: the covariance of the constrained
// Gaussian approximation and its products with the incidence rows.
class SlaContext {
 public:
  SlaContext(const LatentModel& model, const GaussianApprox& ga);

  const Eigen::MatrixXd& covariance() const noexcept { return cov_; }
  const Eigen::VectorXd& eta_variance() const noexcept { return var_eta_; }
  const Eigen::VectorXd& third_derivatives() const noexcept { return d3_; }

  // gamma terms for an anchor functional; observations whose incidence row
  // equals the anchor are excluded (they carry no j != i information)
  Gammas gammas(const SparseRow& anchor) const;
  SlaDensity functional(const SparseRow& anchor, const SlaOptions& options = {}) const;
  SlaDensity latent(std::size_t i, const SlaOptions& options = {}) const;
  SlaDensity linear_predictor(std::size_t j, const SlaOptions& options = {}) const;

  // Gaussian-approximation mean and variance of a^T x.
  double mean_of(const SparseRow& anchor) const;
  double variance_of(const SparseRow& anchor) const;

 private:
  const LatentModel* model_;
  Eigen::VectorXd mode_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd cov_at_;  // Sigma A^T, n x n_obs
  Eigen::VectorXd var_eta_;
  Eigen::VectorXd d3_;
};

SparseRow unit_anchor(std::size_t i);

}  // namespace inla
