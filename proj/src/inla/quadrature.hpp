#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "inla/marginal.hpp"
#include "inla/model.hpp"

namespace inla {

struct QuadratureRange {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t points = 0;
};

// Ranges are in the orthonormal null-space coordinates w of the constraints
// (x = B w). Empty latent ranges / missing theta range mean "find them":
// coarse grids are zoomed onto the region within 30 log units of the peak.
struct QuadratureSpec {
  std::vector<QuadratureRange> latent;
  std::optional<QuadratureRange> theta;
  std::size_t max_latent_points = 61;
  std::size_t max_theta_points = 81;
  std::size_t max_cells = 100000000;
};

struct QuadratureResult {
  Eigen::MatrixXd basis;  // n x d
  std::vector<QuadratureRange> latent_ranges;
  std::optional<QuadratureRange> theta_range;
  std::size_t cells = 0;

  Eigen::VectorXd latent_mean;
  Eigen::VectorXd latent_sd;
  Eigen::VectorXd eta_mean;
  Eigen::VectorXd eta_sd;
  std::vector<PosteriorMarginal> latent;  // histogram marginals

  // single hyperparameter only
  std::vector<double> theta_grid;
  std::vector<double> theta_log_marginal;  // log int pi(y|x) pi(x|theta) dx + log pi(theta), unnormalized
  PosteriorMarginal theta;
  double theta_mean = 0.0;
  double theta_sd = 0.0;
  double tau_mean = 0.0;
  double tau_sd = 0.0;

  double mean_deviance = 0.0;     // E[-2 log pi(y|x)]
  double deviance_at_mean = 0.0;  // -2 log pi(y | E[eta])
};

// Orthonormal basis of the null space of C (n x (n - k)); identity if k = 0.
Eigen::MatrixXd null_space_basis(const Eigen::MatrixXd& c, Eigen::Index n);

// Brute-force posterior by tensor-grid summation. Requires constrained latent
// dimension <= 4 and at most one hyperparameter; throws OracleTooLarge otherwise
// or when the grid would exceed max_cells.
QuadratureResult quadrature_posterior(const LatentModel& model, const QuadratureSpec& spec = {});

}  // namespace inla
