#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "inla/model.hpp"
#include "inla/sparse_gmrf.hpp"

namespace inla {

struct NewtonOptions {
  double tolerance = 1e-6;  // max-norm of the step
  int max_iterations = 50;
};

// Gaussian approximation of pi(x | theta, y) at its mode.
struct GaussianApprox {
  Eigen::VectorXd theta;
  Eigen::VectorXd mode;  // x*(theta), also the mean
  Eigen::VectorXd eta;   // A x*
  // Precision at the mode, with the constraints (and any extra fixing rows).
  std::shared_ptr<const ConstrainedGaussian> gaussian;
  int iterations = 0;
  std::vector<double> step_trace;

  double log_likelihood = 0.0;
  double log_prior_latent = 0.0;
  double log_prior_theta = 0.0;
  // 1/2 log|P_c| - (m/2) log 2 pi, the log density of the approximation at its mode
  double log_gaussian_at_mode = 0.0;
  // log pi~(theta | y) up to a constant
  double log_posterior = 0.0;

  std::size_t dim() const { return static_cast<std::size_t>(mode.size()); }
};

// Extra linear equalities a^T x = value imposed on top of the model's own
// constraints (used by the Laplace path to pin one coordinate).
struct ExtraConstraint {
  Eigen::VectorXd row;
  double value = 0.0;
};

GaussianApprox gaussian_approximation(const LatentModel& model, const Eigen::VectorXd& theta,
                                      const Eigen::VectorXd* warm_start = nullptr,
                                      const NewtonOptions& options = {},
                                      const std::vector<ExtraConstraint>& extra = {});

double log_posterior_theta(const LatentModel& model, const Eigen::VectorXd& theta,
                           const Eigen::VectorXd* warm_start = nullptr,
                           const NewtonOptions& options = {});

// Default Newton start: zero with the intercept at the logit of the pooled rate.
Eigen::VectorXd default_start(const LatentModel& model);

}  // namespace inla
