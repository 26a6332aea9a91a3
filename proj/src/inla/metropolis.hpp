#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "inla/diagnostics.hpp"
#include "inla/model.hpp"

namespace inla {

struct McmcSpec {
  std::uint64_t seed = 0;
  std::size_t iterations = 200000;  // sweeps per chain, burn-in included
  std::size_t burn_in = 20000;
  std::size_t chains = 2;
  std::size_t tuning_sweeps = 4000;  // before burn-in, discarded
  std::size_t batches = 50;          // per chain, for batch-means standard errors
  double target_acceptance = 0.44;
  double rhat_gate = 1.05;
  bool force = false;  // report summaries even when the chains disagree
};

// Componentwise random-walk Metropolis in per-block null-space coordinates of
// the constraints plus log-precisions. Summaries are accumulated online.
struct McmcResult {
  std::uint64_t seed = 0;
  std::size_t kept_per_chain = 0;

  Eigen::VectorXd latent_mean, latent_sd, latent_mcse;
  Eigen::VectorXd eta_mean, eta_sd, eta_mcse;
  Eigen::VectorXd theta_mean, theta_sd, theta_mcse;

  // split R-hat per latent, eta and theta component (in that order)
  std::vector<double> split_rhat;
  double max_rhat = 0.0;
  bool converged = false;
  bool gated = false;  // not converged and not forced: summaries must not be reported

  std::vector<double> acceptance;  // per coordinate, pooled over chains
  std::vector<double> step_sizes;  // after tuning, chain 0

  DicResult dic;
};

McmcResult metropolis(const LatentModel& model, const McmcSpec& spec);

}  // namespace inla
