#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "inla/gaussian_approx.hpp"
#include "inla/hyper_marginals.hpp"
#include "inla/laplace.hpp"
#include "inla/marginal.hpp"
#include "inla/model.hpp"
#include "inla/sla.hpp"
#include "inla/theta_explore.hpp"

namespace inla {

enum class MarginalPath { SimplifiedLaplace, Laplace };

const char* marginal_path_name(MarginalPath p);

struct FitOptions {
  double delta_z = 1.0;
  double delta_pi = 2.5;
  MarginalPath path = MarginalPath::SimplifiedLaplace;
  // latent indices that take the Laplace path when path == Laplace (empty: all)
  std::vector<std::size_t> laplace_indices;
  std::size_t grid_points = 401;
  NewtonOptions newton;
  ModeOptions mode;
  double hessian_step = 1e-3;
  SlaOptions sla;
  LaplaceOptions laplace;
  // Start of the mode search; default log(10) per hyperparameter.
  std::optional<Eigen::VectorXd> theta_init;
  // Condition on this theta instead of integrating over it.
  std::optional<Eigen::VectorXd> fixed_theta;
  bool linear_predictor_marginals = true;
};

// What the diagnostics need from each integration point.
struct ThetaState {
  Eigen::VectorXd theta;
  double weight = 0.0;
  double log_posterior = 0.0;
  Eigen::VectorXd mode;
  Eigen::VectorXd eta;
  Eigen::VectorXd eta_variance;
  int newton_iterations = 0;
};

struct FitResult {
  std::string model_name;
  LatentLayout layout;
  ModeResult mode;
  ThetaExploration exploration;
  std::vector<ThetaState> states;
  std::vector<PosteriorMarginal> latent;             // one per latent component
  std::vector<PosteriorMarginal> linear_predictor;   // one per observation
  std::vector<HyperMarginal> hyper;                  // one per hyperparameter
  std::size_t skewness_fallbacks = 0;
  std::vector<std::string> warnings;
  double elapsed_seconds = 0.0;  // reporting only, never written to output files
};

FitResult fit(const LatentModel& model, const FitOptions& options = {});

}  // namespace inla
