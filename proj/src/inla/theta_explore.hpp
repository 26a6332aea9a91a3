#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Core>

namespace inla {

// log pi~(theta | y) up to a constant; may throw for points where the inner
// approximation fails, which the searches treat as -infinity.
using LogPosterior = std::function<double(const Eigen::VectorXd&)>;

struct ModeOptions {
  double gradient_step = 1e-4;
  double gradient_tolerance = 1e-4;
  int max_iterations = 100;
};

struct ModeResult {
  Eigen::VectorXd theta;
  double log_posterior = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;  // max-norm at the returned point
  int evaluations = 0;
};

// BFGS ascent with central finite-difference gradients. Throws
// ModeSearchFailure (carrying the best point) on non-convergence.
ModeResult find_mode(const LogPosterior& f, const Eigen::VectorXd& init, const ModeOptions& options = {});

struct ExploreOptions {
  double delta_z = 1.0;
  double delta_pi = 2.5;
  double hessian_step = 1e-3;
  int max_axis_steps = 20;
};

struct ThetaPoint {
  Eigen::VectorXd theta;
  Eigen::VectorXd z;
  double log_posterior = 0.0;
  double area = 1.0;    // Delta_k
  double weight = 0.0;  // normalized exp(log_post) * Delta_k
};

struct ThetaExploration {
  Eigen::VectorXd theta_star;
  double log_post_star = 0.0;
  Eigen::MatrixXd hessian;  // negative Hessian at theta*
  Eigen::MatrixXd sigma;    // its inverse
  Eigen::MatrixXd eigenvectors;
  Eigen::VectorXd eigenvalues;
  double delta_z = 1.0;
  double delta_pi = 2.5;
  std::vector<ThetaPoint> points;  // sorted by z (lexicographic)
  // accepted integer offsets per z axis, increasing, always containing 0
  std::vector<std::vector<int>> axis_offsets;
  // log posterior at each accepted axis offset (same layout as axis_offsets)
  std::vector<std::vector<double>> axis_log_post;
  bool mode_dominated = true;  // no grid point beat the mode

  std::size_t dim() const { return static_cast<std::size_t>(theta_star.size()); }
  Eigen::VectorXd theta_of(const Eigen::VectorXd& z) const;
};

// Negative Hessian by central second differences.
Eigen::MatrixXd negative_hessian(const LogPosterior& f, const Eigen::VectorXd& at, double f_at, double step);

// Grid exploration in z-coordinates; throws NonConcaveMode when the negative
// Hessian is not positive definite. A zero-dimensional theta yields one point.
ThetaExploration explore(const LogPosterior& f, const Eigen::VectorXd& theta_star, double log_post_star,
                         const ExploreOptions& options = {});

}  // namespace inla
