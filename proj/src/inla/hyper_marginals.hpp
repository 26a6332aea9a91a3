#pragma once

#include <vector>

#include "inla/marginal.hpp"
#include "inla/theta_explore.hpp"

namespace inla {

struct HyperMarginal {
  PosteriorMarginal log_precision;  // theta_j
  PosteriorMarginal precision;      // tau_j = exp(theta_j)
};

// Marginals of each theta_j from a separable interpolant of log pi~(theta|y)
// along the z axes: theta_j is a linear combination of the independent z_k,
// so its density is the convolution of the scaled axis densities.
// Throws MarginalUnavailable when an axis has fewer than 3 accepted points.
std::vector<HyperMarginal> hyperparameter_marginals(const ThetaExploration& ex, std::size_t grid_points = 401);

}  // namespace inla
