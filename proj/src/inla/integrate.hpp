#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "inla/marginal.hpp"

namespace inla {

// One theta_k contribution to a latent marginal.
struct MixtureComponent {
  double weight = 0.0;  // normalized theta weight
  double lo = 0.0;      // support of the component
  double hi = 0.0;
  std::function<double(double)> density;  // normalized, natural scale
};

// sum_k w_k p_k(x) on a common uniform grid covering the components with
// non-negligible weight; normalized by the trapezoid rule.
PosteriorMarginal integrate_marginal(const std::vector<MixtureComponent>& components, std::size_t grid_points = 401);

}  // namespace inla
