#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "inla/gaussian_approx.hpp"
#include "inla/model.hpp"

namespace inla {

struct LaplaceOptions {
  double half_width_sd = 4.0;
  std::size_t points = 21;
  std::size_t min_points = 5;
  NewtonOptions newton;
};

// Full Laplace marginal of x_i at one theta, tabulated on a grid; the log
// density is normalized by the trapezoid rule over the surviving points.
struct LaplaceDensity {
  std::size_t index = 0;
  std::vector<double> x;
  std::vector<double> log_density;
  std::size_t dropped = 0;

  // linear interpolation of the log density; 0 outside the grid
  double density(double t) const;
};

// For each grid value v, maximizes over x_{-i} with x_i = v and evaluates
// pi(x, theta, y) / pi~_G(x_{-i} | x_i, theta, y) at that conditional mode.
// Grid defaults to mean +- 4 sd of the Gaussian approximation.
LaplaceDensity laplace_marginal(const LatentModel& model, const GaussianApprox& ga, std::size_t i,
                                const LaplaceOptions& options = {}, std::vector<std::string>* warnings = nullptr,
                                const std::vector<double>* grid = nullptr);

}  // namespace inla
