#include "inla/integrate.hpp"

#include <algorithm>
#include <limits>

#include "inla/errors.hpp"

namespace inla {

PosteriorMarginal integrate_marginal(const std::vector<MixtureComponent>& components, std::size_t grid_points) {
  if (components.empty()) throw MarginalUnavailable("no mixture components");
  double wmax = 0.0;
  for (const auto& c : components) wmax = std::max(wmax, c.weight);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& c : components) {
    if (c.weight < 1e-12 * wmax) continue;
    lo = std::min(lo, c.lo);
    hi = std::max(hi, c.hi);
  }
  if (!(hi > lo)) throw MarginalUnavailable("mixture support is empty");
  const std::vector<double> grid = linspace(lo, hi, grid_points);
  std::vector<double> dens(grid_points, 0.0);
  for (const auto& c : components) {
    if (c.weight < 1e-12 * wmax) continue;
    for (std::size_t k = 0; k < grid_points; ++k) dens[k] += c.weight * c.density(grid[k]);
  }
  return PosteriorMarginal::from_density(grid, std::move(dens));
}

}  // namespace inla
