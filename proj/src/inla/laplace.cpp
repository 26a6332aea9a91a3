#include "inla/laplace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "inla/errors.hpp"
#include "inla/marginal.hpp"

namespace inla {

double LaplaceDensity::density(double t) const {
  if (x.size() < 2 || t < x.front() || t > x.back()) return 0.0;
  auto it = std::upper_bound(x.begin(), x.end(), t);
  if (it == x.end()) return std::exp(log_density.back());
  const std::size_t k = static_cast<std::size_t>(it - x.begin()) - 1;
  const double w = (t - x[k]) / (x[k + 1] - x[k]);
  return std::exp((1.0 - w) * log_density[k] + w * log_density[k + 1]);
}

LaplaceDensity laplace_marginal(const LatentModel& model, const GaussianApprox& ga, std::size_t i,
                                const LaplaceOptions& options, std::vector<std::string>* warnings,
                                const std::vector<double>* grid) {
  const std::size_t n = model.latent_dim();
  if (i >= n) throw IndexOutOfRange("latent index " + std::to_string(i));
  std::vector<double> values;
  if (grid) {
    values = *grid;
  } else {
    const double mu = ga.mode[static_cast<Eigen::Index>(i)];
    const double sd = std::sqrt(ga.gaussian->covariance_column(i)[static_cast<Eigen::Index>(i)]);
    values = linspace(mu - options.half_width_sd * sd, mu + options.half_width_sd * sd, options.points);
  }
  ExtraConstraint fix;
  fix.row = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  fix.row[static_cast<Eigen::Index>(i)] = 1.0;

  LaplaceDensity out;
  out.index = i;
  std::vector<double> logs;
  for (double v : values) {
    fix.value = v;
    try {
      const GaussianApprox cond = gaussian_approximation(model, ga.theta, &ga.mode, options.newton, {fix});
      out.x.push_back(v);
      logs.push_back(cond.log_posterior);
    } catch (const NewtonDivergence& e) {
      ++out.dropped;
      if (warnings) {
        warnings->push_back("Laplace marginal of x" + std::to_string(i) + ": dropped grid point " +
                            std::to_string(v) + " (" + e.what() + ")");
      }
    }
  }
  if (out.x.size() < options.min_points) {
    throw MarginalUnavailable("Laplace marginal of x" + std::to_string(i) + " kept only " +
                              std::to_string(out.x.size()) + " grid points");
  }
  const double top = *std::max_element(logs.begin(), logs.end());
  double mass = 0.0;
  for (std::size_t k = 1; k < out.x.size(); ++k) {
    mass += 0.5 * (std::exp(logs[k] - top) + std::exp(logs[k - 1] - top)) * (out.x[k] - out.x[k - 1]);
  }
  const double log_mass = top + std::log(mass);
  out.log_density.resize(logs.size());
  for (std::size_t k = 0; k < logs.size(); ++k) out.log_density[k] = logs[k] - log_mass;
  return out;
}

}  // namespace inla
