#include "inla/hyper_marginals.hpp"

#include <algorithm>
#include <cmath>

#include "inla/errors.hpp"

namespace inla {

namespace {

struct Tabulated {
  std::vector<double> x;
  std::vector<double> p;  // unnormalized is fine
};

double interp(const Tabulated& t, double v) {
  if (v < t.x.front() || v > t.x.back()) return 0.0;
  auto it = std::upper_bound(t.x.begin(), t.x.end(), v);
  if (it == t.x.end()) return t.p.back();
  const std::size_t k = static_cast<std::size_t>(it - t.x.begin()) - 1;
  const double w = (v - t.x[k]) / (t.x[k + 1] - t.x[k]);
  return (1.0 - w) * t.p[k] + w * t.p[k + 1];
}

// Axis density exp(g(z)) on a grid covering the accepted points plus tails.
Tabulated axis_density(const std::vector<int>& offsets, const std::vector<double>& log_post, double delta_z) {
  if (offsets.size() < 3) {
    throw MarginalUnavailable("a z axis has only " + std::to_string(offsets.size()) +
                              " accepted points; at least 3 are needed for the interpolant");
  }
  std::vector<double> z;
  for (int o : offsets) z.push_back(delta_z * o);
  const HermiteInterpolant g(z, log_post);
  const double lo = z.front() - 6.0;
  const double hi = z.back() + 6.0;
  Tabulated t;
  t.x = linspace(lo, hi, 601);
  double top = -1e300;
  std::vector<double> lg(t.x.size());
  for (std::size_t k = 0; k < t.x.size(); ++k) {
    lg[k] = g(t.x[k]);
    top = std::max(top, lg[k]);
  }
  t.p.resize(t.x.size());
  for (std::size_t k = 0; k < t.x.size(); ++k) {
    const double v = lg[k] - top;
    t.p[k] = v < -30.0 ? 0.0 : std::exp(v);
  }
  return t;
}

Tabulated scaled(const Tabulated& a, double c, double shift) {
  Tabulated t;
  const std::size_t n = a.x.size();
  t.x.resize(n);
  t.p.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = c > 0.0 ? k : n - 1 - k;
    t.x[k] = shift + c * a.x[src];
    t.p[k] = a.p[src] / std::abs(c);
  }
  return t;
}

// Support trimmed to where the density is non-negligible.
Tabulated trimmed(const Tabulated& a) {
  const double top = *std::max_element(a.p.begin(), a.p.end());
  std::size_t lo = 0;
  std::size_t hi = a.x.size() - 1;
  while (lo + 1 < hi && a.p[lo + 1] < 1e-14 * top) ++lo;
  while (hi > lo + 1 && a.p[hi - 1] < 1e-14 * top) --hi;
  Tabulated t;
  t.x.assign(a.x.begin() + static_cast<long>(lo), a.x.begin() + static_cast<long>(hi) + 1);
  t.p.assign(a.p.begin() + static_cast<long>(lo), a.p.begin() + static_cast<long>(hi) + 1);
  return t;
}

Tabulated convolve(const Tabulated& a, const Tabulated& b, std::size_t points) {
  Tabulated t;
  t.x = linspace(a.x.front() + b.x.front(), a.x.back() + b.x.back(), points);
  t.p.resize(points);
  for (std::size_t k = 0; k < points; ++k) {
    double s = 0.0;
    for (std::size_t u = 1; u < a.x.size(); ++u) {
      const double f0 = a.p[u - 1] * interp(b, t.x[k] - a.x[u - 1]);
      const double f1 = a.p[u] * interp(b, t.x[k] - a.x[u]);
      s += 0.5 * (f0 + f1) * (a.x[u] - a.x[u - 1]);
    }
    t.p[k] = s;
  }
  return t;
}

}  // namespace

std::vector<HyperMarginal> hyperparameter_marginals(const ThetaExploration& ex, std::size_t grid_points) {
  const std::size_t d = ex.dim();
  std::vector<HyperMarginal> out;
  if (d == 0) return out;
  std::vector<Tabulated> axes;
  for (std::size_t k = 0; k < d; ++k) {
    axes.push_back(trimmed(axis_density(ex.axis_offsets[k], ex.axis_log_post[k], ex.delta_z)));
  }
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> coef(d);
    double big = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      coef[k] = ex.eigenvectors(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) *
                std::sqrt(ex.eigenvalues[static_cast<Eigen::Index>(k)]);
      big = std::max(big, std::abs(coef[k]));
    }
    Tabulated acc;
    bool first = true;
    for (std::size_t k = 0; k < d; ++k) {
      if (std::abs(coef[k]) <= 1e-10 * big) continue;
      const Tabulated s = scaled(axes[k], coef[k], first ? ex.theta_star[static_cast<Eigen::Index>(j)] : 0.0);
      acc = first ? s : trimmed(convolve(acc, s, grid_points));
      first = false;
    }
    // resample onto a uniform grid
    std::vector<double> grid = linspace(acc.x.front(), acc.x.back(), grid_points);
    std::vector<double> dens(grid_points);
    for (std::size_t k = 0; k < grid_points; ++k) dens[k] = interp(acc, grid[k]);
    HyperMarginal hm;
    hm.log_precision = PosteriorMarginal::from_density(grid, dens);
    std::vector<double> tau(grid_points);
    std::vector<double> tdens(grid_points);
    for (std::size_t k = 0; k < grid_points; ++k) {
      tau[k] = std::exp(grid[k]);
      tdens[k] = dens[k] / tau[k];
    }
    hm.precision = PosteriorMarginal::from_density(tau, tdens);
    out.push_back(std::move(hm));
  }
  return out;
}

}  // namespace inla
