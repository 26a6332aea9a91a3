#pragma once

#include <functional>
#include <vector>

namespace inla {

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q50 = 0.0;
  double q975 = 0.0;
};

// Density tabulated on an increasing (not necessarily uniform) grid and
// normalized by the trapezoid rule. Between grid points the density is
// linear, which is what the quantile inversion assumes too.
class PosteriorMarginal {
 public:
  PosteriorMarginal() = default;

  // Throws MarginalUnavailable if the mass is zero or non-finite.
  static PosteriorMarginal from_density(std::vector<double> x, std::vector<double> density);
  // Log values are shifted by their max before exponentiation.
  static PosteriorMarginal from_log_density(std::vector<double> x, const std::vector<double>& log_density);
  // Point mass, represented by a single grid point.
  static PosteriorMarginal point_mass(double x);

  const std::vector<double>& x() const noexcept { return x_; }
  const std::vector<double>& density() const noexcept { return density_; }
  bool empty() const noexcept { return x_.empty(); }

  double mean() const;
  double sd() const;
  double quantile(double p) const;
  double cdf(double value) const;
  double density_at(double value) const;
  // E[f(X)] by trapezoid on the grid.
  double expectation(const std::function<double(double)>& f) const;
  double integral() const;

  Summary summary() const;
  // Summaries of g(X) for increasing g: mean by integrating g over the grid,
  // quantiles mapped through g.
  Summary summary_transformed(const std::function<double(double)>& g) const;

 private:
  std::vector<double> x_;
  std::vector<double> density_;
  std::vector<double> cdf_;
};

std::vector<double> linspace(double lo, double hi, std::size_t n);

// Piecewise-cubic Hermite interpolant through (x_k, y_k), with slopes from the
// quadratic through each point and its neighbours (exact for quadratics).
// Outside the knots it continues with the end quadratic when that bends down
// and linearly with the end slope otherwise.
class HermiteInterpolant {
 public:
  HermiteInterpolant() = default;
  // Needs >= 3 strictly increasing knots.
  HermiteInterpolant(std::vector<double> x, std::vector<double> y);

  double operator()(double t) const;
  double lo() const { return x_.front(); }
  double hi() const { return x_.back(); }

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> slope_;
  // end quadratics a + b (t - x0) + c (t - x0)^2
  double left_c_ = 0.0;
  double right_c_ = 0.0;
};

}  // namespace inla
