#include "inla/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "inla/errors.hpp"

namespace inla {

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double h = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t k = 0; k < n; ++k) out[k] = lo + h * static_cast<double>(k);
  out[n - 1] = hi;
  return out;
}

PosteriorMarginal PosteriorMarginal::from_density(std::vector<double> x, std::vector<double> density) {
  if (x.size() != density.size() || x.empty()) throw DimensionMismatch("marginal grid");
  for (std::size_t k = 1; k < x.size(); ++k) {
    if (!(x[k] > x[k - 1])) throw MarginalUnavailable("grid not strictly increasing");
  }
  PosteriorMarginal m;
  if (x.size() == 1) {
    m.x_ = std::move(x);
    m.density_ = {1.0};
    m.cdf_ = {1.0};
    return m;
  }
  for (double& d : density) {
    if (!std::isfinite(d)) throw MarginalUnavailable("non-finite density value");
    d = std::max(d, 0.0);
  }
  std::vector<double> cdf(x.size(), 0.0);
  for (std::size_t k = 1; k < x.size(); ++k) {
    cdf[k] = cdf[k - 1] + 0.5 * (density[k] + density[k - 1]) * (x[k] - x[k - 1]);
  }
  const double mass = cdf.back();
  if (!(mass > 0.0) || !std::isfinite(mass)) throw MarginalUnavailable("density has no mass");
  for (std::size_t k = 0; k < x.size(); ++k) {
    density[k] /= mass;
    cdf[k] /= mass;
  }
  cdf.back() = 1.0;
  m.x_ = std::move(x);
  m.density_ = std::move(density);
  m.cdf_ = std::move(cdf);
  return m;
}

PosteriorMarginal PosteriorMarginal::from_log_density(std::vector<double> x,
                                                      const std::vector<double>& log_density) {
  if (x.size() != log_density.size()) throw DimensionMismatch("marginal grid");
  double top = -std::numeric_limits<double>::infinity();
  for (double v : log_density) {
    if (std::isfinite(v)) top = std::max(top, v);
  }
  if (!std::isfinite(top)) throw MarginalUnavailable("log density has no finite value");
  std::vector<double> d(log_density.size());
  for (std::size_t k = 0; k < d.size(); ++k) {
    d[k] = std::isfinite(log_density[k]) ? std::exp(log_density[k] - top) : 0.0;
  }
  return from_density(std::move(x), std::move(d));
}

PosteriorMarginal PosteriorMarginal::point_mass(double x) {
  return from_density({x}, {1.0});
}

double PosteriorMarginal::integral() const {
  if (x_.size() == 1) return 1.0;
  double s = 0.0;
  for (std::size_t k = 1; k < x_.size(); ++k) {
    s += 0.5 * (density_[k] + density_[k - 1]) * (x_[k] - x_[k - 1]);
  }
  return s;
}

double PosteriorMarginal::expectation(const std::function<double(double)>& f) const {
  if (x_.empty()) throw MarginalUnavailable("empty marginal");
  if (x_.size() == 1) return f(x_[0]);
  double s = 0.0;
  for (std::size_t k = 1; k < x_.size(); ++k) {
    s += 0.5 * (density_[k] * f(x_[k]) + density_[k - 1] * f(x_[k - 1])) * (x_[k] - x_[k - 1]);
  }
  return s;
}

double PosteriorMarginal::mean() const {
  return expectation([](double v) { return v; });
}

double PosteriorMarginal::sd() const {
  const double m = mean();
  const double v = expectation([m](double t) { return (t - m) * (t - m); });
  return std::sqrt(std::max(v, 0.0));
}

double PosteriorMarginal::cdf(double value) const {
  if (x_.empty()) throw MarginalUnavailable("empty marginal");
  if (value <= x_.front()) return x_.size() == 1 && value == x_.front() ? 1.0 : 0.0;
  if (value >= x_.back()) return 1.0;
  auto it = std::upper_bound(x_.begin(), x_.end(), value);
  const std::size_t k = static_cast<std::size_t>(it - x_.begin()) - 1;
  const double h = x_[k + 1] - x_[k];
  const double t = value - x_[k];
  const double slope = (density_[k + 1] - density_[k]) / h;
  return cdf_[k] + density_[k] * t + 0.5 * slope * t * t;
}

double PosteriorMarginal::quantile(double p) const {
  if (x_.empty()) throw MarginalUnavailable("empty marginal");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile level outside [0, 1]");
  if (x_.size() == 1) return x_[0];
  auto it = std::lower_bound(cdf_.begin(), cdf_.end(), p);
  if (it == cdf_.begin()) return x_.front();
  if (it == cdf_.end()) return x_.back();
  const std::size_t k = static_cast<std::size_t>(it - cdf_.begin()) - 1;
  // invert cdf_[k] + d0 t + s t^2 / 2 = p on [0, h] (density linear in the cell)
  const double h = x_[k + 1] - x_[k];
  const double d0 = density_[k];
  const double s = (density_[k + 1] - density_[k]) / h;
  const double r = p - cdf_[k];
  double t;
  if (std::abs(s) * h < 1e-12 * std::max(d0, 1e-300)) {
    t = d0 > 0.0 ? r / d0 : 0.5 * h;
  } else {
    const double disc = std::max(d0 * d0 + 2.0 * s * r, 0.0);
    t = 2.0 * r / (d0 + std::sqrt(disc));
  }
  return x_[k] + std::clamp(t, 0.0, h);
}

double PosteriorMarginal::density_at(double value) const {
  if (x_.size() < 2 || value < x_.front() || value > x_.back()) return 0.0;
  auto it = std::upper_bound(x_.begin(), x_.end(), value);
  if (it == x_.end()) return density_.back();
  const std::size_t k = static_cast<std::size_t>(it - x_.begin()) - 1;
  const double w = (value - x_[k]) / (x_[k + 1] - x_[k]);
  return (1.0 - w) * density_[k] + w * density_[k + 1];
}

Summary PosteriorMarginal::summary() const {
  Summary s;
  s.mean = mean();
  s.sd = sd();
  s.q025 = quantile(0.025);
  s.q50 = quantile(0.5);
  s.q975 = quantile(0.975);
  return s;
}

Summary PosteriorMarginal::summary_transformed(const std::function<double(double)>& g) const {
  Summary s;
  s.mean = expectation(g);
  const double m = s.mean;
  s.sd = std::sqrt(std::max(0.0, expectation([&](double t) {
    const double v = g(t) - m;
    return v * v;
  })));
  s.q025 = g(quantile(0.025));
  s.q50 = g(quantile(0.5));
  s.q975 = g(quantile(0.975));
  return s;
}

HermiteInterpolant::HermiteInterpolant(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n != y_.size()) throw DimensionMismatch("interpolant knots");
  if (n < 3) throw MarginalUnavailable("interpolant needs at least 3 points");
  for (std::size_t k = 1; k < n; ++k) {
    if (!(x_[k] > x_[k - 1])) throw MarginalUnavailable("interpolant knots not increasing");
  }
  // slope of the parabola through three points, evaluated at the middle one
  auto parabola = [&](std::size_t a, std::size_t b, std::size_t c, std::size_t at, double& curv) {
    const double h1 = x_[b] - x_[a];
    const double h2 = x_[c] - x_[b];
    const double s1 = (y_[b] - y_[a]) / h1;
    const double s2 = (y_[c] - y_[b]) / h2;
    curv = (s2 - s1) / (h1 + h2);  // coefficient of t^2
    // derivative at x_at of the interpolating quadratic
    const double mid_slope = (s1 * h2 + s2 * h1) / (h1 + h2);
    return mid_slope + 2.0 * curv * (x_[at] - x_[b]);
  };
  slope_.resize(n);
  double curv = 0.0;
  for (std::size_t k = 1; k + 1 < n; ++k) slope_[k] = parabola(k - 1, k, k + 1, k, curv);
  slope_[0] = parabola(0, 1, 2, 0, left_c_);
  slope_[n - 1] = parabola(n - 3, n - 2, n - 1, n - 1, right_c_);
}

double HermiteInterpolant::operator()(double t) const {
  const std::size_t n = x_.size();
  if (t <= x_.front()) {
    const double d = t - x_.front();
    return y_.front() + slope_.front() * d + (left_c_ < 0.0 ? left_c_ * d * d : 0.0);
  }
  if (t >= x_.back()) {
    const double d = t - x_.back();
    return y_.back() + slope_.back() * d + (right_c_ < 0.0 ? right_c_ * d * d : 0.0);
  }
  auto it = std::upper_bound(x_.begin(), x_.end(), t);
  const std::size_t k = std::min(static_cast<std::size_t>(it - x_.begin()) - 1, n - 2);
  const double h = x_[k + 1] - x_[k];
  const double u = (t - x_[k]) / h;
  const double u2 = u * u;
  const double u3 = u2 * u;
  const double h00 = 2 * u3 - 3 * u2 + 1;
  const double h10 = u3 - 2 * u2 + u;
  const double h01 = -2 * u3 + 3 * u2;
  const double h11 = u3 - u2;
  return h00 * y_[k] + h10 * h * slope_[k] + h01 * y_[k + 1] + h11 * h * slope_[k + 1];
}

}  // namespace inla
