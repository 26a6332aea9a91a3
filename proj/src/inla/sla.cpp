#include "inla/sla.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "inla/errors.hpp"

namespace inla {

SparseRow unit_anchor(std::size_t i) {
  SparseRow r;
  r.push(i, 1.0);
  return r;
}

double SlaDensity::log_kernel(double s) const {
  const double a = std::abs(s);
  double damp = 1.0;
  if (a >= options.damp_end) {
    damp = 0.0;
  } else if (a > options.damp_start) {
    damp = (options.damp_end - a) / (options.damp_end - options.damp_start);
  }
  return -0.5 * s * s + gamma1 * s + gamma3 * s * s * s / 6.0 * damp;
}

double SlaDensity::log_density_standardized(double s) const {
  // support endpoints come back from the x scale with roundoff
  if (s < options.grid_lo - 1e-9 || s > options.grid_hi + 1e-9) return -std::numeric_limits<double>::infinity();
  return log_kernel(s) - log_norm;
}

double SlaDensity::density(double t) const {
  const double s = (t - mean) / sd;
  const double l = log_density_standardized(s);
  return std::isfinite(l) ? std::exp(l) / sd : 0.0;
}

std::vector<double> SlaDensity::grid() const {
  std::vector<double> g;
  const auto n = static_cast<std::size_t>(std::llround((options.grid_hi - options.grid_lo) / options.grid_step));
  for (std::size_t k = 0; k <= n; ++k) g.push_back(options.grid_lo + options.grid_step * static_cast<double>(k));
  return g;
}

SlaDensity sla_density(double mean, double sd, Gammas g, const SlaOptions& options) {
  if (!(sd > 0.0) || !std::isfinite(sd)) throw MarginalUnavailable("non-positive standard deviation");
  SlaDensity d;
  d.mean = mean;
  d.sd = sd;
  d.gamma1 = g.gamma1;
  d.gamma3 = g.gamma3;
  d.options = options;
  const auto grid = d.grid();
  std::vector<double> lk(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) lk[k] = d.log_kernel(grid[k]);
  int maxima = 0;
  for (std::size_t k = 1; k + 1 < grid.size(); ++k) {
    if (lk[k] > lk[k - 1] && lk[k] >= lk[k + 1]) ++maxima;
  }
  if (lk[0] > lk[1]) ++maxima;
  if (lk.back() > lk[lk.size() - 2]) ++maxima;
  if (maxima > 1 || !std::isfinite(d.gamma1) || !std::isfinite(d.gamma3)) {
    d.fallback = true;
    d.gamma1 = 0.0;
    d.gamma3 = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) lk[k] = d.log_kernel(grid[k]);
  }
  double top = -std::numeric_limits<double>::infinity();
  for (double v : lk) top = std::max(top, v);
  double s = 0.0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    s += 0.5 * (std::exp(lk[k] - top) + std::exp(lk[k - 1] - top)) * (grid[k] - grid[k - 1]);
  }
  d.log_norm = top + std::log(s);
  return d;
}

SlaContext::SlaContext(const LatentModel& model, const GaussianApprox& ga)
    : model_(&model), mode_(ga.mode) {
  cov_ = ga.gaussian->covariance();
  const auto& rows = model.incidence();
  const auto n = cov_.rows();
  const auto m = static_cast<Eigen::Index>(rows.size());
  cov_at_ = Eigen::MatrixXd::Zero(n, m);
  var_eta_.resize(m);
  d3_.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const SparseRow& a = rows[static_cast<std::size_t>(j)];
    for (std::size_t u = 0; u < a.size(); ++u) {
      cov_at_.col(j) += a.vals[u] * cov_.col(static_cast<Eigen::Index>(a.cols[u]));
    }
    double v = 0.0;
    for (std::size_t u = 0; u < a.size(); ++u) v += a.vals[u] * cov_at_(static_cast<Eigen::Index>(a.cols[u]), j);
    var_eta_[j] = std::max(v, 0.0);
    d3_[j] = model.observations().derivatives(static_cast<std::size_t>(j), ga.eta[j]).d3;
  }
}

double SlaContext::mean_of(const SparseRow& anchor) const { return anchor.dot(mode_); }

double SlaContext::variance_of(const SparseRow& anchor) const {
  double v = 0.0;
  for (std::size_t u = 0; u < anchor.size(); ++u) {
    for (std::size_t w = 0; w < anchor.size(); ++w) {
      v += anchor.vals[u] * anchor.vals[w] *
           cov_(static_cast<Eigen::Index>(anchor.cols[u]), static_cast<Eigen::Index>(anchor.cols[w]));
    }
  }
  return std::max(v, 0.0);
}

Gammas SlaContext::gammas(const SparseRow& anchor) const {
  const double var_t = variance_of(anchor);
  Gammas g;
  if (!(var_t > 0.0)) return g;
  const double sd_t = std::sqrt(var_t);
  const auto& rows = model_->incidence();
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (rows[j] == anchor) continue;
    const auto jj = static_cast<Eigen::Index>(j);
    const double var_j = var_eta_[jj];
    if (!(var_j > 0.0)) continue;
    const double sd_j = std::sqrt(var_j);
    double cov = 0.0;
    for (std::size_t u = 0; u < anchor.size(); ++u) {
      cov += anchor.vals[u] * cov_at_(static_cast<Eigen::Index>(anchor.cols[u]), jj);
    }
    const double a = std::clamp(cov / (sd_t * sd_j), -1.0, 1.0);
    const double cond_var = var_j * (1.0 - a * a);
    const double d3 = d3_[jj];
    g.gamma1 += 0.5 * cond_var * d3 * sd_j * a;
    const double sa = sd_j * a;
    g.gamma3 += d3 * sa * sa * sa;
  }
  return g;
}

SlaDensity SlaContext::functional(const SparseRow& anchor, const SlaOptions& options) const {
  const double var = variance_of(anchor);
  if (!(var > 0.0)) throw MarginalUnavailable("functional has zero variance under the approximation");
  return sla_density(mean_of(anchor), std::sqrt(var), gammas(anchor), options);
}

SlaDensity SlaContext::latent(std::size_t i, const SlaOptions& options) const {
  if (i >= static_cast<std::size_t>(cov_.rows())) throw IndexOutOfRange("latent index " + std::to_string(i));
  return functional(unit_anchor(i), options);
}

SlaDensity SlaContext::linear_predictor(std::size_t j, const SlaOptions& options) const {
  if (j >= model_->n_obs()) throw IndexOutOfRange("observation index " + std::to_string(j));
  return functional(model_->incidence()[j], options);
}

}  // namespace inla
