#include "inla/gaussian_approx.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "inla/errors.hpp"

namespace inla {

namespace {

double objective(const LatentModel& model, const Eigen::MatrixXd& q, const Eigen::VectorXd& x) {
  return model.log_likelihood_eta(model.linear_predictor(x)) - 0.5 * x.dot(q * x);
}

// Q + A^T W A + kappa C^T C, and the Newton right-hand side A^T (d1 + W eta).
void newton_system(const LatentModel& model, const Eigen::MatrixXd& q, const Eigen::MatrixXd& c,
                   double kappa, const Eigen::VectorXd& x, Eigen::MatrixXd& p, Eigen::VectorXd& b) {
  const auto& rows = model.incidence();
  const auto& obs = model.observations();
  p = q;
  if (c.rows() > 0) p.noalias() += kappa * c.transpose() * c;
  b = Eigen::VectorXd::Zero(x.size());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const SparseRow& a = rows[j];
    const double eta = a.dot(x);
    const Derivatives d = obs.derivatives(j, eta);
    const double w = -d.d2;
    const double r = d.d1 + w * eta;
    for (std::size_t u = 0; u < a.size(); ++u) {
      const auto cu = static_cast<Eigen::Index>(a.cols[u]);
      b[cu] += r * a.vals[u];
      for (std::size_t v = 0; v < a.size(); ++v) {
        p(cu, static_cast<Eigen::Index>(a.cols[v])) += w * a.vals[u] * a.vals[v];
      }
    }
  }
}

}  // namespace

Eigen::VectorXd default_start(const LatentModel& model) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.latent_dim()));
  const LatentBlock* icpt = model.layout().find(BlockKind::Intercept);
  if (!icpt) return x;
  double start = 0.0;
  if (auto* binom = dynamic_cast<const BinomialLogit*>(&model.observations())) {
    double ys = 0.0;
    double ns = 0.0;
    for (std::size_t j = 0; j < binom->size(); ++j) {
      ys += static_cast<double>(binom->successes()[j]);
      ns += static_cast<double>(binom->trials()[j]);
    }
    const double rate = std::clamp((ys + 0.5) / (ns + 1.0), 1e-6, 1.0 - 1e-6);
    start = logit(rate);
  } else if (auto* gs = dynamic_cast<const GaussianSurrogate*>(&model.observations())) {
    double s = 0.0;
    for (double c : gs->centers()) s += c;
    start = gs->centers().empty() ? 0.0 : s / static_cast<double>(gs->centers().size());
  }
  x[static_cast<Eigen::Index>(icpt->offset)] = start;
  return x;
}

GaussianApprox gaussian_approximation(const LatentModel& model, const Eigen::VectorXd& theta,
                                      const Eigen::VectorXd* warm_start, const NewtonOptions& options,
                                      const std::vector<ExtraConstraint>& extra) {
  const auto n = static_cast<Eigen::Index>(model.latent_dim());
  const Eigen::MatrixXd& base_c = model.constraint_matrix();
  Eigen::MatrixXd c(base_c.rows() + static_cast<Eigen::Index>(extra.size()), n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(c.rows());
  if (base_c.rows() > 0) c.topRows(base_c.rows()) = base_c;
  for (std::size_t k = 0; k < extra.size(); ++k) {
    if (extra[k].row.size() != n) throw DimensionMismatch("extra constraint row");
    const auto r = base_c.rows() + static_cast<Eigen::Index>(k);
    c.row(r) = extra[k].row.transpose();
    e[r] = extra[k].value;
  }

  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  model.add_prior_precision(q, theta);
  const double kappa = std::max(1.0, q.diagonal().mean());

  Eigen::VectorXd x = warm_start ? *warm_start : default_start(model);
  if (x.size() != n) throw DimensionMismatch("Newton warm start");
  if (c.rows() > 0) {
    // start on the constraint set
    const Eigen::MatrixXd cct = c * c.transpose();
    x -= c.transpose() * cct.llt().solve(c * x - e);
  }

  GaussianApprox ga;
  ga.theta = theta;
  Eigen::MatrixXd p;
  Eigen::VectorXd b;
  bool converged = false;
  for (int it = 0; it < options.max_iterations; ++it) {
    newton_system(model, q, c, kappa, x, p, b);
    const ConstrainedGaussian g(cholesky(p), c);
    const Eigen::VectorXd step = g.solve(b, e) - x;
    const double f0 = objective(model, q, x);
    double s = 1.0;
    while (s > 1e-4) {
      const double f1 = objective(model, q, x + s * step);
      if (std::isfinite(f1) && f1 >= f0 - 1e-10 * (1.0 + std::abs(f0))) break;
      s *= 0.5;
    }
    x += s * step;
    const double size = (s * step).cwiseAbs().maxCoeff();
    ga.step_trace.push_back(size);
    ga.iterations = it + 1;
    if (!std::isfinite(size)) break;
    if (size < options.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NewtonDivergence("no convergence after " + std::to_string(ga.iterations) + " iterations",
                           ga.step_trace);
  }

  newton_system(model, q, c, kappa, x, p, b);
  auto g = std::make_shared<ConstrainedGaussian>(cholesky(p), c);
  const double m = static_cast<double>(g->constrained_dim());
  ga.mode = x;
  ga.eta = model.linear_predictor(x);
  ga.log_likelihood = model.log_likelihood_eta(ga.eta);
  ga.log_prior_latent = model.log_prior_latent(x, theta);
  ga.log_prior_theta = model.log_prior_theta(theta);
  ga.log_gaussian_at_mode = 0.5 * g->log_det() - 0.5 * m * std::log(2.0 * std::numbers::pi);
  ga.log_posterior =
      ga.log_likelihood + ga.log_prior_latent + ga.log_prior_theta - ga.log_gaussian_at_mode;
  ga.gaussian = std::move(g);
  return ga;
}

double log_posterior_theta(const LatentModel& model, const Eigen::VectorXd& theta,
                           const Eigen::VectorXd* warm_start, const NewtonOptions& options) {
  return gaussian_approximation(model, theta, warm_start, options).log_posterior;
}

}  // namespace inla
