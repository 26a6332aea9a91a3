#include "inla/fit.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <set>

#include "inla/errors.hpp"
#include "inla/integrate.hpp"

namespace inla {

const char* marginal_path_name(MarginalPath p) {
  return p == MarginalPath::Laplace ? "la" : "sla";
}

namespace {

MixtureComponent sla_component(const SlaDensity& d, double weight) {
  MixtureComponent c;
  c.weight = weight;
  c.lo = d.mean + d.sd * d.options.grid_lo;
  c.hi = d.mean + d.sd * d.options.grid_hi;
  c.density = [d](double t) { return d.density(t); };
  return c;
}

MixtureComponent laplace_component(const LaplaceDensity& d, double weight) {
  MixtureComponent c;
  c.weight = weight;
  c.lo = d.x.front();
  c.hi = d.x.back();
  c.density = [d](double t) { return d.density(t); };
  return c;
}

}  // namespace

FitResult fit(const LatentModel& model, const FitOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  FitResult res;
  res.model_name = model.spec().name;
  res.layout = model.layout();
  res.warnings = model.layout().warnings;
  const std::size_t h = model.hyper_dim();
  const std::size_t n = model.latent_dim();
  const std::size_t m = model.n_obs();

  Eigen::VectorXd warm = default_start(model);
  const LogPosterior f = [&](const Eigen::VectorXd& theta) {
    const GaussianApprox ga = gaussian_approximation(model, theta, &warm, options.newton);
    warm = ga.mode;
    return ga.log_posterior;
  };

  if (options.fixed_theta) {
    const Eigen::VectorXd& t = *options.fixed_theta;
    if (static_cast<std::size_t>(t.size()) != h) throw SpecError("fixed theta has the wrong length");
    res.mode.theta = t;
    res.mode.log_posterior = f(t);
    res.exploration.theta_star = t;
    res.exploration.log_post_star = res.mode.log_posterior;
    res.exploration.delta_z = options.delta_z;
    res.exploration.delta_pi = options.delta_pi;
    ThetaPoint p;
    p.theta = t;
    p.z = Eigen::VectorXd::Zero(t.size());
    p.log_posterior = res.mode.log_posterior;
    p.weight = 1.0;
    res.exploration.points.push_back(p);
  } else {
    Eigen::VectorXd init = options.theta_init.value_or(
        Eigen::VectorXd::Constant(static_cast<Eigen::Index>(h), std::log(10.0)));
    if (static_cast<std::size_t>(init.size()) != h) throw SpecError("initial theta has the wrong length");
    res.mode = find_mode(f, init, options.mode);
    ExploreOptions eo;
    eo.delta_z = options.delta_z;
    eo.delta_pi = options.delta_pi;
    eo.hessian_step = options.hessian_step;
    res.exploration = explore(f, res.mode.theta, res.mode.log_posterior, eo);
    if (!res.exploration.mode_dominated) {
      res.warnings.push_back("a grid point has a higher log posterior than the located mode");
    }
    if (h > 0) {
      try {
        res.hyper = hyperparameter_marginals(res.exploration, options.grid_points);
      } catch (const MarginalUnavailable& e) {
        res.warnings.push_back(std::string("hyperparameter marginals: ") + e.what());
      }
    }
  }

  std::set<std::size_t> la_set;
  if (options.path == MarginalPath::Laplace) {
    if (options.laplace_indices.empty()) {
      for (std::size_t i = 0; i < n; ++i) la_set.insert(i);
    } else {
      for (std::size_t i : options.laplace_indices) {
        if (i >= n) throw IndexOutOfRange("Laplace index " + std::to_string(i));
        la_set.insert(i);
      }
    }
  }

  const auto& points = res.exploration.points;
  std::vector<std::vector<MixtureComponent>> latent_parts(n);
  std::vector<std::vector<MixtureComponent>> eta_parts(options.linear_predictor_marginals ? m : 0);
  const Eigen::VectorXd centre = warm;
  for (const ThetaPoint& p : points) {
    Eigen::VectorXd start = centre;
    const GaussianApprox ga = gaussian_approximation(model, p.theta, &start, options.newton);
    const SlaContext ctx(model, ga);
    ThetaState st;
    st.theta = p.theta;
    st.weight = p.weight;
    st.log_posterior = ga.log_posterior;
    st.mode = ga.mode;
    st.eta = ga.eta;
    st.eta_variance = ctx.eta_variance();
    st.newton_iterations = ga.iterations;
    res.states.push_back(std::move(st));

    for (std::size_t i = 0; i < n; ++i) {
      if (la_set.count(i)) {
        const LaplaceDensity la = laplace_marginal(model, ga, i, options.laplace, &res.warnings);
        latent_parts[i].push_back(laplace_component(la, p.weight));
        continue;
      }
      const SlaDensity d = ctx.latent(i, options.sla);
      if (d.fallback) ++res.skewness_fallbacks;
      latent_parts[i].push_back(sla_component(d, p.weight));
    }
    for (std::size_t j = 0; j < eta_parts.size(); ++j) {
      const SlaDensity d = ctx.linear_predictor(j, options.sla);
      if (d.fallback) ++res.skewness_fallbacks;
      eta_parts[j].push_back(sla_component(d, p.weight));
    }
  }
  if (res.skewness_fallbacks > 0) {
    res.warnings.push_back("SkewnessOverflow: " + std::to_string(res.skewness_fallbacks) +
                           " simplified Laplace densities were bimodal on the grid and fell back to Gaussian");
  }
  res.latent.reserve(n);
  for (auto& parts : latent_parts) res.latent.push_back(integrate_marginal(parts, options.grid_points));
  res.linear_predictor.reserve(eta_parts.size());
  for (auto& parts : eta_parts) res.linear_predictor.push_back(integrate_marginal(parts, options.grid_points));

  res.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace inla
