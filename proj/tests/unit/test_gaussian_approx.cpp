#include <doctest.h>

#include <memory>

#include "inla/errors.hpp"
#include "inla/fit.hpp"
#include "inla/gaussian_approx.hpp"
#include "inla/sla.hpp"
#include "support.hpp"
#include "surrogate.hpp"

using namespace inla;

namespace {

using support::closed_form_inputs;
using support::Surrogate;
using support::surrogate_model;

double scalar_bisection(double lo, double hi, const std::function<double(double)>& g) {
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    if ((g(lo) > 0) == (g(mid) > 0)) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("intercept-only mode solves the scalar score equation") {
  for (std::int64_t y : {5, 3, 9}) {
    Dataset d = support::path_dataset({y}, {10});
    d.graph.reset();
    const auto m = LatentModel::build(ModelSpec::from_json(R"({"terms":[{"kind":"intercept"}]})"), d);
    const auto ga = gaussian_approximation(m, Eigen::VectorXd(0));
    const double root = scalar_bisection(-10, 10, [&](double mu) { return derivatives(y, 10, mu).d1 - 0.01 * mu; });
    CHECK(std::abs(ga.mode[0] - root) < 1e-6);
  }
}

TEST_CASE("one Newton step on a quadratic likelihood") {
  const Surrogate s = surrogate_model();
  const auto ga = gaussian_approximation(s.model, Eigen::VectorXd::Constant(1, 0.7));
  const auto ref = support::closed_form_posterior(closed_form_inputs(s, 0.7));
  CHECK((ga.mode - ref.mean).cwiseAbs().maxCoeff() < 1e-10);
  // the first step lands on the mode; the second only confirms it
  REQUIRE(ga.step_trace.size() >= 1);
  CHECK(ga.iterations <= 2);
  if (ga.step_trace.size() > 1) CHECK(ga.step_trace[1] < 1e-10);
  CHECK((ga.gaussian->covariance() - ref.cov).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("binomial mode agrees with a direct Newton solve in null-space coordinates") {
  const Dataset d = support::path_dataset({3, 9, 17, 4, 11}, {40, 50, 45, 30, 60});
  const auto m = LatentModel::build(ModelSpec::preset("icar-only"), d);
  const double tau = 2.0;
  const auto ga = gaussian_approximation(m, Eigen::VectorXd::Constant(1, std::log(tau)));

  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(6, 6);
  q(0, 0) = 0.01;
  q.block(1, 1, 5, 5) = tau * support::dense_graph_laplacian(*d.graph);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(1, 6);
  c.block(0, 1, 1, 5).setOnes();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(5, 6);
  for (Eigen::Index j = 0; j < 5; ++j) a(j, 0) = a(j, j + 1) = 1.0;
  const Eigen::MatrixXd b = support::complement_basis(c, 6);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(5);
  for (int it = 0; it < 100; ++it) {
    const Eigen::VectorXd eta = a * b * w;
    Eigen::VectorXd g1(5), h(5);
    for (Eigen::Index j = 0; j < 5; ++j) {
      const double p = 1.0 / (1.0 + std::exp(-eta[j]));
      g1[j] = static_cast<double>(d.y[static_cast<std::size_t>(j)]) - static_cast<double>(d.n[static_cast<std::size_t>(j)]) * p;
      h[j] = static_cast<double>(d.n[static_cast<std::size_t>(j)]) * p * (1 - p);
    }
    const Eigen::VectorXd grad = b.transpose() * (a.transpose() * g1 - q * b * w);
    const Eigen::MatrixXd hess = b.transpose() * (a.transpose() * h.asDiagonal() * a + q) * b;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    w += step;
    if (step.cwiseAbs().maxCoeff() < 1e-13) break;
  }
  CHECK((ga.mode - b * w).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(std::abs((c * ga.mode)[0]) < 1e-8);
  CHECK(ga.gaussian->marginal_variances().tail(5).minCoeff() > 0.0);
}

TEST_CASE("step-one log posterior is exact for the Gaussian surrogate") {
  const Surrogate s = surrogate_model();
  std::vector<double> diff;
  for (double theta : {-2.0, -0.5, 0.0, 0.8, 2.0, 4.5}) {
    const double engine = log_posterior_theta(s.model, Eigen::VectorXd::Constant(1, theta));
    const double exact = support::closed_form_log_evidence(closed_form_inputs(s, theta)) +
                         support::gamma_log_density(std::exp(theta), 0.001, 0.001) + theta;
    diff.push_back(engine - exact);
  }
  const auto [lo, hi] = std::minmax_element(diff.begin(), diff.end());
  CHECK(*hi - *lo < 1e-8);
}

TEST_CASE("hyperprior enters additively") {
  const Dataset d = support::path_dataset({3, 9, 17}, {40, 50, 45});
  const auto m = LatentModel::build(ModelSpec::preset("icar-only"), d);
  const auto m1 = m.with_hyperprior({1.0, 1.0});
  for (double theta : {-1.0, 0.5, 2.0}) {
    const Eigen::VectorXd t = Eigen::VectorXd::Constant(1, theta);
    const double shift = log_posterior_theta(m1, t) - log_posterior_theta(m, t);
    const double prior = (support::gamma_log_density(std::exp(theta), 1, 1) + theta) -
                         (support::gamma_log_density(std::exp(theta), 0.001, 0.001) + theta);
    CHECK(shift == doctest::Approx(prior).epsilon(1e-12));
  }
}

TEST_CASE("skewness corrections vanish for the surrogate and at eta = 0") {
  const Surrogate s = surrogate_model();
  const auto ga = gaussian_approximation(s.model, Eigen::VectorXd::Constant(1, 0.3));
  const SlaContext ctx(s.model, ga);
  for (std::size_t i = 0; i < s.model.latent_dim(); ++i) {
    const Gammas g = ctx.gammas(unit_anchor(i));
    CHECK(g.gamma1 == 0.0);
    CHECK(g.gamma3 == 0.0);
  }
  for (std::size_t j = 0; j < s.model.n_obs(); ++j) {
    const Gammas g = ctx.gammas(s.model.incidence()[j]);
    CHECK(g.gamma1 == 0.0);
    CHECK(g.gamma3 == 0.0);
  }
}

TEST_CASE("marginals equal the closed-form Gaussian posteriors") {
  const Surrogate s = surrogate_model();
  SUBCASE("conditional on theta") {
    FitOptions o;
    o.fixed_theta = Eigen::VectorXd::Constant(1, 1.2);
    const FitResult f = fit(s.model, o);
    const auto ref = support::closed_form_posterior(closed_form_inputs(s, 1.2));
    for (std::size_t i = 0; i < 5; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      CHECK(std::abs(f.latent[i].mean() - ref.mean[ii]) < 1e-6);
      CHECK(std::abs(f.latent[i].sd() - std::sqrt(ref.cov(ii, ii))) < 1e-6);
    }
  }
  SUBCASE("integrated over the exploration grid") {
    const FitResult f = fit(s.model);
    // exact mixture over the same points, with weights from the exact evidence
    std::vector<double> logw;
    for (const auto& st : f.states) {
      logw.push_back(support::closed_form_log_evidence(closed_form_inputs(s, st.theta[0])) +
                     support::gamma_log_density(std::exp(st.theta[0]), 0.001, 0.001) + st.theta[0]);
    }
    const double mx = *std::max_element(logw.begin(), logw.end());
    double total = 0.0;
    for (double& v : logw) total += (v = std::exp(v - mx));
    for (std::size_t i = 0; i < 5; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      double m1 = 0.0, m2 = 0.0;
      for (std::size_t k = 0; k < f.states.size(); ++k) {
        const auto ref = support::closed_form_posterior(closed_form_inputs(s, f.states[k].theta[0]));
        const double w = logw[k] / total;
        CHECK(std::abs(f.states[k].weight - w) < 1e-8);
        m1 += w * ref.mean[ii];
        m2 += w * (ref.cov(ii, ii) + ref.mean[ii] * ref.mean[ii]);
      }
      CHECK(std::abs(f.latent[i].mean() - m1) < 1e-6);
      CHECK(std::abs(f.latent[i].sd() - std::sqrt(m2 - m1 * m1)) < 1e-6);
    }
  }
}

TEST_CASE("gaussian approximation errors") {
  const Dataset d = support::path_dataset({3, 9, 17}, {40, 50, 45});
  const auto m = LatentModel::build(ModelSpec::preset("icar-only"), d);
  CHECK_THROWS(gaussian_approximation(m, Eigen::VectorXd::Zero(2)));
  NewtonOptions tight;
  tight.max_iterations = 1;
  CHECK_THROWS_AS(gaussian_approximation(m, Eigen::VectorXd::Zero(1), nullptr, tight), NewtonDivergence);
}
