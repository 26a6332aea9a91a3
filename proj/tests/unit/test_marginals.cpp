#include <doctest.h>

#include <memory>

#include "inla/errors.hpp"
#include "inla/gaussian_approx.hpp"
#include "inla/integrate.hpp"
#include "inla/laplace.hpp"
#include "inla/marginal.hpp"
#include "inla/sla.hpp"
#include "support.hpp"

using namespace inla;

namespace {

// Quadratic log density in eta whose reported third derivative is scale * s_j:
// the mode and curvature are unaffected, only the skewness terms see it.
class ThirdDerivativeProbe final : public ObservationModel {
 public:
  ThirdDerivativeProbe(std::vector<double> s, double scale) : s_(std::move(s)), scale_(scale) {}
  std::size_t size() const override { return s_.size(); }
  double log_density(std::size_t, double eta) const override { return -0.5 * (eta - 0.3) * (eta - 0.3); }
  Derivatives derivatives(std::size_t j, double eta) const override { return {-(eta - 0.3), -1.0, scale_ * s_[j]}; }
  std::string name() const override { return "probe"; }

 private:
  std::vector<double> s_;
  double scale_;
};

LatentModel ring_model(std::size_t units, std::shared_ptr<const ObservationModel> obs = nullptr) {
  std::vector<std::vector<std::size_t>> nb(units);
  for (std::size_t i = 0; i < units; ++i) {
    nb[i] = {(i + units - 1) % units, (i + 1) % units};
  }
  Dataset d;
  d.graph = AdjacencyGraph::from_neighbors(nb);
  d.n_units = units;
  for (std::size_t i = 0; i < units; ++i) {
    d.unit.push_back(i);
    d.y.push_back(7);
    d.n.push_back(30);
  }
  auto m = LatentModel::build(ModelSpec::preset("icar-only"), d);
  return obs ? m.with_observations(obs) : m;
}

}  // namespace

TEST_CASE("posterior marginal basics") {
  const auto x = linspace(-15, 17, 1601);
  std::vector<double> lp;
  for (double v : x) lp.push_back(-0.5 * (v - 1) * (v - 1) / 4);
  const auto m = PosteriorMarginal::from_log_density(x, lp);
  CHECK(std::abs(m.integral() - 1) < 1e-6);
  CHECK(std::abs(m.mean() - 1) < 1e-6);
  CHECK(std::abs(m.sd() - 2) < 1e-3);
  CHECK(m.quantile(0.025) < m.quantile(0.5));
  CHECK(m.quantile(0.5) < m.quantile(0.975));
  CHECK(std::abs(m.quantile(0.5) - 1) < 1e-3);
  for (double p = 0.01; p < 1.0; p += 0.01) CHECK(m.quantile(p) <= m.quantile(p + 0.005));
  // Jensen: E[exp X] >= exp E[X]
  CHECK(m.summary_transformed([](double v) { return std::exp(v); }).mean >= std::exp(m.mean()));
  CHECK_THROWS_AS(PosteriorMarginal::from_density({0, 1}, {0, 0}), MarginalUnavailable);
  const auto pm = PosteriorMarginal::point_mass(0.0);
  const Summary s = pm.summary_transformed([](double v) { return std::exp(v); });
  CHECK(s.mean == 1.0);
  CHECK(s.q025 == 1.0);
  CHECK(s.q975 == 1.0);
}

TEST_CASE("hermite interpolant reproduces quadratics") {
  std::vector<double> x{-2, -1, 0, 1.5, 2};
  std::vector<double> y;
  for (double v : x) y.push_back(-0.5 * v * v + 0.25 * v);
  const HermiteInterpolant h(x, y);
  for (double t = -3; t <= 3; t += 0.1) CHECK(std::abs(h(t) - (-0.5 * t * t + 0.25 * t)) < 1e-12);
}

TEST_CASE("sla density with vanishing corrections is the standard Gaussian") {
  const SlaDensity d = sla_density(0.4, 1.5, {0.0, 0.0});
  for (double s = -5; s <= 5; s += 0.5) {
    CHECK(std::abs(d.log_density_standardized(s) - (-0.5 * s * s - 0.5 * support::kLog2Pi)) < 1e-6);
  }
  CHECK(std::abs(d.density(0.4) - 1.0 / (1.5 * std::sqrt(2 * M_PI))) < 1e-6);
  // normalized on its grid
  double sum = 0;
  const auto g = d.grid();
  for (std::size_t k = 1; k < g.size(); ++k)
    sum += 0.5 * (g[k] - g[k - 1]) * (std::exp(d.log_density_standardized(g[k])) + std::exp(d.log_density_standardized(g[k - 1])));
  CHECK(std::abs(sum - 1) < 1e-6);
}

TEST_CASE("a strongly skewed correction falls back to the Gaussian") {
  const SlaDensity d = sla_density(0.0, 1.0, {0.0, 40.0});
  CHECK(d.fallback);
  CHECK(d.gamma3 == 0.0);
}

TEST_CASE("single latent component has no correction terms") {
  Dataset d = support::path_dataset({4}, {20});
  d.graph.reset();
  const auto m = LatentModel::build(ModelSpec::from_json(R"({"terms":[{"kind":"intercept"}]})"), d);
  const auto ga = gaussian_approximation(m, Eigen::VectorXd(0));
  const SlaContext ctx(m, ga);
  const Gammas g = ctx.gammas(unit_anchor(0));
  CHECK(g.gamma1 == 0.0);
  CHECK(g.gamma3 == 0.0);
}

TEST_CASE("skewness terms match the dense formulas and are linear in the third derivatives") {
  const std::vector<double> s{0.5, -1.0, 2.0, 0.25, -0.75};
  const auto m1 = ring_model(5, std::make_shared<ThirdDerivativeProbe>(s, 1.0));
  const auto m2 = ring_model(5, std::make_shared<ThirdDerivativeProbe>(s, 2.0));
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 0.5);
  const auto g1 = gaussian_approximation(m1, theta);
  const auto g2 = gaussian_approximation(m2, theta);
  const SlaContext c1(m1, g1), c2(m2, g2);
  const Eigen::MatrixXd cov = g1.gaussian->covariance();
  for (std::size_t i = 0; i < m1.latent_dim(); ++i) {
    const Gammas a = c1.gammas(unit_anchor(i));
    const Gammas b = c2.gammas(unit_anchor(i));
    CHECK(std::abs(b.gamma1 - 2 * a.gamma1) < 1e-12);
    CHECK(std::abs(b.gamma3 - 2 * a.gamma3) < 1e-12);

    // over observations j: corr(x_i, eta_j), sd(eta_j), var(eta_j | x_i)
    const auto ii = static_cast<Eigen::Index>(i);
    double r1 = 0.0, r3 = 0.0;
    for (std::size_t j = 0; j < m1.n_obs(); ++j) {
      const Eigen::VectorXd aj = m1.incidence()[j].to_dense(m1.latent_dim());
      if (m1.incidence()[j] == unit_anchor(i)) continue;
      const double var_j = aj.dot(cov * aj);
      const double cij = (cov * aj)[ii];
      if (cov(ii, ii) <= 0.0) continue;
      const double corr = cij / std::sqrt(cov(ii, ii) * var_j);
      const double sj = std::sqrt(var_j);
      r1 += 0.5 * var_j * (1 - corr * corr) * s[j] * sj * corr;
      r3 += s[j] * std::pow(sj * corr, 3);
    }
    CHECK(std::abs(a.gamma1 - r1) < 1e-10);
    CHECK(std::abs(a.gamma3 - r3) < 1e-10);
  }
}

TEST_CASE("laplace marginal is exact for Gaussian observations") {
  const std::vector<double> centers{0.3, -0.2, 0.9, 0.1};
  const auto m = ring_model(4, std::make_shared<GaussianSurrogate>(centers, std::vector<double>{2, 1, 4, 0.5}));
  const auto ga = gaussian_approximation(m, Eigen::VectorXd::Constant(1, 0.2));
  const Eigen::VectorXd var = ga.gaussian->marginal_variances();
  for (std::size_t i = 0; i < m.latent_dim(); ++i) {
    const LaplaceDensity ld = laplace_marginal(m, ga, i);
    CHECK(ld.dropped == 0);
    const double mu = ga.mode[static_cast<Eigen::Index>(i)];
    const double v = var[static_cast<Eigen::Index>(i)];
    std::vector<double> diff;
    for (std::size_t k = 0; k < ld.x.size(); ++k) diff.push_back(ld.log_density[k] + 0.5 * (ld.x[k] - mu) * (ld.x[k] - mu) / v);
    const auto [lo, hi] = std::minmax_element(diff.begin(), diff.end());
    CHECK(*hi - *lo < 1e-8);
  }
}

TEST_CASE("exchangeable units share their marginals") {
  const auto m = ring_model(6);
  const auto ga = gaussian_approximation(m, Eigen::VectorXd::Constant(1, 1.0));
  const LaplaceDensity first = laplace_marginal(m, ga, 1);
  const SlaContext ctx(m, ga);
  const SlaDensity sfirst = ctx.latent(1);
  for (std::size_t i = 2; i < 7; ++i) {
    const LaplaceDensity ld = laplace_marginal(m, ga, i);
    for (std::size_t k = 0; k < ld.x.size(); ++k) {
      CHECK(std::abs(ld.x[k] - first.x[k]) < 1e-8);
      CHECK(std::abs(ld.log_density[k] - first.log_density[k]) < 1e-8);
    }
    const SlaDensity sd = ctx.latent(i);
    CHECK(std::abs(sd.mean - sfirst.mean) < 1e-8);
    CHECK(std::abs(sd.gamma1 - sfirst.gamma1) < 1e-8);
  }
}

TEST_CASE("mixture integration") {
  const auto gauss = [](double mu, double sd) {
    return [mu, sd](double t) { return std::exp(-0.5 * (t - mu) * (t - mu) / (sd * sd)) / (sd * std::sqrt(2 * M_PI)); };
  };
  const PosteriorMarginal one = integrate_marginal({{1.0, -5.0, 7.0, gauss(1.0, 1.0)}});
  CHECK(std::abs(one.mean() - 1.0) < 1e-6);
  CHECK(std::abs(one.sd() - 1.0) < 1e-4);
  const PosteriorMarginal two = integrate_marginal({{0.5, -8.0, 4.0, gauss(-2.0, 1.0)}, {0.5, -4.0, 8.0, gauss(2.0, 1.0)}});
  CHECK(std::abs(two.mean()) < 1e-8);
  CHECK(std::abs(two.integral() - 1.0) < 1e-6);
}
