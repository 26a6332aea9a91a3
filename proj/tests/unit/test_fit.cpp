#include <doctest.h>

#include <numeric>

#include "inla/diagnostics.hpp"
#include "inla/fit.hpp"
#include "inla/simulate.hpp"
#include "support.hpp"

using namespace inla;

TEST_CASE("fit on a 30-unit lattice is fast, normalized and deterministic") {
  const SimulatedData sim = simulate_fixture(lattice_options(30, 5));
  const auto m = LatentModel::build(ModelSpec::preset("icar-only"), sim.data);
  const FitResult a = fit(m);
  CHECK(a.elapsed_seconds < 5.0);
  for (const auto& pm : a.latent) {
    CHECK(std::abs(pm.integral() - 1.0) < 1e-6);
    CHECK(pm.quantile(0.025) <= pm.quantile(0.5));
    CHECK(pm.quantile(0.5) <= pm.quantile(0.975));
  }
  CHECK(a.linear_predictor.size() == sim.data.size());
  double wsum = 0.0;
  for (const auto& s : a.states) wsum += s.weight;
  CHECK(std::abs(wsum - 1.0) < 1e-12);
  for (const auto& p : a.exploration.points) CHECK(a.exploration.log_post_star - p.log_posterior < 2.5);

  const FitResult b = fit(m);
  for (std::size_t i = 0; i < a.latent.size(); ++i) {
    CHECK(a.latent[i].x() == b.latent[i].x());
    CHECK(a.latent[i].density() == b.latent[i].density());
  }
}

TEST_CASE("a single integration point reproduces the conditional fit") {
  const Dataset d = support::path_dataset({3, 9, 17}, {40, 50, 45});
  const auto m = LatentModel::build(ModelSpec::preset("icar-only"), d);
  FitOptions o;
  o.fixed_theta = Eigen::VectorXd::Constant(1, 1.0);
  const FitResult f = fit(m, o);
  REQUIRE(f.states.size() == 1);
  CHECK(f.states[0].weight == 1.0);
}

TEST_CASE("relabelling units permutes the marginals") {
  const SimulatedData sim = simulate_fixture(lattice_options(12, 3));
  std::vector<std::size_t> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::swap(perm[2], perm[7]);
  Dataset p = sim.data;
  p.graph = sim.graph.permuted(perm);
  for (std::size_t j = 0; j < p.size(); ++j) p.unit[j] = perm[sim.data.unit[j]];
  const auto ma = LatentModel::build(ModelSpec::preset("icar-only"), sim.data);
  const auto mb = LatentModel::build(ModelSpec::preset("icar-only"), p);
  const auto discrepancy = [&](const FitResult& a, const FitResult& b) {
    double worst = std::abs(a.latent[0].mean() - b.latent[0].mean());
    for (std::size_t u = 0; u < 12; ++u) {
      const auto& x = a.latent[1 + u];
      const auto& y = b.latent[1 + perm[u]];
      worst = std::max({worst, std::abs(x.mean() - y.mean()), std::abs(x.sd() - y.sd())});
    }
    return worst;
  };
  // at a fixed theta the latent step is permutation invariant to roundoff
  FitOptions fixed;
  fixed.fixed_theta = Eigen::VectorXd::Constant(1, 1.2);
  CHECK(discrepancy(fit(ma, fixed), fit(mb, fixed)) < 1e-10);
  // the full pipeline goes through a finite-difference Hessian, which
  // amplifies ordering roundoff by about 1e6
  CHECK(discrepancy(fit(ma), fit(mb)) < 1e-8);
}

TEST_CASE("convolution model has two hyperparameter marginals") {
  const SimulatedData sim = simulate_fixture(lattice_options(10, 7));
  const auto m = LatentModel::build(ModelSpec::preset("convolution"), sim.data);
  const FitResult f = fit(m);
  REQUIRE(f.hyper.size() == 2);
  for (const auto& h : f.hyper) {
    CHECK(std::abs(h.log_precision.integral() - 1.0) < 1e-6);
    CHECK(std::abs(h.precision.integral() - 1.0) < 1e-6);
  }
}

TEST_CASE("laplace path runs and stays close to the simplified one") {
  const Dataset d = support::path_dataset({3, 9, 17}, {40, 50, 45});
  const auto m = LatentModel::build(ModelSpec::preset("icar-only"), d);
  FitOptions o;
  o.path = MarginalPath::Laplace;
  const FitResult la = fit(m, o);
  const FitResult sla = fit(m);
  for (std::size_t i = 0; i < m.latent_dim(); ++i) {
    CHECK(std::abs(la.latent[i].mean() - sla.latent[i].mean()) < 0.05);
    CHECK(std::abs(la.latent[i].integral() - 1.0) < 1e-6);
  }
}

TEST_CASE("dic identities") {
  const DicResult r = make_dic(120.5, 117.25);
  CHECK(r.dic - 2 * r.mean_deviance + r.deviance_at_mean == 0.0);
  CHECK(r.p_d == 3.25);

  const SimulatedData sim = simulate_fixture(lattice_options(12, 9));
  const auto m = LatentModel::build(ModelSpec::preset("icar-only"), sim.data);
  const FitResult f = fit(m);
  const DicResult d = dic(f, m);
  CHECK(d.dic - 2 * d.mean_deviance + d.deviance_at_mean == 0.0);
  CHECK(d.p_d > 0.0);

  // a constant added to every log-likelihood shifts both deviances by -2c
  class Shifted final : public ObservationModel {
   public:
    Shifted(std::shared_ptr<const ObservationModel> base, double c) : base_(std::move(base)), c_(c) {}
    std::size_t size() const override { return base_->size(); }
    double log_density(std::size_t j, double eta) const override { return base_->log_density(j, eta) + c_; }
    Derivatives derivatives(std::size_t j, double eta) const override { return base_->derivatives(j, eta); }
    std::string name() const override { return "shifted"; }

   private:
    std::shared_ptr<const ObservationModel> base_;
    double c_;
  };
  const auto ms = m.with_observations(std::make_shared<Shifted>(m.observations_ptr(), 1.5));
  const DicResult ds = dic(f, ms);
  const double total = 1.5 * static_cast<double>(m.n_obs());
  CHECK(std::abs(ds.mean_deviance - (d.mean_deviance - 2 * total)) < 1e-10);
  CHECK(std::abs(ds.deviance_at_mean - (d.deviance_at_mean - 2 * total)) < 1e-10);
  CHECK(std::abs(ds.p_d - d.p_d) < 1e-10);
  // refitting sees the same theta surface up to a constant; the
  // finite-difference Hessian makes this agree to roundoff only
  const DicResult refit = dic(fit(ms), ms);
  CHECK(std::abs(refit.p_d - d.p_d) < 1e-6);
}

TEST_CASE("degenerate posterior has no effective parameters") {
  Dataset d = support::path_dataset({4, 6}, {20, 20});
  d.graph.reset();
  const auto m =
      LatentModel::build(ModelSpec::from_json(R"({"terms":[{"kind":"intercept"}],"fixed_prior_precision":1e14})"), d);
  const FitResult f = fit(m);
  const DicResult r = dic(f, m);
  CHECK(std::abs(r.p_d) < 1e-9);
  CHECK(std::abs(r.mean_deviance - r.deviance_at_mean) < 1e-9);
  // all effects at zero: exp summaries are 1
  const auto rows = effect_summaries(f, m);
  REQUIRE(!rows.empty());
  CHECK(std::abs(rows[0].exp_summary.mean - 1.0) < 1e-6);
  CHECK(std::abs(rows[0].exp_summary.q025 - 1.0) < 1e-6);
  CHECK(std::abs(rows[0].exp_summary.q975 - 1.0) < 1e-6);
}

TEST_CASE("effect summaries transform the grid") {
  const SimulatedData sim = simulate_fixture(lattice_options(20, 2));
  const auto m = LatentModel::build(ModelSpec::preset("icar-zone"), sim.data);
  const FitResult f = fit(m);
  const auto rows = effect_summaries(f, m);
  std::size_t refs = 0;
  for (const auto& r : rows) {
    if (r.reference) {
      ++refs;
      continue;
    }
    CHECK(r.exp_summary.mean >= std::exp(r.summary.mean) - 1e-12);
    CHECK(r.exp_summary.q025 == doctest::Approx(std::exp(r.summary.q025)));
  }
  CHECK(refs == 1);
}
