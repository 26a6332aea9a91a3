#include <doctest.h>

#include <random>

#include "inla/errors.hpp"
#include "inla/likelihood.hpp"

using namespace inla;

namespace {

// |numeric - analytic| relative to max(|analytic|, 1)
double rel(double numeric, double analytic) { return std::abs(numeric - analytic) / std::max(std::abs(analytic), 1.0); }

}  // namespace

TEST_CASE("log likelihood values") {
  CHECK(log_likelihood(3, 10, 0.0) == doctest::Approx(-10 * std::log(2.0) + std::log(120.0)).epsilon(1e-14));
  CHECK(log_likelihood(3, 10, 0.0) == doctest::Approx(-2.14398).epsilon(1e-5));
  CHECK(std::abs(log_likelihood(0, 5, -800.0)) < 1e-300);
  CHECK(log_likelihood(5, 5, 800.0) == doctest::Approx(0.0));
  // 17 * 0.3 - 40 log(1 + e^0.3) + log C(40, 17), C(40,17) = 88732378800
  const double ref = 17 * 0.3 - 40 * std::log1p(std::exp(0.3)) + std::log(88732378800.0);
  CHECK(std::abs(log_likelihood(17, 40, 0.3) - ref) < 1e-12);
  CHECK(log_likelihood(17, 40, 0.3) - log_likelihood_kernel(17, 40, 0.3) ==
        doctest::Approx(log_binomial_coefficient(40, 17)));
}

TEST_CASE("derivative values") {
  const Derivatives d = derivatives(3, 10, 0.0);
  CHECK(d.d1 == -2.0);
  CHECK(d.d2 == -2.5);
  CHECK(d.d3 == 0.0);
  for (double eta : {-30.0, -2.0, 0.0, 0.7, 12.0}) CHECK(derivatives(4, 9, eta).d2 < 0.0);
}

TEST_CASE("derivatives against central differences") {
  std::mt19937_64 gen(77);
  std::uniform_int_distribution<std::int64_t> nn(1, 2000);
  std::uniform_real_distribution<double> ee(-6.0, 6.0);
  const double h = 1e-5;
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::int64_t n = nn(gen);
    const std::int64_t y = std::uniform_int_distribution<std::int64_t>(0, n)(gen);
    const double eta = ee(gen);
    const Derivatives d = derivatives(y, n, eta);
    const Derivatives up = derivatives(y, n, eta + h);
    const Derivatives dn = derivatives(y, n, eta - h);
    const double fd1 = (log_likelihood(y, n, eta + h) - log_likelihood(y, n, eta - h)) / (2 * h);
    worst = std::max({worst, rel(fd1, d.d1), rel((up.d1 - dn.d1) / (2 * h), d.d2), rel((up.d2 - dn.d2) / (2 * h), d.d3)});
    CHECK(d.d2 < 0.0);
    CHECK((d.d3 > 0.0) == (expit(eta) > 0.5));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("expit and logit") {
  CHECK(expit(0.0) == 0.5);
  CHECK(logit(0.5) == 0.0);
  CHECK(expit(-800.0) == 0.0);
  CHECK(expit(800.0) == 1.0);
  CHECK_THROWS_AS(logit(0.0), DomainError);
  CHECK_THROWS_AS(logit(1.0), DomainError);
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(1e-12, 1.0 - 1e-12);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double p = u(gen);
    worst = std::max(worst, std::abs(expit(logit(p)) - p));
  }
  CHECK(worst < 1e-12);
  CHECK(log1p_exp(800.0) == doctest::Approx(800.0));
}

TEST_CASE("observation models") {
  const BinomialLogit b({3, 0}, {10, 4});
  CHECK(b.size() == 2);
  CHECK(b.log_density(0, 0.2) == log_likelihood(3, 10, 0.2));
  CHECK_THROWS(BinomialLogit({5}, {4}));
  CHECK_THROWS(BinomialLogit({1}, {0}));
  const GaussianSurrogate g({1.0}, {4.0});
  CHECK(g.log_density(0, 1.5) == doctest::Approx(-0.5 * 4.0 * 0.25 + 0.5 * std::log(4.0 / (2 * M_PI))));
  const Derivatives d = g.derivatives(0, 1.5);
  CHECK(d.d1 == doctest::Approx(-2.0));
  CHECK(d.d2 == -4.0);
  CHECK(d.d3 == 0.0);
}
