#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace inla {

// Numerically stable logistic function; saturates to 0 or 1 without
// overflow for any finite argument.
double expit(double eta);
// Throws DomainError outside (0, 1).
double logit(double p);
// log(1 + exp(eta)) without overflow.
double log1p_exp(double eta);

double log_binomial_coefficient(std::int64_t n, std::int64_t k);

// Binomial-logit log-likelihood, binomial coefficient included.
double log_likelihood(std::int64_t y, std::int64_t n, double eta);
// Same without the binomial coefficient.
double log_likelihood_kernel(std::int64_t y, std::int64_t n, double eta);

// First three derivatives of the log-likelihood with respect to eta.
struct Derivatives {
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;
};

Derivatives derivatives(std::int64_t y, std::int64_t n, double eta);

// Per-observation log-density of the data given its linear predictor. The
// engine only talks to this interface, which lets tests swap in surrogate
// likelihoods with known posteriors.
class ObservationModel {
 public:
  virtual ~ObservationModel() = default;
  virtual std::size_t size() const = 0;
  virtual double log_density(std::size_t j, double eta) const = 0;
  virtual Derivatives derivatives(std::size_t j, double eta) const = 0;
  virtual std::string name() const = 0;
};

class BinomialLogit final : public ObservationModel {
 public:
  BinomialLogit(std::vector<std::int64_t> y, std::vector<std::int64_t> n);

  std::size_t size() const override { return y_.size(); }
  double log_density(std::size_t j, double eta) const override;
  Derivatives derivatives(std::size_t j, double eta) const override;
  std::string name() const override { return "binomial-logit"; }

  const std::vector<std::int64_t>& successes() const noexcept { return y_; }
  const std::vector<std::int64_t>& trials() const noexcept { return n_; }

 private:
  std::vector<std::int64_t> y_;
  std::vector<std::int64_t> n_;
  std::vector<double> log_coef_;
};

// Quadratic log-likelihood -w (eta - c)^2 / 2 + log(w / 2 pi) / 2: a Gaussian
// observation of eta with known precision. Third derivatives vanish.
class GaussianSurrogate final : public ObservationModel {
 public:
  GaussianSurrogate(std::vector<double> centers, std::vector<double> precisions);

  std::size_t size() const override { return centers_.size(); }
  double log_density(std::size_t j, double eta) const override;
  Derivatives derivatives(std::size_t j, double eta) const override;
  std::string name() const override { return "gaussian-surrogate"; }

  const std::vector<double>& centers() const noexcept { return centers_; }
  const std::vector<double>& precisions() const noexcept { return precisions_; }

 private:
  std::vector<double> centers_;
  std::vector<double> precisions_;
};

}  // namespace inla
