#include "inla/likelihood.hpp"

#include <cmath>
#include <numbers>

#include "inla/errors.hpp"

namespace inla {

double expit(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("logit needs 0 < p < 1");
  return std::log(p) - std::log1p(-p);
}

double log1p_exp(double eta) {
  if (eta > 0.0) return eta + std::log1p(std::exp(-eta));
  return std::log1p(std::exp(eta));
}

double log_binomial_coefficient(std::int64_t n, std::int64_t k) {
  if (n < 0 || k < 0 || k > n) throw DomainError("binomial coefficient needs 0 <= k <= n");
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

double log_likelihood_kernel(std::int64_t y, std::int64_t n, double eta) {
  const double yd = static_cast<double>(y);
  const double nd = static_cast<double>(n);
  // y eta - N log(1 + e^eta) = y log(pi) + (N - y) log(1 - pi); the second
  // form avoids cancellation when eta is very negative and y = 0.
  double core;
  if (eta < 0.0) {
    core = yd * eta - nd * log1p_exp(eta);
  } else {
    core = -(nd - yd) * eta - nd * log1p_exp(-eta);
  }
  return core;
}

double log_likelihood(std::int64_t y, std::int64_t n, double eta) {
  return log_likelihood_kernel(y, n, eta) + log_binomial_coefficient(n, y);
}

Derivatives derivatives(std::int64_t y, std::int64_t n, double eta) {
  const double p = expit(eta);
  const double q = expit(-eta);
  const double nd = static_cast<double>(n);
  Derivatives d;
  d.d1 = static_cast<double>(y) - nd * p;
  d.d2 = -nd * p * q;
  // 1 - 2p written as q - p keeps d3 exactly 0 at eta = 0
  d.d3 = -nd * p * q * (q - p);
  return d;
}

BinomialLogit::BinomialLogit(std::vector<std::int64_t> y, std::vector<std::int64_t> n)
    : y_(std::move(y)), n_(std::move(n)) {
  if (y_.size() != n_.size()) throw DimensionMismatch("binomial y and N lengths differ");
  log_coef_.reserve(y_.size());
  for (std::size_t j = 0; j < y_.size(); ++j) {
    if (n_[j] < 1) throw DomainError("binomial N must be >= 1 (observation " + std::to_string(j) + ")");
    if (y_[j] < 0 || y_[j] > n_[j]) {
      throw DomainError("binomial count outside [0, N] (observation " + std::to_string(j) + ")");
    }
    log_coef_.push_back(log_binomial_coefficient(n_[j], y_[j]));
  }
}

double BinomialLogit::log_density(std::size_t j, double eta) const {
  return log_likelihood_kernel(y_[j], n_[j], eta) + log_coef_[j];
}

Derivatives BinomialLogit::derivatives(std::size_t j, double eta) const {
  return inla::derivatives(y_[j], n_[j], eta);
}

GaussianSurrogate::GaussianSurrogate(std::vector<double> centers, std::vector<double> precisions)
    : centers_(std::move(centers)), precisions_(std::move(precisions)) {
  if (centers_.size() != precisions_.size()) throw DimensionMismatch("surrogate lengths differ");
  for (double w : precisions_) {
    if (!(w > 0.0)) throw DomainError("surrogate precision must be positive");
  }
}

double GaussianSurrogate::log_density(std::size_t j, double eta) const {
  const double w = precisions_[j];
  const double r = eta - centers_[j];
  return 0.5 * std::log(w / (2.0 * std::numbers::pi)) - 0.5 * w * r * r;
}

Derivatives GaussianSurrogate::derivatives(std::size_t j, double eta) const {
  return {-precisions_[j] * (eta - centers_[j]), -precisions_[j], 0.0};
}

}  // namespace inla
