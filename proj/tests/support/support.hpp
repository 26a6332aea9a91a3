#pragma once

// Shared fixtures and independent reference computations for the tests.
// Everything here is written directly from the model definitions with dense
// linear algebra; none of it calls into the engine.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "inla/dataset.hpp"
#include "inla/priors.hpp"

namespace support {

inline constexpr double kLog2Pi = 1.8378770664093454836;

// One observation per unit on a path graph 0 - 1 - ... - (n-1).
inline inla::Dataset path_dataset(const std::vector<std::int64_t>& y, const std::vector<std::int64_t>& n) {
  const std::size_t units = y.size();
  std::vector<std::vector<std::size_t>> nb(units);
  for (std::size_t i = 0; i + 1 < units; ++i) {
    nb[i].push_back(i + 1);
    nb[i + 1].push_back(i);
  }
  inla::Dataset d;
  d.graph = inla::AdjacencyGraph::from_neighbors(nb);
  d.n_units = units;
  for (std::size_t i = 0; i < units; ++i) d.unit.push_back(i);
  d.y = y;
  d.n = n;
  return d;
}

// D - W for a graph, dense.
inline Eigen::MatrixXd dense_graph_laplacian(const inla::AdjacencyGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.n_units());
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t u = 0; u < g.n_units(); ++u) {
    for (std::size_t v : g.neighbors(u)) {
      r(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) -= 1.0;
      r(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(u)) += 1.0;
    }
  }
  return r;
}

inline Eigen::MatrixXd random_spd(int dim, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd b(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) b(i, j) = nd(gen);
  return b * b.transpose() + 0.5 * Eigen::MatrixXd::Identity(dim, dim);
}

inline int eigen_rank(const Eigen::MatrixXd& m, double threshold = 1e-9) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  int r = 0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) r += std::abs(es.eigenvalues()[k]) > threshold;
  return r;
}

// Orthonormal complement of the row space of c (n x (n - rank c)), via a
// complete QR of c^T.
inline Eigen::MatrixXd complement_basis(const Eigen::MatrixXd& c, Eigen::Index n) {
  if (c.rows() == 0) return Eigen::MatrixXd::Identity(n, n);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(c.transpose());
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  return q.rightCols(n - c.rows());
}

// Gaussian observations c_j ~ N(a_j^T x, 1/w_j) under the prior
// x ~ N(0, Q^-) restricted to {C x = 0}. Q must be positive definite on the
// constrained subspace.
struct GaussianModel {
  Eigen::MatrixXd q;       // n x n prior precision at one theta
  Eigen::MatrixXd c;       // k x n constraints
  Eigen::MatrixXd a;       // m x n incidence
  Eigen::VectorXd center;  // m
  Eigen::VectorXd weight;  // m
};

struct GaussianPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

inline GaussianPosterior closed_form_posterior(const GaussianModel& g) {
  const Eigen::MatrixXd b = complement_basis(g.c, g.q.rows());
  const Eigen::MatrixXd p = b.transpose() * (g.q + g.a.transpose() * g.weight.asDiagonal() * g.a) * b;
  const Eigen::VectorXd rhs = b.transpose() * g.a.transpose() * g.weight.cwiseProduct(g.center);
  const Eigen::MatrixXd pinv = p.inverse();
  return {b * (pinv * rhs), b * pinv * b.transpose()};
}

// log p(center | theta) with the constrained prior normalized by its
// pseudo-determinant on the subspace: the observation vector is Gaussian with
// covariance A S A^T + W^-1, S the constrained prior covariance.
inline double closed_form_log_evidence(const GaussianModel& g) {
  const Eigen::MatrixXd b = complement_basis(g.c, g.q.rows());
  const Eigen::MatrixXd s = b * (b.transpose() * g.q * b).inverse() * b.transpose();
  Eigen::MatrixXd cov = g.a * s * g.a.transpose();
  for (Eigen::Index j = 0; j < cov.rows(); ++j) cov(j, j) += 1.0 / g.weight[j];
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  const Eigen::VectorXd alpha = llt.solve(g.center);
  const Eigen::MatrixXd l = llt.matrixL();
  const double logdet = 2.0 * l.diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(g.center.size()) * kLog2Pi + logdet + g.center.dot(alpha));
}

inline double gamma_log_density(double tau, double a, double b) {
  return a * std::log(b) - std::lgamma(a) + (a - 1.0) * std::log(tau) - b * tau;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const std::filesystem::path p = std::filesystem::path(INLA_TEST_SCRATCH) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace support
