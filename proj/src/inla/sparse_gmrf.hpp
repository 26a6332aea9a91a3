#pragma once

// Precision-matrix algebra for Gaussian Markov random fields.
//
// Storage is a canonical upper-triangle triplet list; factorization is dense
// (the latent fields handled here are a few hundred to a couple of thousand
// variables). Nothing in the interface exposes the dense backend except
// CholeskyFactor::lower(), so a sparse factorization can be substituted.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace inla {

struct Entry {
  std::size_t row;
  std::size_t col;
  double value;
};

class SymmetricSparseMatrix {
 public:
  SymmetricSparseMatrix() = default;

  // Entries may name either triangle; (r, c) and (c, r) address the same
  // element. Duplicate keys are summed.
  static SymmetricSparseMatrix build(std::size_t dim, std::span<const Entry> entries);

  static SymmetricSparseMatrix identity(std::size_t dim, double scale = 1.0);

  // Places each block on the diagonal in order.
  static SymmetricSparseMatrix block_diagonal(std::span<const SymmetricSparseMatrix> blocks);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t nonzeros() const noexcept { return entries_.size(); }

  // Upper-triangle entries sorted by (row, col).
  const std::vector<Entry>& entries() const noexcept { return entries_; }

  double operator()(std::size_t row, std::size_t col) const;

  SymmetricSparseMatrix scaled(double factor) const;

  Eigen::MatrixXd to_dense() const;
  Eigen::VectorXd multiply(const Eigen::VectorXd& v) const;
  double quadratic_form(const Eigen::VectorXd& v) const;

  // dense.block(offset, offset, dim, dim) += scale * this
  void add_to(Eigen::MatrixXd& dense, std::size_t offset = 0, double scale = 1.0) const;

 private:
  std::size_t dim_ = 0;
  std::vector<Entry> entries_;
};

// Row of a sparse linear map, e.g. one observation's incidence row.
struct SparseRow {
  std::vector<std::size_t> cols;
  std::vector<double> vals;

  void push(std::size_t col, double value) {
    cols.push_back(col);
    vals.push_back(value);
  }
  std::size_t size() const noexcept { return cols.size(); }
  double dot(const Eigen::VectorXd& x) const;
  Eigen::VectorXd to_dense(std::size_t dim) const;
  bool operator==(const SparseRow&) const = default;
};

class CholeskyFactor {
 public:
  std::size_t dim() const noexcept { return static_cast<std::size_t>(lower_.rows()); }
  double log_det() const noexcept { return log_det_; }
  double jitter() const noexcept { return jitter_; }

  // L with L * L^T = M + jitter * I.
  const Eigen::MatrixXd& lower() const noexcept { return lower_; }

  // L^{-1} b
  Eigen::VectorXd forward(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& b) const;
  // (L L^T)^{-1} b
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;

 private:
  friend CholeskyFactor cholesky(const Eigen::MatrixXd& dense, double jitter);

  Eigen::MatrixXd lower_;
  double log_det_ = 0.0;
  double jitter_ = 0.0;
};

// Throws NotPositiveDefinite naming the first non-positive pivot.
CholeskyFactor cholesky(const SymmetricSparseMatrix& m, double jitter = 0.0);
CholeskyFactor cholesky(const Eigen::MatrixXd& dense, double jitter = 0.0);

Eigen::VectorXd solve(const CholeskyFactor& factor, const Eigen::VectorXd& b);

// Diagonal of the inverse of the factored matrix.
Eigen::VectorXd marginal_variances(const CholeskyFactor& factor);

struct ConditionalStats {
  std::size_t anchor_index = 0;
  // a[j] = corr(x_anchor, x_j); a[anchor] = 1.
  Eigen::VectorXd a;
  // var(x_j | x_anchor) = sigma_j^2 (1 - a[j]^2)
  Eigen::VectorXd conditional_variances;
};

ConditionalStats conditional_stats(const CholeskyFactor& factor, std::size_t i);

// Gaussian with precision P restricted to the affine set {x : C x = e}.
// Handled by conditioning on the constraint (kriging correction of the
// unconstrained solution), so only the SPD factor of P is ever formed.
class ConstrainedGaussian {
 public:
  // `constraints` is k x n (k may be 0) with full row rank.
  ConstrainedGaussian(CholeskyFactor factor, Eigen::MatrixXd constraints);

  std::size_t dim() const noexcept { return factor_.dim(); }
  std::size_t constraint_count() const noexcept {
    return static_cast<std::size_t>(constraints_.rows());
  }
  // Dimension of the constrained subspace.
  std::size_t constrained_dim() const noexcept { return dim() - constraint_count(); }

  const CholeskyFactor& factor() const noexcept { return factor_; }
  const Eigen::MatrixXd& constraints() const noexcept { return constraints_; }

  // Maximizer of -x^T P x / 2 + b^T x subject to C x = e (e = 0 if omitted).
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::VectorXd solve(const Eigen::VectorXd& b, const Eigen::VectorXd& e) const;

  // Covariance of the constrained Gaussian applied to v.
  Eigen::VectorXd covariance_times(const Eigen::VectorXd& v) const;
  Eigen::VectorXd covariance_column(std::size_t i) const;
  double variance_of(const SparseRow& row) const;
  Eigen::VectorXd marginal_variances() const;
  // Full dense covariance; O(n^3), meant for one call per hyperparameter point.
  Eigen::MatrixXd covariance() const;

  // log det of P restricted to the constraint subspace (orthonormal basis).
  double log_det() const noexcept { return log_det_; }

 private:
  CholeskyFactor factor_;
  Eigen::MatrixXd constraints_;
  Eigen::MatrixXd p_inv_ct_;  // P^{-1} C^T
  Eigen::MatrixXd l_inv_ct_;  // L^{-1} C^T
  Eigen::LLT<Eigen::MatrixXd> schur_;  // C P^{-1} C^T
  double log_det_ = 0.0;
};

ConditionalStats conditional_stats(const ConstrainedGaussian& g, std::size_t i);

}  // namespace inla
