#include "inla/sparse_gmrf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "inla/errors.hpp"

namespace inla {

SymmetricSparseMatrix SymmetricSparseMatrix::build(std::size_t dim,
                                                   std::span<const Entry> entries) {
  if (dim == 0) throw DomainError("symmetric matrix dimension must be >= 1");
  std::vector<Entry> upper;
  upper.reserve(entries.size());
  for (const Entry& e : entries) {
    if (e.row >= dim || e.col >= dim) {
      throw IndexOutOfRange("entry (" + std::to_string(e.row) + ", " +
                            std::to_string(e.col) + ") in matrix of dimension " +
                            std::to_string(dim));
    }
    upper.push_back({std::min(e.row, e.col), std::max(e.row, e.col), e.value});
  }
  std::sort(upper.begin(), upper.end(), [](const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SymmetricSparseMatrix m;
  m.dim_ = dim;
  for (const Entry& e : upper) {
    if (!m.entries_.empty() && m.entries_.back().row == e.row &&
        m.entries_.back().col == e.col) {
      m.entries_.back().value += e.value;
    } else {
      m.entries_.push_back(e);
    }
  }
  return m;
}

SymmetricSparseMatrix SymmetricSparseMatrix::identity(std::size_t dim, double scale) {
  std::vector<Entry> entries;
  entries.reserve(dim);
  for (std::size_t i = 0; i < dim; ++i) entries.push_back({i, i, scale});
  return build(dim, entries);
}

SymmetricSparseMatrix SymmetricSparseMatrix::block_diagonal(
    std::span<const SymmetricSparseMatrix> blocks) {
  std::size_t dim = 0;
  std::vector<Entry> entries;
  for (const auto& b : blocks) {
    for (const Entry& e : b.entries_) entries.push_back({e.row + dim, e.col + dim, e.value});
    dim += b.dim_;
  }
  return build(dim, entries);
}

double SymmetricSparseMatrix::operator()(std::size_t row, std::size_t col) const {
  if (row >= dim_ || col >= dim_) throw IndexOutOfRange("matrix element lookup");
  const std::size_t r = std::min(row, col);
  const std::size_t c = std::max(row, col);
  auto it = std::lower_bound(entries_.begin(), entries_.end(), Entry{r, c, 0.0},
                             [](const Entry& a, const Entry& b) {
                               return a.row != b.row ? a.row < b.row : a.col < b.col;
                             });
  if (it != entries_.end() && it->row == r && it->col == c) return it->value;
  return 0.0;
}

SymmetricSparseMatrix SymmetricSparseMatrix::scaled(double factor) const {
  SymmetricSparseMatrix m = *this;
  for (Entry& e : m.entries_) e.value *= factor;
  return m;
}

Eigen::MatrixXd SymmetricSparseMatrix::to_dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(dim_, dim_);
  add_to(d);
  return d;
}

void SymmetricSparseMatrix::add_to(Eigen::MatrixXd& dense, std::size_t offset,
                                   double scale) const {
  for (const Entry& e : entries_) {
    const auto r = static_cast<Eigen::Index>(e.row + offset);
    const auto c = static_cast<Eigen::Index>(e.col + offset);
    dense(r, c) += scale * e.value;
    if (r != c) dense(c, r) += scale * e.value;
  }
}

Eigen::VectorXd SymmetricSparseMatrix::multiply(const Eigen::VectorXd& v) const {
  if (static_cast<std::size_t>(v.size()) != dim_) {
    throw DimensionMismatch("matrix-vector product");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_);
  for (const Entry& e : entries_) {
    out[e.row] += e.value * v[e.col];
    if (e.row != e.col) out[e.col] += e.value * v[e.row];
  }
  return out;
}

double SymmetricSparseMatrix::quadratic_form(const Eigen::VectorXd& v) const {
  if (static_cast<std::size_t>(v.size()) != dim_) throw DimensionMismatch("quadratic form");
  double q = 0.0;
  for (const Entry& e : entries_) {
    const double t = e.value * v[e.row] * v[e.col];
    q += e.row == e.col ? t : 2.0 * t;
  }
  return q;
}

double SparseRow::dot(const Eigen::VectorXd& x) const {
  double s = 0.0;
  for (std::size_t k = 0; k < cols.size(); ++k) s += vals[k] * x[cols[k]];
  return s;
}

Eigen::VectorXd SparseRow::to_dense(std::size_t dim) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
  for (std::size_t k = 0; k < cols.size(); ++k) v[cols[k]] += vals[k];
  return v;
}

namespace {

// Unblocked left-looking factorization; only used to name the failing pivot.
std::size_t first_bad_pivot(const Eigen::MatrixXd& a, double tol) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > tol)) return static_cast<std::size_t>(j);
    l(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
  }
  return static_cast<std::size_t>(n - 1);
}

}  // namespace

CholeskyFactor cholesky(const Eigen::MatrixXd& dense, double jitter) {
  if (dense.rows() != dense.cols() || dense.rows() == 0) {
    throw DimensionMismatch("cholesky needs a non-empty square matrix");
  }
  if (!(jitter >= 0.0)) throw DomainError("jitter must be non-negative");
  Eigen::MatrixXd a = dense;
  if (jitter > 0.0) a.diagonal().array() += jitter;

  const double max_diag = a.diagonal().cwiseAbs().maxCoeff();
  const double tol = static_cast<double>(a.rows()) *
                     std::numeric_limits<double>::epsilon() * std::max(max_diag, 1e-300);

  Eigen::LLT<Eigen::MatrixXd> llt(a);
  bool ok = llt.info() == Eigen::Success;
  CholeskyFactor f;
  if (ok) {
    f.lower_ = llt.matrixL();
    for (Eigen::Index k = 0; k < a.rows(); ++k) {
      const double p = f.lower_(k, k);
      if (!(p * p > tol) || !std::isfinite(p)) {
        ok = false;
        break;
      }
    }
  }
  if (!ok) throw NotPositiveDefinite(first_bad_pivot(a, tol));

  f.jitter_ = jitter;
  f.log_det_ = 2.0 * f.lower_.diagonal().array().log().sum();
  return f;
}

CholeskyFactor cholesky(const SymmetricSparseMatrix& m, double jitter) {
  return cholesky(m.to_dense(), jitter);
}

Eigen::VectorXd CholeskyFactor::forward(const Eigen::VectorXd& b) const {
  if (b.size() != lower_.rows()) throw DimensionMismatch("triangular solve");
  return lower_.triangularView<Eigen::Lower>().solve(b);
}

Eigen::MatrixXd CholeskyFactor::forward(const Eigen::MatrixXd& b) const {
  if (b.rows() != lower_.rows()) throw DimensionMismatch("triangular solve");
  return lower_.triangularView<Eigen::Lower>().solve(b);
}

Eigen::VectorXd CholeskyFactor::solve(const Eigen::VectorXd& b) const {
  Eigen::VectorXd y = forward(b);
  return lower_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Eigen::MatrixXd CholeskyFactor::solve(const Eigen::MatrixXd& b) const {
  Eigen::MatrixXd y = forward(b);
  return lower_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Eigen::VectorXd solve(const CholeskyFactor& factor, const Eigen::VectorXd& b) {
  return factor.solve(b);
}

Eigen::VectorXd marginal_variances(const CholeskyFactor& factor) {
  // diag(M^{-1}) = column-wise squared norms of L^{-1}
  const auto n = static_cast<Eigen::Index>(factor.dim());
  Eigen::MatrixXd linv = factor.forward(Eigen::MatrixXd(Eigen::MatrixXd::Identity(n, n)));
  return linv.colwise().squaredNorm().transpose();
}

ConditionalStats conditional_stats(const CholeskyFactor& factor, std::size_t i) {
  const std::size_t n = factor.dim();
  if (i >= n) throw IndexOutOfRange("conditional_stats anchor " + std::to_string(i));
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  e[i] = 1.0;
  const Eigen::VectorXd column = factor.solve(e);
  const Eigen::VectorXd var = marginal_variances(factor);
  ConditionalStats s;
  s.anchor_index = i;
  s.a.resize(n);
  s.conditional_variances.resize(n);
  const double sd_i = std::sqrt(var[i]);
  for (std::size_t j = 0; j < n; ++j) {
    const double corr = j == i ? 1.0 : column[j] / (sd_i * std::sqrt(var[j]));
    s.a[j] = corr;
    s.conditional_variances[j] = std::max(0.0, var[j] * (1.0 - corr * corr));
  }
  return s;
}

ConstrainedGaussian::ConstrainedGaussian(CholeskyFactor factor, Eigen::MatrixXd constraints)
    : factor_(std::move(factor)), constraints_(std::move(constraints)) {
  const auto n = static_cast<Eigen::Index>(factor_.dim());
  if (constraints_.rows() > 0 && constraints_.cols() != n) {
    throw DimensionMismatch("constraint matrix has wrong column count");
  }
  if (constraints_.rows() > n) throw DimensionMismatch("more constraints than variables");
  log_det_ = factor_.log_det();
  if (constraints_.rows() == 0) {
    constraints_.resize(0, n);
    return;
  }
  const Eigen::MatrixXd ct = constraints_.transpose();
  l_inv_ct_ = factor_.forward(ct);
  p_inv_ct_ = factor_.lower().transpose().triangularView<Eigen::Upper>().solve(l_inv_ct_);
  const Eigen::MatrixXd schur = l_inv_ct_.transpose() * l_inv_ct_;
  schur_.compute(schur);
  if (schur_.info() != Eigen::Success) {
    throw Error(ErrorKind::Numerical, "constraint rows are linearly dependent");
  }
  Eigen::LLT<Eigen::MatrixXd> cct(constraints_ * ct);
  const double log_det_schur =
      2.0 * Eigen::MatrixXd(schur_.matrixL()).diagonal().array().log().sum();
  const double log_det_cct =
      2.0 * Eigen::MatrixXd(cct.matrixL()).diagonal().array().log().sum();
  // |B^T P B| = |P| |C P^{-1} C^T| / |C C^T| for an orthonormal basis B of null(C)
  log_det_ += log_det_schur - log_det_cct;
}

Eigen::VectorXd ConstrainedGaussian::solve(const Eigen::VectorXd& b) const {
  return solve(b, Eigen::VectorXd::Zero(constraints_.rows()));
}

Eigen::VectorXd ConstrainedGaussian::solve(const Eigen::VectorXd& b,
                                           const Eigen::VectorXd& e) const {
  Eigen::VectorXd x = factor_.solve(b);
  if (constraints_.rows() == 0) return x;
  if (e.size() != constraints_.rows()) throw DimensionMismatch("constraint right-hand side");
  const Eigen::VectorXd residual = constraints_ * x - e;
  x -= p_inv_ct_ * schur_.solve(residual);
  return x;
}

Eigen::VectorXd ConstrainedGaussian::covariance_times(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out = factor_.solve(v);
  if (constraints_.rows() == 0) return out;
  out -= p_inv_ct_ * schur_.solve(p_inv_ct_.transpose() * v);
  return out;
}

Eigen::VectorXd ConstrainedGaussian::covariance_column(std::size_t i) const {
  if (i >= dim()) throw IndexOutOfRange("covariance column " + std::to_string(i));
  Eigen::VectorXd e = Eigen::VectorXd::Zero(dim());
  e[i] = 1.0;
  return covariance_times(e);
}

double ConstrainedGaussian::variance_of(const SparseRow& row) const {
  const Eigen::VectorXd a = row.to_dense(dim());
  const Eigen::VectorXd l_inv_a = factor_.forward(a);
  double v = l_inv_a.squaredNorm();
  if (constraints_.rows() > 0) {
    const Eigen::VectorXd g = l_inv_ct_.transpose() * l_inv_a;
    v -= g.dot(schur_.solve(g));
  }
  return std::max(v, 0.0);
}

Eigen::VectorXd ConstrainedGaussian::marginal_variances() const {
  Eigen::VectorXd v = inla::marginal_variances(factor_);
  if (constraints_.rows() == 0) return v;
  const Eigen::MatrixXd s_inv_wt = schur_.solve(p_inv_ct_.transpose());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = std::max(0.0, v[i] - p_inv_ct_.row(i).dot(s_inv_wt.col(i)));
  }
  return v;
}

Eigen::MatrixXd ConstrainedGaussian::covariance() const {
  const auto n = static_cast<Eigen::Index>(dim());
  const Eigen::MatrixXd linv = factor_.forward(Eigen::MatrixXd(Eigen::MatrixXd::Identity(n, n)));
  Eigen::MatrixXd cov = linv.transpose() * linv;
  if (constraints_.rows() > 0) cov -= p_inv_ct_ * schur_.solve(p_inv_ct_.transpose());
  return cov;
}

ConditionalStats conditional_stats(const ConstrainedGaussian& g, std::size_t i) {
  const std::size_t n = g.dim();
  if (i >= n) throw IndexOutOfRange("conditional_stats anchor " + std::to_string(i));
  const Eigen::VectorXd column = g.covariance_column(i);
  const Eigen::VectorXd var = g.marginal_variances();
  ConditionalStats s;
  s.anchor_index = i;
  s.a.resize(n);
  s.conditional_variances.resize(n);
  const double sd_i = std::sqrt(var[i]);
  for (std::size_t j = 0; j < n; ++j) {
    double corr = 1.0;
    if (j != i) {
      const double denom = sd_i * std::sqrt(var[j]);
      corr = denom > 0.0 ? column[j] / denom : 0.0;
    }
    s.a[j] = corr;
    s.conditional_variances[j] = std::max(0.0, var[j] * (1.0 - corr * corr));
  }
  return s;
}

}  // namespace inla
