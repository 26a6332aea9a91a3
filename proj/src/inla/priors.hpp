#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "inla/sparse_gmrf.hpp"

namespace inla {

// Undirected neighbourhood structure of a lattice of geographical units.
class AdjacencyGraph {
 public:
  AdjacencyGraph() = default;

  // Validates symmetry and the absence of self-loops; sorts each list.
  static AdjacencyGraph from_neighbors(std::vector<std::vector<std::size_t>> neighbors);

  // Text format, one line per unit: `unit_id n_neighbors id1 ... idk`
  // (0-based ids, whitespace separated, lines in any order). Blank lines and
  // lines starting with '#' are ignored.
  static AdjacencyGraph read(std::istream& in, const std::string& source = "adjacency");
  static AdjacencyGraph load(const std::string& path);

  // rows x cols grid with rook (edge-sharing) adjacency, row-major ids.
  static AdjacencyGraph lattice(std::size_t rows, std::size_t cols);

  std::size_t n_units() const noexcept { return neighbors_.size(); }
  const std::vector<std::size_t>& neighbors(std::size_t unit) const { return neighbors_.at(unit); }
  std::size_t n_neighbors(std::size_t unit) const { return neighbors_.at(unit).size(); }
  std::size_t n_edges() const;

  // Component label per unit; labels are 0..n_components-1 in order of the
  // smallest unit id of each component.
  const std::vector<std::size_t>& component_labels() const noexcept { return components_; }
  std::size_t n_components() const noexcept { return n_components_; }

  std::vector<std::size_t> isolated_units() const;

  // Relabels unit u as perm[u].
  AdjacencyGraph permuted(const std::vector<std::size_t>& perm) const;

  void write(std::ostream& out) const;

 private:
  void label_components();

  std::vector<std::vector<std::size_t>> neighbors_;
  std::vector<std::size_t> components_;
  std::size_t n_components_ = 0;
};

// Gamma(shape, rate) prior on a precision.
struct HyperPrior {
  double shape = 0.001;
  double rate = 0.001;

  void validate() const;
};

// tau * (D - W); throws IsolatedUnit if any unit has no neighbours.
SymmetricSparseMatrix icar_precision(const AdjacencyGraph& g, double tau);

// tau * D2^T D2 with D2 the (m-2) x m second-difference operator.
SymmetricSparseMatrix rw2_precision(std::size_t m, double tau);

SymmetricSparseMatrix iid_precision(std::size_t m, double tau);

SymmetricSparseMatrix fixed_effect_precision(std::size_t count, double prior_precision);

double log_gamma_density(double tau, const HyperPrior& hp);

// Prior density of theta = log(tau): gamma log-density plus the Jacobian log(tau).
double log_hyperprior_theta(double theta, const HyperPrior& hp);

// ((m - rank_deficiency)/2) log tau - (tau/2) f^T R f, additive constants dropped.
double intrinsic_log_density(const SymmetricSparseMatrix& structure, double tau,
                             const Eigen::VectorXd& f, std::size_t rank_deficiency);

// Proper N(0, tau^{-1} I) log-density.
double iid_log_density(double tau, const Eigen::VectorXd& f);

}  // namespace inla
