#include "inla/priors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "inla/errors.hpp"

namespace inla {

namespace {

std::string join_units(const std::vector<std::size_t>& units) {
  std::string s;
  for (std::size_t k = 0; k < units.size(); ++k) {
    if (k > 0) s += ", ";
    if (k == 20) {
      s += "... (" + std::to_string(units.size()) + " total)";
      break;
    }
    s += std::to_string(units[k]);
  }
  return s;
}

}  // namespace

IsolatedUnit::IsolatedUnit(std::vector<std::size_t> units)
    : Error(ErrorKind::InputValidation,
            "intrinsic CAR prior undefined for units without neighbours: " + join_units(units)),
      units_(std::move(units)) {}

AdjacencyGraph AdjacencyGraph::from_neighbors(std::vector<std::vector<std::size_t>> neighbors) {
  const std::size_t n = neighbors.size();
  if (n == 0) throw DomainError("adjacency graph needs at least one unit");
  for (std::size_t i = 0; i < n; ++i) {
    auto& list = neighbors[i];
    std::sort(list.begin(), list.end());
    if (std::adjacent_find(list.begin(), list.end()) != list.end()) {
      throw DataError("adjacency", 0, "unit " + std::to_string(i) + " lists a neighbour twice");
    }
    for (std::size_t j : list) {
      if (j >= n) {
        throw DataError("adjacency", 0,
                        "unit " + std::to_string(i) + " references unknown unit " +
                            std::to_string(j));
      }
      if (j == i) throw DataError("adjacency", 0, "self-loop at unit " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : neighbors[i]) {
      if (!std::binary_search(neighbors[j].begin(), neighbors[j].end(), i)) {
        throw DataError("adjacency", 0,
                        "asymmetric adjacency: " + std::to_string(i) + " lists " +
                            std::to_string(j) + " but " + std::to_string(j) + " does not list " +
                            std::to_string(i));
      }
    }
  }
  AdjacencyGraph g;
  g.neighbors_ = std::move(neighbors);
  g.label_components();
  return g;
}

AdjacencyGraph AdjacencyGraph::read(std::istream& in, const std::string& source) {
  std::vector<std::vector<std::size_t>> lists;
  std::vector<bool> seen;
  std::string line;
  std::size_t line_no = 0;
  std::size_t max_referenced = 0;
  bool any_reference = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    long long id = -1;
    long long count = -1;
    if (!(ls >> id >> count) || id < 0 || count < 0) {
      throw DataError(source, line_no, "expected `unit_id n_neighbors id1 ... idk`");
    }
    std::vector<std::size_t> nbrs;
    long long nb = 0;
    while (ls >> nb) {
      if (nb < 0) throw DataError(source, line_no, "negative unit id");
      nbrs.push_back(static_cast<std::size_t>(nb));
      max_referenced = std::max(max_referenced, static_cast<std::size_t>(nb));
      any_reference = true;
    }
    if (!ls.eof()) throw DataError(source, line_no, "non-integer token");
    if (static_cast<long long>(nbrs.size()) != count) {
      throw DataError(source, line_no,
                      "declares " + std::to_string(count) + " neighbours but lists " +
                          std::to_string(nbrs.size()));
    }
    const auto uid = static_cast<std::size_t>(id);
    if (uid >= lists.size()) {
      lists.resize(uid + 1);
      seen.resize(uid + 1, false);
    }
    if (seen[uid]) throw DataError(source, line_no, "unit " + std::to_string(uid) + " repeated");
    seen[uid] = true;
    lists[uid] = std::move(nbrs);
  }
  if (lists.empty()) throw DataError(source, 0, "no units");
  for (std::size_t u = 0; u < seen.size(); ++u) {
    if (!seen[u]) throw DataError(source, 0, "unit ids not dense: missing unit " + std::to_string(u));
  }
  if (any_reference && max_referenced >= lists.size()) {
    throw DataError(source, 0, "unknown unit " + std::to_string(max_referenced) +
                                   " referenced as a neighbour");
  }
  try {
    return from_neighbors(std::move(lists));
  } catch (const DataError& e) {
    throw DataError(source, 0, std::string(e.what()).substr(std::string("adjacency: ").size()));
  }
}

AdjacencyGraph AdjacencyGraph::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open adjacency file " + path);
  return read(in, path);
}

AdjacencyGraph AdjacencyGraph::lattice(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw DomainError("lattice needs rows, cols >= 1");
  std::vector<std::vector<std::size_t>> nb(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t u = r * cols + c;
      if (r > 0) nb[u].push_back(u - cols);
      if (c > 0) nb[u].push_back(u - 1);
      if (c + 1 < cols) nb[u].push_back(u + 1);
      if (r + 1 < rows) nb[u].push_back(u + cols);
    }
  }
  return from_neighbors(std::move(nb));
}

std::size_t AdjacencyGraph::n_edges() const {
  std::size_t twice = 0;
  for (const auto& l : neighbors_) twice += l.size();
  return twice / 2;
}

std::vector<std::size_t> AdjacencyGraph::isolated_units() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < neighbors_.size(); ++i) {
    if (neighbors_[i].empty()) out.push_back(i);
  }
  return out;
}

void AdjacencyGraph::label_components() {
  const std::size_t n = neighbors_.size();
  constexpr std::size_t unset = static_cast<std::size_t>(-1);
  components_.assign(n, unset);
  n_components_ = 0;
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < n; ++s) {
    if (components_[s] != unset) continue;
    components_[s] = n_components_;
    stack.push_back(s);
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v : neighbors_[u]) {
        if (components_[v] == unset) {
          components_[v] = n_components_;
          stack.push_back(v);
        }
      }
    }
    ++n_components_;
  }
}

AdjacencyGraph AdjacencyGraph::permuted(const std::vector<std::size_t>& perm) const {
  if (perm.size() != n_units()) throw DimensionMismatch("permutation length");
  std::vector<std::vector<std::size_t>> nb(n_units());
  for (std::size_t u = 0; u < n_units(); ++u) {
    for (std::size_t v : neighbors_[u]) nb[perm[u]].push_back(perm[v]);
  }
  return from_neighbors(std::move(nb));
}

void AdjacencyGraph::write(std::ostream& out) const {
  for (std::size_t u = 0; u < neighbors_.size(); ++u) {
    out << u << ' ' << neighbors_[u].size();
    for (std::size_t v : neighbors_[u]) out << ' ' << v;
    out << '\n';
  }
}

void HyperPrior::validate() const {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw SpecError("gamma hyperprior needs shape > 0 and rate > 0");
  }
}

SymmetricSparseMatrix icar_precision(const AdjacencyGraph& g, double tau) {
  if (!(tau > 0.0)) throw DomainError("ICAR precision must be positive");
  if (auto iso = g.isolated_units(); !iso.empty()) throw IsolatedUnit(std::move(iso));
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < g.n_units(); ++i) {
    entries.push_back({i, i, tau * static_cast<double>(g.n_neighbors(i))});
    for (std::size_t j : g.neighbors(i)) {
      if (j > i) entries.push_back({i, j, -tau});
    }
  }
  return SymmetricSparseMatrix::build(g.n_units(), entries);
}

SymmetricSparseMatrix rw2_precision(std::size_t m, double tau) {
  if (m < 3) throw TooFewLevels("RW2 needs at least 3 levels, got " + std::to_string(m));
  if (!(tau > 0.0)) throw DomainError("RW2 precision must be positive");
  std::vector<Entry> entries;
  // each second difference f[k] - 2 f[k+1] + f[k+2] contributes d d^T
  const double d[3] = {1.0, -2.0, 1.0};
  for (std::size_t k = 0; k + 2 < m; ++k) {
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t b = a; b < 3; ++b) {
        entries.push_back({k + a, k + b, tau * d[a] * d[b]});
      }
    }
  }
  return SymmetricSparseMatrix::build(m, entries);
}

SymmetricSparseMatrix iid_precision(std::size_t m, double tau) {
  if (!(tau > 0.0)) throw DomainError("iid precision must be positive");
  return SymmetricSparseMatrix::identity(m, tau);
}

SymmetricSparseMatrix fixed_effect_precision(std::size_t count, double prior_precision) {
  if (count == 0) throw DomainError("fixed-effect block needs count >= 1");
  if (!(prior_precision > 0.0)) throw DomainError("fixed-effect prior precision must be positive");
  return SymmetricSparseMatrix::identity(count, prior_precision);
}

double log_gamma_density(double tau, const HyperPrior& hp) {
  if (!(tau > 0.0)) throw DomainError("gamma density needs tau > 0");
  return hp.shape * std::log(hp.rate) - std::lgamma(hp.shape) +
         (hp.shape - 1.0) * std::log(tau) - hp.rate * tau;
}

double log_hyperprior_theta(double theta, const HyperPrior& hp) {
  // a log b - log G(a) + a theta - b e^theta, written without forming log(e^theta)
  return hp.shape * std::log(hp.rate) - std::lgamma(hp.shape) + hp.shape * theta -
         hp.rate * std::exp(theta);
}

double intrinsic_log_density(const SymmetricSparseMatrix& structure, double tau,
                             const Eigen::VectorXd& f, std::size_t rank_deficiency) {
  if (static_cast<std::size_t>(f.size()) != structure.dim()) {
    throw DimensionMismatch("intrinsic density argument length");
  }
  if (!(tau > 0.0)) throw DomainError("intrinsic density needs tau > 0");
  const double m = static_cast<double>(structure.dim());
  return 0.5 * (m - static_cast<double>(rank_deficiency)) * std::log(tau) -
         0.5 * tau * structure.quadratic_form(f);
}

double iid_log_density(double tau, const Eigen::VectorXd& f) {
  if (!(tau > 0.0)) throw DomainError("iid density needs tau > 0");
  const double m = static_cast<double>(f.size());
  return 0.5 * m * std::log(tau / (2.0 * std::numbers::pi)) - 0.5 * tau * f.squaredNorm();
}

}  // namespace inla
