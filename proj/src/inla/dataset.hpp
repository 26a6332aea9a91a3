#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "inla/priors.hpp"

namespace inla {

// One row per observation: the unit it belongs to, the count y out of N, and
// any number of named covariates kept as their raw text.
struct Dataset {
  std::vector<std::size_t> unit;
  std::vector<std::int64_t> y;
  std::vector<std::int64_t> n;
  std::vector<std::string> covariate_names;
  std::map<std::string, std::vector<std::string>> covariates;
  std::optional<AdjacencyGraph> graph;
  std::size_t n_units = 0;

  std::size_t size() const noexcept { return y.size(); }
  bool has_covariate(const std::string& name) const { return covariates.count(name) > 0; }

  // Throws SpecError if the column is missing or any value is non-numeric.
  std::vector<double> numeric(const std::string& name) const;
  const std::vector<std::string>& labels(const std::string& name) const;

  // Checks row invariants and unit ids against the graph.
  void validate() const;
};

// CSV with header `unit_id,y,N,<covariate...>`. Unit ids are non-negative
// integers; with a graph they must lie in [0, n_units).
Dataset read_dataset_csv(std::istream& in, const std::string& source,
                         std::optional<AdjacencyGraph> graph = std::nullopt);

Dataset ingest(const std::string& data_path, const std::string& adjacency_path = "");

void write_dataset_csv(std::ostream& out, const Dataset& data);

}  // namespace inla
