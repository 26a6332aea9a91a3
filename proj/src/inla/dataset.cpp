#include "inla/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "inla/errors.hpp"

namespace inla {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ls(line);
  while (std::getline(ls, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_int(const std::string& s, std::int64_t& out) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

std::vector<double> Dataset::numeric(const std::string& name) const {
  const auto& raw = labels(name);
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!parse_double(raw[i], out[i])) {
      throw SpecError("covariate '" + name + "' has non-numeric value '" + raw[i] +
                      "' at row " + std::to_string(i + 1));
    }
  }
  return out;
}

const std::vector<std::string>& Dataset::labels(const std::string& name) const {
  auto it = covariates.find(name);
  if (it == covariates.end()) throw SpecError("unknown covariate '" + name + "'");
  return it->second;
}

void Dataset::validate() const {
  if (unit.size() != y.size() || n.size() != y.size()) {
    throw DimensionMismatch("dataset column lengths differ");
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (n[i] < 1) throw DataError("dataset", i + 1, "N must be >= 1");
    if (y[i] < 0 || y[i] > n[i]) throw DataError("dataset", i + 1, "y must lie in [0, N]");
    if (unit[i] >= n_units) throw DataError("dataset", i + 1, "unit id outside graph");
  }
  for (const auto& [name, col] : covariates) {
    if (col.size() != y.size()) throw DimensionMismatch("covariate column " + name);
  }
  if (graph && graph->n_units() != n_units) throw DimensionMismatch("graph size vs n_units");
}

Dataset read_dataset_csv(std::istream& in, const std::string& source,
                         std::optional<AdjacencyGraph> graph) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_csv(line);
      break;
    }
  }
  if (header.size() < 3 || header[0] != "unit_id" || header[1] != "y" || header[2] != "N") {
    throw DataError(source, line_no, "header must start with unit_id,y,N");
  }
  Dataset d;
  for (std::size_t c = 3; c < header.size(); ++c) {
    if (header[c].empty()) throw DataError(source, line_no, "empty covariate name");
    if (d.covariates.count(header[c])) {
      throw DataError(source, line_no, "duplicate column '" + header[c] + "'");
    }
    d.covariate_names.push_back(header[c]);
    d.covariates[header[c]];
  }
  std::size_t max_unit = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw DataError(source, line_no,
                      "expected " + std::to_string(header.size()) + " fields, got " +
                          std::to_string(fields.size()));
    }
    std::int64_t uid = 0;
    std::int64_t y = 0;
    std::int64_t n = 0;
    if (!parse_int(fields[0], uid) || uid < 0) {
      throw DataError(source, line_no, "unit_id must be a non-negative integer");
    }
    if (!parse_int(fields[1], y)) throw DataError(source, line_no, "y must be an integer");
    if (!parse_int(fields[2], n)) throw DataError(source, line_no, "N must be an integer");
    if (n < 1) throw DataError(source, line_no, "N must be >= 1 (got " + fields[2] + ")");
    if (y < 0 || y > n) {
      throw DataError(source, line_no, "y = " + fields[1] + " outside [0, N = " + fields[2] + "]");
    }
    if (graph && static_cast<std::size_t>(uid) >= graph->n_units()) {
      throw DataError(source, line_no,
                      "unit " + fields[0] + " not in adjacency graph of " +
                          std::to_string(graph->n_units()) + " units");
    }
    d.unit.push_back(static_cast<std::size_t>(uid));
    d.y.push_back(y);
    d.n.push_back(n);
    max_unit = std::max(max_unit, static_cast<std::size_t>(uid));
    for (std::size_t c = 3; c < header.size(); ++c) d.covariates[header[c]].push_back(fields[c]);
  }
  if (d.y.empty()) throw DataError(source, 0, "no data rows");
  d.n_units = graph ? graph->n_units() : max_unit + 1;
  d.graph = std::move(graph);
  return d;
}

Dataset ingest(const std::string& data_path, const std::string& adjacency_path) {
  std::optional<AdjacencyGraph> graph;
  if (!adjacency_path.empty()) graph = AdjacencyGraph::load(adjacency_path);
  std::ifstream in(data_path);
  if (!in) throw Error(ErrorKind::Io, "cannot open data file " + data_path);
  return read_dataset_csv(in, data_path, std::move(graph));
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  out << "unit_id,y,N";
  for (const auto& name : data.covariate_names) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.unit[i] << ',' << data.y[i] << ',' << data.n[i];
    for (const auto& name : data.covariate_names) out << ',' << data.covariates.at(name)[i];
    out << '\n';
  }
}

}  // namespace inla
