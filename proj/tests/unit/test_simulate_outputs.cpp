#include <doctest.h>

#include <set>
#include <sstream>

#include "inla/errors.hpp"
#include "inla/outputs.hpp"
#include "inla/run.hpp"
#include "inla/simulate.hpp"
#include "support.hpp"

using namespace inla;

namespace {

std::string dataset_text(const Dataset& d) {
  std::ostringstream s;
  write_dataset_csv(s, d);
  return s.str();
}

std::string graph_text(const AdjacencyGraph& g) {
  std::ostringstream s;
  g.write(s);
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

// data.csv + region.adj of a fixture in a fresh directory
std::filesystem::path write_fixture(const std::string& name, const SimulatedData& sim) {
  const auto dir = support::scratch_dir(name);
  support::write_file(dir / "data.csv", dataset_text(sim.data));
  support::write_file(dir / "region.adj", graph_text(sim.graph));
  return dir;
}

}  // namespace

TEST_CASE("seeded simulation is reproducible") {
  const auto a = simulate_fixture(lattice_options(10, 1));
  const auto b = simulate_fixture(lattice_options(10, 1));
  CHECK(dataset_text(a.data) == dataset_text(b.data));
  CHECK(a.truth.eta == b.truth.eta);
  CHECK(a.data.size() == 10);
  CHECK(dataset_text(simulate_fixture(lattice_options(10, 2)).data) != dataset_text(a.data));
  const auto region = simulate_fixture(region_like_options(42));
  CHECK(region.data.n_units == 377);
  std::set<std::string> zones(region.data.labels("zone").begin(), region.data.labels("zone").end());
  CHECK(zones.size() == 7);
}

TEST_CASE("zero effects: observed rates concentrate at expit(mu)") {
  const std::size_t n = 400;
  const std::vector<double> eta(n, -1.0);
  const std::vector<std::int64_t> pop(n, 1000);
  const auto y = simulate_counts(eta, pop, 7);
  const double p = expit(-1.0);
  double total = 0;
  for (auto v : y) total += static_cast<double>(v);
  const double rate = total / (1000.0 * static_cast<double>(n));
  CHECK(std::abs(rate - p) < 3 * std::sqrt(p * (1 - p) / (1000.0 * static_cast<double>(n))));
  for (auto v : y) CHECK(std::abs(static_cast<double>(v) / 1000.0 - p) < 5 * std::sqrt(p * (1 - p) / 1000.0));
}

TEST_CASE("round trip of data and adjacency files") {
  const auto sim = simulate_fixture(lattice_options(12, 4));
  const auto dir = write_fixture("roundtrip", sim);
  const Dataset d = ingest((dir / "data.csv").string(), (dir / "region.adj").string());
  CHECK(dataset_text(d) == dataset_text(sim.data));
  CHECK(d.graph->n_units() == 12);
}

TEST_CASE("fit outputs: headers, precision, determinism, replay") {
  const auto sim = simulate_fixture(lattice_options(12, 8));
  const auto dir = write_fixture("fitout", sim);
  RunRecord rec;
  rec.data_path = (dir / "data.csv").string();
  rec.adjacency_path = (dir / "region.adj").string();
  rec.preset = "convolution";
  const FitRun a = run_fit(rec);
  for (const char* name : {"latent_marginals.csv", "hyper_marginals.csv", "effects_exp.csv", "unit_summaries.csv",
                           "dic.csv", "provenance.json"}) {
    REQUIRE(a.files.count(name) == 1);
    CHECK(a.files.at(name).find('\r') == std::string::npos);
  }
  const auto dic = lines(a.files.at("dic.csv"));
  REQUIRE(dic.size() == 2);
  CHECK(dic[0] == "Model,p_D,DIC");
  CHECK(lines(a.files.at("unit_summaries.csv")).size() == 13);
  // two hyperparameters, each on two scales
  CHECK(lines(a.files.at("hyper_marginals.csv")).size() == 5);
  CHECK(fmt17(0.1) == "0.10000000000000001");

  const FitRun b = run_fit(rec);
  CHECK(a.files == b.files);
  CHECK(run_replay(a.files.at("provenance.json")) == a.files);

  // tampered input is refused on replay
  support::write_file(dir / "data.csv", dataset_text(sim.data) + "0,1,5,1,1,1,1,1\n");
  CHECK_THROWS_AS(run_replay(a.files.at("provenance.json")), DataError);
}

TEST_CASE("comparison table") {
  const auto sim = simulate_fixture(lattice_options(20, 11));
  Dataset no_time = sim.data;
  no_time.covariates.erase("access_time");
  no_time.covariate_names.erase(std::find(no_time.covariate_names.begin(), no_time.covariate_names.end(), "access_time"));
  const auto dir = support::scratch_dir("compare");
  support::write_file(dir / "data.csv", dataset_text(no_time));
  support::write_file(dir / "region.adj", graph_text(sim.graph));
  RunRecord rec;
  rec.command = "compare";
  rec.data_path = (dir / "data.csv").string();
  rec.adjacency_path = (dir / "region.adj").string();
  rec.presets = {"icar-only", "icar-time", "icar-only", "icar-zone"};
  const CompareRun r = run_compare(rec);
  const auto rows = lines(r.files.at("dic_table.csv"));
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "Model,p_D,DIC,preset,best,warning");
  CHECK(rows[1].find(",yes,") != std::string::npos);
  CHECK(rows[4].find("icar-time") != std::string::npos);
  CHECK(rows[4].find("access_time") != std::string::npos);
  // identical presets give identical rows
  std::vector<std::string> only;
  for (const auto& l : rows)
    if (l.find(",icar-only,") != std::string::npos) only.push_back(l.substr(0, l.find(",icar-only,")));
  REQUIRE(only.size() == 2);
  CHECK(only[0] == only[1]);
  const auto zones = lines(r.files.at("zone_table.csv"));
  CHECK(zones[0] == "zone,posterior_mean,ci_q025,ci_q975,note");
  bool reference = false;
  for (const auto& l : zones) reference |= l == "7,,,,Reference zone";
  CHECK(reference);
  CHECK(run_replay(r.files.at("provenance.json")) == r.files);
}
