#include "inla/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <Eigen/Eigenvalues>

#include "inla/errors.hpp"
#include "inla/likelihood.hpp"
#include "inla/rng.hpp"

namespace inla {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Site {
  double r;
  double c;
};

double km(const Site& a, const Site& b, double cell) {
  return cell * std::hypot(a.r - b.r, a.c - b.c);
}

BinRule time_bin_rule() {
  for (const Term& t : ModelSpec::preset("icar-time").terms) {
    if (t.kind == TermKind::SmoothRW2) return t.bin;
  }
  throw Error(ErrorKind::Internal, "icar-time preset has no smooth term");
}

}  // namespace

SimulationOptions region_like_options(std::uint64_t seed) {
  SimulationOptions o;
  o.seed = seed;
  o.rows = 13;
  o.cols = 29;
  return o;
}

SimulationOptions lattice_options(std::size_t units, std::uint64_t seed) {
  if (units < 3) throw DomainError("a simulated lattice needs at least 3 units");
  SimulationOptions o;
  o.seed = seed;
  std::size_t rows = 1;
  for (std::size_t r = 1; r * r <= units; ++r) {
    if (units % r == 0) rows = r;
  }
  o.rows = rows;
  o.cols = units / rows;
  return o;
}

std::vector<std::int64_t> simulate_counts(const std::vector<double>& eta, const std::vector<std::int64_t>& n,
                                          std::uint64_t seed) {
  if (eta.size() != n.size()) throw DimensionMismatch("eta and N");
  Rng rng(seed);
  std::vector<std::int64_t> y(eta.size());
  for (std::size_t i = 0; i < eta.size(); ++i) {
    if (n[i] < 0) throw DomainError("negative population");
    y[i] = rng.binomial(n[i], expit(eta[i]));
  }
  return y;
}

SimulatedData simulate_fixture(const SimulationOptions& o) {
  SimulatedData sim;
  sim.options = o;
  sim.graph = AdjacencyGraph::lattice(o.rows, o.cols);
  const std::size_t units = o.rows * o.cols;
  if (!sim.graph.isolated_units().empty()) throw DomainError("simulated lattice has isolated units");
  Rng rng(o.seed);

  // ICAR draw: sum over the non-null eigenvectors of D - W
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(units), static_cast<Eigen::Index>(units));
  for (std::size_t u = 0; u < units; ++u) {
    r(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(u)) = static_cast<double>(sim.graph.n_neighbors(u));
    for (std::size_t v : sim.graph.neighbors(u)) r(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) = -1.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(units));
  for (Eigen::Index k = 0; k < eig.eigenvalues().size(); ++k) {
    const double z = rng.normal();
    const double lam = eig.eigenvalues()[k];
    if (lam <= 1e-9) continue;
    s += z / std::sqrt(o.icar_precision * lam) * eig.eigenvectors().col(k);
  }
  s.array() -= s.mean();  // one component: remove rounding residue

  // geography
  const double rows = static_cast<double>(o.rows - 1);
  const double cols = static_cast<double>(o.cols - 1);
  const Site provider1{std::round(0.5 * rows), std::round(0.33 * cols)};
  const Site provider2{std::round(0.25 * rows), std::round(0.75 * cols)};
  // zone 7 is centred on the main provider
  const std::vector<Site> centres = {
      {0.2 * rows, 0.12 * cols}, {0.85 * rows, 0.12 * cols}, {0.15 * rows, 0.55 * cols},
      {0.85 * rows, 0.55 * cols}, {0.3 * rows, 0.9 * cols},  {0.85 * rows, 0.9 * cols},
      provider1,
  };

  std::vector<double> dist(units), time(units), dist2(units), dens(units);
  std::vector<std::string> zone(units);
  std::vector<std::int64_t> pop(units);
  for (std::size_t u = 0; u < units; ++u) {
    const Site here{static_cast<double>(u / o.cols), static_cast<double>(u % o.cols)};
    dist[u] = std::round((km(here, provider1, o.cell_km) + 0.5) * 1000.0) / 1000.0;
    dist2[u] = std::round((km(here, provider2, o.cell_km) + 0.5) * 1000.0) / 1000.0;
    time[u] = std::round((1.2 * dist[u] + 3.0 + std::abs(o.time_noise_sd * rng.normal())) * 10.0) / 10.0;
    dens[u] = std::round(std::exp(std::log(3.0) + 0.4 * rng.normal()) * 1000.0) / 1000.0;
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t z = 0; z < centres.size(); ++z) {
      const double d = std::hypot(here.r - centres[z].r, here.c - centres[z].c);
      if (d < best_d - 1e-12) {
        best_d = d;
        best = z;
      }
    }
    zone[u] = std::to_string(best + 1);
    const double lp = o.population_log_median + o.population_log_sd * rng.normal();
    pop[u] = std::clamp(static_cast<std::int64_t>(std::llround(std::exp(lp))), o.population_min, o.population_max);
  }

  // access-time effect on the same bins the smooth term uses, centred over levels
  const BinnedCovariate bins = bin_covariate(time, time_bin_rule());
  std::vector<double> f(bins.levels());
  double fm = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    f[k] = -o.time_amplitude * (1.0 - std::exp(-bins.level_values[k] / o.time_scale));
    fm += f[k];
  }
  fm /= static_cast<double>(f.size());
  for (double& v : f) v -= fm;

  SimulationTruth& t = sim.truth;
  t.intercept = o.intercept;
  t.spatial.assign(s.data(), s.data() + s.size());
  t.time_effect = f;
  t.time_level_of_unit = bins.level_of_row;
  t.time_level_values = bins.level_values;
  t.eta.resize(units);
  for (std::size_t u = 0; u < units; ++u) t.eta[u] = o.intercept + t.spatial[u] + f[bins.level_of_row[u]];

  const std::vector<std::int64_t> y = simulate_counts(t.eta, pop, rng.raw());

  Dataset& d = sim.data;
  d.n_units = units;
  d.graph = sim.graph;
  d.covariate_names = {"distance", "access_time", "distance2", "zone", "density"};
  for (const auto& name : d.covariate_names) d.covariates[name].resize(units);
  for (std::size_t u = 0; u < units; ++u) {
    d.unit.push_back(u);
    d.y.push_back(y[u]);
    d.n.push_back(pop[u]);
    d.covariates["distance"][u] = fmt("%.3f", dist[u]);
    d.covariates["access_time"][u] = fmt("%.1f", time[u]);
    d.covariates["distance2"][u] = fmt("%.3f", dist2[u]);
    d.covariates["zone"][u] = zone[u];
    d.covariates["density"][u] = fmt("%.3f", dens[u]);
  }
  d.validate();
  return sim;
}

void write_truth_csv(std::ostream& out, const SimulatedData& sim) {
  const SimulationTruth& t = sim.truth;
  out << "unit_id,N,y,eta,intercept,spatial,time_level,time_effect\n";
  for (std::size_t u = 0; u < t.eta.size(); ++u) {
    const std::size_t lvl = t.time_level_of_unit[u];
    out << u << ',' << sim.data.n[u] << ',' << sim.data.y[u] << ',' << fmt("%.17g", t.eta[u]) << ','
        << fmt("%.17g", t.intercept) << ',' << fmt("%.17g", t.spatial[u]) << ','
        << fmt("%.6g", t.time_level_values[lvl]) << ',' << fmt("%.17g", t.time_effect[lvl]) << '\n';
  }
}

}  // namespace inla
