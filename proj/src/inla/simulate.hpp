#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <vector>

#include "inla/dataset.hpp"
#include "inla/model.hpp"
#include "inla/priors.hpp"

namespace inla {

// Synthetic region on a rook lattice: two providers, seven proximity zones,
// and counts drawn from an ICAR field plus a smooth effect of access time.
struct SimulationOptions {
  std::uint64_t seed = 0;
  std::size_t rows = 13;
  std::size_t cols = 29;
  double cell_km = 2.5;
  double intercept = -3.0;
  double icar_precision = 4.0;
  double time_amplitude = 1.0;  // total drop of the access-time effect
  double time_scale = 15.0;     // minutes
  double time_noise_sd = 5.0;   // minutes of access time not explained by distance
  double population_log_median = 6.685;  // about 800
  double population_log_sd = 0.8;
  std::int64_t population_min = 50;
  std::int64_t population_max = 20000;
};

// 13 x 29 lattice, 377 units.
SimulationOptions region_like_options(std::uint64_t seed);
// Most nearly square rows x cols lattice with rows * cols = units.
SimulationOptions lattice_options(std::size_t units, std::uint64_t seed);

struct SimulationTruth {
  double intercept = 0.0;
  std::vector<double> spatial;       // per unit
  std::vector<double> time_effect;   // per level, centred
  std::vector<std::size_t> time_level_of_unit;
  std::vector<double> time_level_values;
  std::vector<double> eta;           // per unit
};

struct SimulatedData {
  SimulationOptions options;
  AdjacencyGraph graph;
  Dataset data;
  SimulationTruth truth;
};

SimulatedData simulate_fixture(const SimulationOptions& options);

// y_i ~ Binomial(N_i, expit(eta_i)) from a seeded stream.
std::vector<std::int64_t> simulate_counts(const std::vector<double>& eta, const std::vector<std::int64_t>& n,
                                          std::uint64_t seed);

// unit_id,N,y,eta,intercept,spatial,time_level,time_effect
void write_truth_csv(std::ostream& out, const SimulatedData& sim);

}  // namespace inla
