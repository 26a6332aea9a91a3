#pragma once

// Random draws built directly on the 64-bit Mersenne twister so that seeded
// streams are identical across standard libraries (the std distributions are
// implementation-defined).

#include <cmath>
#include <cstdint>
#include <random>

namespace inla {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // 53 random bits in [0, 1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform_open() {
    double u = 0.0;
    while (u == 0.0) u = uniform();
    return u;
  }

  // Box-Muller, second value kept for the next call
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // sum of Bernoulli draws; fine for the population sizes simulated here
  std::int64_t binomial(std::int64_t n, double p) {
    std::int64_t k = 0;
    for (std::int64_t i = 0; i < n; ++i) k += uniform() < p ? 1 : 0;
    return k;
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace inla
