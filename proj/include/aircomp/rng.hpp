#pragma once

#include <cstdint>
#include <random>

#include "aircomp/linalg.hpp"

namespace aircomp {

// Pseudo-random source used everywhere in the library.
//
// Engine: std::mt19937_64 (output sequence fixed by the C++ standard).
// Uniforms take the top 53 bits of one engine draw. Complex Gaussians use the
// polar Box-Muller map, so no implementation-defined std:: distribution is
// involved. Substreams come from derive_seed(); a trial's numbers depend only on
// its own seed, never on scheduling.
//
// Scheme version: "mt64-sm64-v1".
class Rng {
 public:
  static constexpr const char* kScheme = "mt64-sm64-v1";

  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  // Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Circularly-symmetric CN(0, variance).
  cd complex_normal(double variance);

  // Standard real normal.
  double normal();

  // Uniform phase on [0, 2*pi).
  double phase();

  static std::uint64_t splitmix64(std::uint64_t x);

 private:
  std::mt19937_64 engine_;
};

// Child seed for (base, a, b); distinct tuples give unrelated streams.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace aircomp
