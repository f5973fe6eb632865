#include "aircomp/rng.hpp"

#include <cmath>
#include <numbers>

namespace aircomp {

std::uint64_t Rng::splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

cd Rng::complex_normal(double variance) {
  // |z|^2 ~ Exp(variance), phase uniform: re/im each N(0, variance/2).
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-variance * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(t), r * std::sin(t)};
}

double Rng::normal() {
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::phase() { return 2.0 * std::numbers::pi * uniform(); }

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = Rng::splitmix64(base ^ 0x6A09E667F3BCC909ULL);
  h = Rng::splitmix64(h ^ (a + 0x3C6EF372FE94F82BULL));
  h = Rng::splitmix64(h ^ (b + 0xA54FF53A5F1D36F1ULL));
  return h;
}

}  // namespace aircomp
