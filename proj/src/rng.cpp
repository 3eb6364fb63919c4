#include "emsa/rng.hpp"

#include "emsa/errors.hpp"

namespace emsa {

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

uint64_t derive_seed(uint64_t base, uint64_t stream) {
  return splitmix64(base + 0x9E3779B97F4A7C15ull * (stream + 1));
}

uint64_t Rng::below(uint64_t n) {
  if (n == 0) throw InternalError("Rng::below: empty range");
  // Largest multiple of n that fits in 64 bits; values at or above it are
  // rejected so the modulo is exact.
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t x;
  do {
    x = gen_();
  } while (x >= limit);
  return x % n;
}

size_t Rng::sample(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw InternalError("Rng::sample: negative weight");
    total += w;
  }
  if (!(total > 0.0)) throw InternalError("Rng::sample: weights sum to zero");
  const double u = uniform01() * total;
  double acc = 0.0;
  size_t last_positive = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0) last_positive = i;
    acc += weights[i];
    if (u < acc) return i;
  }
  // Floating-point shortfall at the right edge: fall back to the last
  // positive-weight entry.
  return last_positive;
}

}  // namespace emsa
