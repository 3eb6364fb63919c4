#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace emsa {

// SplitMix64 mixing step (Steele, Lea & Flood). Used to derive independent
// child seeds from a base seed.
uint64_t splitmix64(uint64_t x);

// Seed for the stream-th child generator of a base seed. Streams derived
// from the same base never share state with each other or with the base.
uint64_t derive_seed(uint64_t base, uint64_t stream);

// Deterministic random source. The generator is std::mt19937_64, whose
// output sequence is pinned by the C++ standard, and all derived draws
// (bounded integers via rejection sampling, unit doubles from the top 53
// bits) are defined here rather than delegated to the standard library's
// unspecified distributions. Draw sequences are therefore reproducible
// across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform double in [0, 1), 53 bits of precision.
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Unbiased via rejection sampling.
  uint64_t below(uint64_t n);

  // Index sampled from an unnormalized weight vector by inverse CDF over a
  // single uniform01() draw. Weights must be nonnegative with positive sum.
  size_t sample(std::span<const double> weights);

  // Child generator with an independent stream, usable while *this lives on.
  Rng split(uint64_t stream) { return Rng(splitmix64(gen_() + stream)); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace emsa
