#pragma once

#include <cstdint>
#include <random>

namespace kc {

// Portable seeded generator. The raw stream is std::mt19937_64, whose output
// sequence is fixed by the C++ standard; every derived draw below is computed
// here instead of through <random> distributions (whose algorithms are
// implementation-defined), so samples are reproducible across toolchains.
//
//   uniform_index(n): rejection sampling on the top bits. Let
//     limit = 2^64 - (2^64 mod n); draw x until x < limit; return x mod n.
//   uniform01():      (x >> 11) * 2^-53, in [0, 1).
//   normal():         Box-Muller on two uniform01 draws, cosine branch only
//                     (one normal per two raw draws, no caching).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  std::uint64_t uniform_index(std::uint64_t n);
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
};

// Derives an independent stream seed from a base seed and a stage tag so that
// stages seeded from one user seed do not share streams.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag);

}  // namespace kc
