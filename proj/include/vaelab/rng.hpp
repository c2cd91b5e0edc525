#pragma once

#include "vaelab/types.hpp"

#include <array>
#include <cstdint>

namespace vaelab {

// Seeded, stream-splittable generator used for everything random in the
// project: weight init, minibatch shuffles, reparametrization noise, tile
// placement. The algorithm is pinned so runs are reproducible:
//
//   state  : xoshiro256++ (Blackman/Vigna), 4x64-bit words
//   seeding: splitmix64 chain starting at seed ^ ((stream + 1) * 0x9E3779B97F4A7C15)
//   doubles: (next_u64() >> 11) * 2^-53, uniform in [0, 1)
//   normals: Box-Muller on two uniform draws, the second value of each
//            pair is cached and returned by the following call
//
// Distinct `stream` values give independent substreams of the same seed
// (init vs. training vs. dataset generation).
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 bits of precision.
  double next_double();

  double uniform(double lo, double hi);

  // Unbiased integer in [0, bound) via rejection sampling. bound > 0.
  std::uint64_t next_below(std::uint64_t bound);

  // Standard normal draw (Box-Muller, cached spare).
  double normal();

  // Fisher-Yates in-place shuffle.
  template <typename Seq>
  void shuffle(Seq& seq) {
    for (std::size_t i = seq.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(seq[i - 1], seq[j]);
    }
  }

 private:
  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// n independent standard normal draws; n == 0 gives an empty vector.
Vector standard_normal(Rng& rng, Index n);

}  // namespace vaelab
