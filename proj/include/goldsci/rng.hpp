#pragma once

#include <cstdint>

#include "goldsci/stats.hpp"

namespace goldsci {

// SplitMix64 keyed by (seed, stream). Every replication of a simulation owns
// the stream equal to its index, so the draws of replication i never depend
// on how replications are split across workers.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : state_(mix(mix(seed) + stream)) {}

  std::uint64_t next() {
    state_ += kGolden;
    return mix(state_);
  }

  // Uniform on [2^-53, 1 - 2^-53].
  double uniform() { return (static_cast<double>(next() >> 12) + 0.5) * 0x1.0p-52; }

  double normal() { return stats::std_normal_quantile(uniform()); }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace goldsci
