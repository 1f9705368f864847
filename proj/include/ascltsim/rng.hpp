#ifndef ASCLTSIM_RNG_HPP
#define ASCLTSIM_RNG_HPP

#include <cstdint>

#include "ascltsim/normal.hpp"

namespace ascltsim {

// splitmix64 finalizer (Steele/Lea/Flood). Stable across platforms; the
// exact constants are part of the reproducibility contract.
inline std::uint64_t splitmix64_mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Per-replication seed: master ^ splitmix64(rep_index). Documented in the
// README so single replications can be reproduced externally.
inline std::uint64_t derive_rep_seed(std::uint64_t master, std::uint64_t rep_index) {
  return master ^ splitmix64_mix(rep_index);
}

// Deterministic stream of uniforms/normals seeded by a 64-bit value.
// Normals come from the inverse cdf, so the draw sequence depends only on
// the seed, never on platform library internals.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on (0,1), never returning the endpoints.
  double next_uniform() {
    const std::uint64_t bits = next_u64() >> 11;  // 53 bits
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  double next_normal() { return std_normal_quantile(next_uniform()); }

 private:
  std::uint64_t state_;
};

}  // namespace ascltsim

#endif
