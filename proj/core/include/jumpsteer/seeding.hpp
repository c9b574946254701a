#pragma once

#include <boost/random/normal_distribution.hpp>

#include <cstdint>
#include <random>

namespace jumpsteer {

// SplitMix64 finalizer applied to base_seed + (index + 1) * golden gamma.
// Pure integer arithmetic, so streams are identical on every platform.
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t point_index);

// Portable random source: std::mt19937_64 (bit-exact by the standard) with
// a 53-bit uniform conversion and Boost's ziggurat normal sampler, both of
// which are defined by their source rather than by the standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return normal_(engine_); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace jumpsteer
