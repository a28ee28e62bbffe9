#pragma once

#include <cstdint>

namespace mcboost {

// Counter-based 64-bit generator in the SplitMix64 family: draw i of a stream
// with key k is mix(k + i*GAMMA), where mix is the SplitMix64 finalizer.
// Streams are split by re-keying through the same finalizer, so substreams
// (per replication, per tree, per purpose) are independent of draw order and
// of each other. Fully portable: no platform-dependent state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(seed) {}

  // Independent substream; the child's counter starts at zero.
  Rng split(std::uint64_t stream) const;

  std::uint64_t next_u64();

  // Uniform on the open interval (0,1); safe as inverse-CDF input.
  double next_unit();

  // Standard normal via the inverse CDF (bit-stable across platforms).
  double next_normal();

  // Uniform integer in [0,n), unbiased via rejection.
  std::uint64_t next_below(std::uint64_t n);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Convenience: the key a split(stream) child of Rng(base) would use.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

// Standard normal quantile (inverse CDF), rational approximation accurate to
// well below 1e-8 absolute error on (0,1). Throws ConfigError outside (0,1).
double normal_quantile(double p);

}  // namespace mcboost
