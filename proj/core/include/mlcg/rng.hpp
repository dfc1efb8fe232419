#pragma once

#include <cstdint>
#include <random>

namespace mlcg {

// Seedable, splittable random stream. Every chain owns exactly one.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// standard. The distributions on top are implemented here rather than taken
// from <random>: the standard leaves uniform_real_distribution and
// uniform_int_distribution implementation-defined, which would break
// cross-platform reproducibility of the observable streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  // Independent child stream derived from (seed, stream, id).
  Rng split(std::uint64_t id) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  std::uint64_t stream_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace mlcg
