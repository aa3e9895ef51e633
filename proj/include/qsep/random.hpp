#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace qsep {

/// Counter-based random stream: output k is a SplitMix64 finalization of
/// (key + k * golden ratio). Substreams are keyed by hashing a path of
/// integers onto the master seed, so any sample's randomness depends only on
/// its own coordinates, never on the order in which samples are generated.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t key = 0) : key_(key) {}

  /// Substream for (seed, path...). Distinct paths give unrelated streams.
  static Stream derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace qsep
