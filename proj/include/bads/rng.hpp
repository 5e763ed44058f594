#pragma once

#include <cstdint>

#include "bads/matrix.hpp"

namespace bads {

/// Counter-based generator: draw k of stream s under seed is a pure function
/// of (seed, s, k). Substreams give the data, init, shuffle and noise draws
/// independent sequences from one experiment seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

  // Independent child stream. Children of different ids never share draws.
  Rng substream(std::uint64_t id) const;

  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Named substream ids used across the project.
namespace streams {
inline constexpr std::uint64_t kData = 1;
inline constexpr std::uint64_t kInit = 2;
inline constexpr std::uint64_t kTrainShuffle = 3;
inline constexpr std::uint64_t kMetaShuffle = 4;
inline constexpr std::uint64_t kThetaNoise = 5;
inline constexpr std::uint64_t kWeightNoise = 6;
inline constexpr std::uint64_t kSubset = 7;
}  // namespace streams

/// i.i.d. standard normal entries.
Matrix gaussian_noise(Rng& rng, std::size_t rows, std::size_t cols);

}  // namespace bads
