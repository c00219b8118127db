#pragma once

// Deterministic randomness for the whole library.
//
// The generator algorithm is part of the external interface: every draw is
// reproducible from a (seed, stream) pair alone, on any platform.
//
//   * Engine: std::mt19937_64 — the engine's output sequence is specified
//     exactly by the C++ standard.
//   * Keying: the engine is seeded from std::seed_seq over the four 32-bit
//     halves of (seed, stream); seed_seq's generate() is likewise fully
//     specified.
//   * Sub-streams: substream(s, id) mixes `id` into the stream word with
//     SplitMix64, so replicate r, null draw m, coordinate j, ... each get
//     statistically independent streams without coordination.
//   * Distributions are implemented here rather than taken from <random>
//     (the standard leaves distribution algorithms unspecified):
//       - uniform():  53-bit mantissa draws, u = (x >> 11) * 2^-53
//       - normal():   inverse-CDF transform of ((x >> 11) + 0.5) * 2^-53,
//         so draws are strictly inside (0, 1) before the quantile map
//       - integers:   bitmask rejection sampling (no modulo bias)
//       - shuffles:   Fisher-Yates with the integer sampler above.

#include "diet/math.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace diet {

/// Value-type key for a random stream.  Cheap to copy; constructing an Rng
/// from the same key always reproduces the same draw sequence.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

/// SplitMix64 finalizer; used for stream derivation.
std::uint64_t splitmix64(std::uint64_t x);

/// Derive a child stream: same seed, stream word mixed with `id`.
/// Distinct ids give distinct child streams (up to 64-bit collisions).
RngStream substream(RngStream parent, std::uint64_t id);

/// Instantiated generator for one stream.
class Rng {
 public:
  explicit Rng(RngStream key);

  RngStream key() const { return key_; }

  /// Next raw 64-bit engine word.
  std::uint64_t next_u64();

  /// Uniform draw in [0, 1) with 53-bit resolution.
  double uniform();

  /// Uniform draw in the open interval (0, 1).
  double uniform_open();

  /// Uniform draw in [lo, hi).
  double uniform(double lo, double hi);

  /// Uniform integer in {0, ..., n-1}; n must be positive.
  std::uint64_t uniform_int(std::uint64_t n);

  /// Standard normal draw via the inverse-CDF transform.
  double normal();

  /// Normal draw with mean and standard deviation (stdev >= 0).
  double normal(double mean, double stdev);

  /// Vector of iid standard normal draws.
  Vector normal_vector(Index n);

  /// Matrix of iid standard normal draws, filled row-major so that the draw
  /// order matches row-by-row data generation.
  Matrix normal_matrix(Index rows, Index cols);

  /// Exponential(1) draw via inversion.
  double exponential();

  /// Index k with probability weights[k] / sum(weights); weights must be
  /// non-negative with a positive sum.
  Index categorical(const Eigen::Ref<const Vector>& weights);

  /// Rademacher draw: +1 or -1 with equal probability.
  double rademacher();

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  /// Deterministic permutation of {0, ..., n-1}.
  std::vector<Index> permutation(Index n);

 private:
  RngStream key_;
  std::mt19937_64 engine_;
};

}  // namespace diet
