#pragma once

#include <cstdint>
#include <random>

namespace hais {

/// Which part of the algorithm a random substream feeds.
enum class StreamRole : std::uint64_t {
  kInit = 1,
  kSampling = 2,
  kHmc = 3,
  kResample = 4,
  kRun = 5,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of the substream keyed by (master, role, index, iteration).
///
/// Every chain, proposal and resampling step draws from its own substream so
/// results do not depend on how work is scheduled across threads.
constexpr std::uint64_t substream_seed(std::uint64_t master, StreamRole role,
                                       std::uint64_t index,
                                       std::uint64_t iteration = 0) {
  std::uint64_t h = mix64(master);
  h = mix64(h ^ static_cast<std::uint64_t>(role));
  h = mix64(h ^ index);
  h = mix64(h ^ iteration);
  return h;
}

/// A seeded random stream with the two draws the samplers need.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  RngStream(std::uint64_t master, StreamRole role, std::uint64_t index,
            std::uint64_t iteration = 0)
      : engine_(substream_seed(master, role, index, iteration)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double normal() { return normal_(engine_); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace hais
