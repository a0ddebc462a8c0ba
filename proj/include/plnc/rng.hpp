#pragma once

#include <cstdint>
#include <random>

namespace plnc {

using Rng = std::mt19937_64;

/// Stream roles keep independent draws for the same (frame, slot) apart.
enum class StreamRole : std::uint64_t {
  kTraffic = 1,
  kGains = 2,
  kMessages = 3,
  kNoise = 4,
  kDataset = 5,
  kTraining = 6,
};

/// Counter-based seed derivation: a SplitMix64 cascade over the master seed
/// and the stream coordinates. Equal inputs give equal streams; changing any
/// coordinate gives a statistically unrelated stream.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b, std::uint64_t role);

inline Rng derive_seed(std::uint64_t master, std::uint64_t frame, std::uint64_t slot, StreamRole role) {
  return Rng(mix_seed(master, frame, slot, static_cast<std::uint64_t>(role)));
}

}  // namespace plnc
