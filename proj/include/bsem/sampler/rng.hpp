#pragma once

// One master seed, many independent streams. Each stream is an mt19937_64
// seeded through splitmix64 from (master, purpose, index), so chains, folds
// and replicates never share state and results do not depend on thread
// scheduling.

#include <array>
#include <cstdint>
#include <random>

namespace bsem {

using Rng = std::mt19937_64;

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Stream purposes, so that e.g. chain 0 and fold 0 get different streams.
enum class StreamKind : std::uint64_t { chain = 1, fold = 2, replicate = 3, simulate = 4, predictive = 5, init = 6 };

[[nodiscard]] inline Rng make_stream(std::uint64_t master, StreamKind kind, std::uint64_t index = 0,
                                     std::uint64_t sub = 0) {
  std::uint64_t s = master;
  s ^= splitmix64(s) + static_cast<std::uint64_t>(kind) * 0xD1B54A32D192ED03ULL;
  s ^= splitmix64(s) + index * 0xABC98388FB8FAC03ULL;
  s ^= splitmix64(s) + sub * 0x8CB92BA72F3D8DD7ULL;
  std::array<std::uint32_t, 8> words{};
  for (std::size_t i = 0; i < words.size(); i += 2) {
    const std::uint64_t v = splitmix64(s);
    words[i] = static_cast<std::uint32_t>(v);
    words[i + 1] = static_cast<std::uint32_t>(v >> 32);
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

/// Derives a child seed (for handing a sub-task its own master seed).
[[nodiscard]] inline std::uint64_t derive_seed(std::uint64_t master, StreamKind kind, std::uint64_t index) {
  std::uint64_t s = master ^ (static_cast<std::uint64_t>(kind) << 56) ^ (index * 0x9E3779B97F4A7C15ULL);
  (void)splitmix64(s);
  return splitmix64(s);
}

}  // namespace bsem
