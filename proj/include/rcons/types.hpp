#pragma once

#include <cstdint>
#include <random>

namespace rcons {

// Agents are numbered 1..n; rounds start at 1.
using AgentId = int;
using Round = int;

using Rng = std::mt19937_64;

// Uniform integer in [0, bound). Rejection sampling keeps the output
// identical across standard library implementations.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  // 2^64 mod bound; accepting x >= threshold leaves a multiple of bound values.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t x = rng();
    if (x >= threshold) return x % bound;
  }
}

// Derives an independent generator for a sub-stream (agent, pattern, ...).
inline Rng derive_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

}  // namespace rcons
