#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace edgepipe {

using Engine = std::mt19937_64;

/// Independent random streams of one simulated run.
enum class Stream : std::uint64_t { Order = 1, Sampling = 2, Init = 3, Pilot = 4 };

/// Deterministic child seed from a master seed and a key path.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * (keys.size() + 1));
  auto push = [&](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(master);
  for (auto k : keys) push(k);
  std::seed_seq seq(words.begin(), words.end());
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

inline Engine make_stream(std::uint64_t seed, Stream stream) {
  return Engine(derive_seed(seed, {static_cast<std::uint64_t>(stream)}));
}

/// Per-run seeds for a multi-run experiment.
inline std::vector<std::uint64_t> run_seeds(std::uint64_t master, std::size_t runs) {
  std::vector<std::uint64_t> seeds(runs);
  for (std::size_t i = 0; i < runs; ++i) seeds[i] = derive_seed(master, {0x5eedULL, i});
  return seeds;
}

}  // namespace edgepipe
