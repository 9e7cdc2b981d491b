#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace snnkit {

// One global seed fans out to named sub-streams (data, init, shuffle,
// fisher-mc, attack-noise, ...) so that fixing the global seed reproduces
// every artifact. Derivation: splitmix64(global ^ fnv1a64(role)), applied
// once more per index for per-epoch/per-cell streams.
uint64_t splitmix64(uint64_t x);
uint64_t fnv1a64(std::string_view s);
uint64_t derive_seed(uint64_t global_seed, std::string_view role);
uint64_t derive_seed(uint64_t global_seed, std::string_view role, uint64_t index);

inline std::mt19937_64 make_rng(uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace snnkit
