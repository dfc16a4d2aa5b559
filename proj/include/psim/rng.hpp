#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace psim {

using Rng = std::mt19937_64;

// Uniform integer in [0, n) by rejection; portable across standard libraries,
// unlike std::uniform_int_distribution.
std::uint64_t uniform_below(Rng& rng, std::uint64_t n);

// SplitMix64 finalizer folded over the parts; used to derive per-persona and
// per-conversation seeds from the run seed.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts);

}  // namespace psim
