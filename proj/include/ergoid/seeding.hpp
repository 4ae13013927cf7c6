#pragma once

#include <cstdint>

namespace ergoid {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// seed_trial = mix64(mix64(mix64(master) ^ cell) ^ trial). Any (cell, trial)
/// pair can be reproduced without running the others.
std::uint64_t trial_seed(std::uint64_t master, std::uint64_t cell_index, std::uint64_t trial_index) noexcept;

/// Independent sub-stream of a seed (map draw, initial state, noise, ...).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

}  // namespace ergoid
