#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace ehcrn {

using Rng = std::mt19937_64;

/// Seed for an independent stream `stream` derived from `base` (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

double uniform01(Rng& rng);

/// Index drawn from a discrete distribution given by `probs` (need not be normalized).
std::size_t sample_categorical(std::span<const double> probs, Rng& rng);

std::size_t uniform_index(std::size_t n, Rng& rng);

}  // namespace ehcrn
