#pragma once

#include <cstdint>
#include <random>

namespace calitr {

using Rng = std::mt19937_64;

// Independent stream for (master seed, stream id). Used for replications,
// forest trees and GA restarts so results do not depend on thread count.
Rng make_rng(std::uint64_t master, std::uint64_t stream);

// Mixes a master seed and a stream id into a derived 64-bit seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace calitr
