#pragma once

#include <cstdint>
#include <random>

namespace smswap {

using Rng = std::mt19937_64;

// Independent stream for path `index` under `seed`. Streams depend only on
// (seed, index), so results do not change with the number of workers.
Rng make_substream(std::uint64_t seed, std::uint64_t index);

// Uniform draw on the open interval (0, 1), 53-bit resolution.
double uniform_open(Rng& rng);

double standard_normal(Rng& rng);

}  // namespace smswap
