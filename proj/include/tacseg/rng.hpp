#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tacseg {

using Rng = std::mt19937_64;

/// Derives an independent sub-stream seed from a base seed and a tag, so all
/// randomness in a run flows from one user seed (init/dropout/shuffle/noise).
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0);

}  // namespace tacseg
