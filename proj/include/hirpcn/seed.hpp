#pragma once

#include <cstdint>
#include <string_view>

namespace hirpcn {

// Derives an independent sub-seed from a run seed and a fixed label, so every
// consumer of randomness gets its own stream from the one --seed flag.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept;

}  // namespace hirpcn
