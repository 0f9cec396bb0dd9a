#pragma once

#include <cstdint>
#include <vector>

namespace hitlaw {

/// Dense symbol index in 0..size-1. User-facing labels live in Alphabet.
using Symbol = std::uint32_t;

using Vector = std::vector<double>;

}  // namespace hitlaw
