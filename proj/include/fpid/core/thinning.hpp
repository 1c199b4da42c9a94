#pragma once

#include "fpid/core/image.hpp"

namespace fpid::core {

inline constexpr std::uint8_t kRidge = 0;
inline constexpr std::uint8_t kBackground = 255;

/// Zhang-Suen thinning of a two-valued image (ridge = 0) until no change.
///
/// Each sub-iteration marks candidates in parallel with the Zhang-Suen
/// conditions, then deletes them in scan order only while each is still a
/// simple, non-end point, so 8-connectivity of every component is kept.
/// A final pass removes staircase corners, leaving no 2x2 ridge square.
GrayImage thin(const GrayImage& binary);

/// Crossing number 1/2 * sum |P_i - P_{i+1}| around the 8-neighbour cycle
/// with ridge = 1. Throws PreconditionError for pixels on the image border.
int crossing_number(const GrayImage& skel, int x, int y);

}  // namespace fpid::core
