#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fpid::util {

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws std::invalid_argument on characters outside the standard alphabet.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace fpid::util
