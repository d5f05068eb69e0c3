#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tw::base64 {

std::string encode(const std::vector<std::uint8_t>& bytes);
/// Throws tw::Error(BadFormat) on characters outside the alphabet.
std::vector<std::uint8_t> decode(std::string_view text);

}  // namespace tw::base64
