#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace twinet::link {

/// RFC 4648 standard alphabet with '=' padding.
std::string base64_encode(std::span<const std::uint8_t> data);

/// nullopt on any character outside the alphabet, bad padding or bad length.
std::optional<std::vector<std::uint8_t>> base64_decode(std::string_view text);

}  // namespace twinet::link
