#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace coeval {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view data);

std::string to_hex(std::span<const std::uint8_t> bytes);

// Lowercase-only hex decoding; uppercase digits are rejected so that every
// byte string has exactly one textual form.
Digest digest_from_hex(std::string_view hex);

}  // namespace coeval
