#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dpage {

std::string base64_encode(std::span<const std::uint8_t> bytes);
// Throws Error(parse) on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string sha256_hex(std::string_view data);

// Cryptographically random bytes rendered as lowercase hex.
std::string random_hex(std::size_t byte_count);
std::string random_uuid();

}  // namespace dpage
