#include "core/encoding.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <array>

#include "core/errors.hpp"

namespace dpage {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse: return "parse";
    case ErrorCode::validation: return "validation";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::illegal_operation: return "illegal_operation";
    case ErrorCode::context_mismatch: return "context_mismatch";
    case ErrorCode::io: return "io";
    case ErrorCode::corrupt_state: return "corrupt_state";
    case ErrorCode::llm: return "llm";
    case ErrorCode::runner: return "runner";
    case ErrorCode::busy: return "busy";
    case ErrorCode::state_mismatch: return "state_mismatch";
  }
  return "unknown";
}

namespace {

std::string to_hex(std::span<const unsigned char> bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0x0f]);
  }
  return out;
}

bool is_base64_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
         (c >= '0' && c <= '9') || c == '+' || c == '/';
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) return {};
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.empty()) return {};
  if (text.size() % 4 != 0) {
    throw Error(ErrorCode::parse, "base64 length is not a multiple of 4");
  }
  std::size_t padding = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '=') {
      if (i + 2 < text.size()) throw Error(ErrorCode::parse, "misplaced base64 padding");
      ++padding;
    } else if (!is_base64_char(c) || padding > 0) {
      throw Error(ErrorCode::parse, "invalid base64 character");
    }
  }
  std::vector<std::uint8_t> out(3 * (text.size() / 4));
  const int n = EVP_DecodeBlock(out.data(),
                                reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw Error(ErrorCode::parse, "invalid base64");
  // EVP_DecodeBlock counts padding bytes as decoded zeros.
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::io, "sha256 failed");
  }
  return to_hex(std::span(digest.data(), len));
}

std::string random_hex(std::size_t byte_count) {
  std::vector<unsigned char> buf(byte_count);
  if (RAND_bytes(buf.data(), static_cast<int>(buf.size())) != 1) {
    throw Error(ErrorCode::io, "random source unavailable");
  }
  return to_hex(buf);
}

std::string random_uuid() {
  std::array<unsigned char, 16> b{};
  if (RAND_bytes(b.data(), static_cast<int>(b.size())) != 1) {
    throw Error(ErrorCode::io, "random source unavailable");
  }
  b[6] = static_cast<unsigned char>((b[6] & 0x0f) | 0x40);
  b[8] = static_cast<unsigned char>((b[8] & 0x3f) | 0x80);
  const std::string hex = to_hex(b);
  return hex.substr(0, 8) + "-" + hex.substr(8, 4) + "-" + hex.substr(12, 4) + "-" +
         hex.substr(16, 4) + "-" + hex.substr(20, 12);
}

}  // namespace dpage
