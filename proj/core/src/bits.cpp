#include "memlb/bits.hpp"

#include <cmath>
#include <stdexcept>

#include "memlb/errors.hpp"

namespace memlb {

namespace {
constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  throw FormatError(std::string("invalid hex digit '") + c + "'");
}
}  // namespace

std::string MemoryState::to_hex() const {
  std::string out;
  out.reserve(bytes_.size() * 2);
  for (std::uint8_t b : bytes_) {
    out.push_back(kHexDigits[b & 0xF]);
    out.push_back(kHexDigits[b >> 4]);
  }
  return out;
}

MemoryState MemoryState::from_hex(const std::string& hex,
                                  std::size_t bit_length) {
  if (hex.size() % 2 != 0) throw FormatError("hex string has odd length");
  if (bit_length > hex.size() * 4) {
    throw FormatError("declared bit length exceeds hex payload");
  }
  MemoryState state;
  state.bytes_.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    state.bytes_.push_back(static_cast<std::uint8_t>(
        hex_value(hex[i]) | (hex_value(hex[i + 1]) << 4)));
  }
  state.bits_ = bit_length;
  state.bytes_.resize((bit_length + 7) / 8);
  return state;
}

std::int64_t quantize_fixed(double value, int bits) {
  if (bits < 2 || bits > 62) {
    throw std::invalid_argument("quantize_fixed: bits must be in [2, 62]");
  }
  const std::int64_t limit = (std::int64_t{1} << (bits - 1)) - 1;
  double scaled = std::nearbyint(value * static_cast<double>(limit));
  if (scaled > static_cast<double>(limit)) scaled = static_cast<double>(limit);
  if (scaled < -static_cast<double>(limit)) scaled = -static_cast<double>(limit);
  return static_cast<std::int64_t>(scaled);
}

double dequantize_fixed(std::int64_t q, int bits) {
  const std::int64_t limit = (std::int64_t{1} << (bits - 1)) - 1;
  return static_cast<double>(q) / static_cast<double>(limit);
}

}  // namespace memlb
