#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

namespace memlb {

// An opaque bit string: the only thing a memory-constrained algorithm keeps
// between oracle calls. Length is counted in bits; storage is byte-packed,
// little-endian within each byte.
class MemoryState {
 public:
  MemoryState() = default;

  std::size_t bit_length() const { return bits_; }
  bool empty() const { return bits_ == 0; }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

  void append_bit(bool b) {
    if (bits_ % 8 == 0) bytes_.push_back(0);
    if (b) bytes_.back() |= static_cast<std::uint8_t>(1u << (bits_ % 8));
    ++bits_;
  }

  void append_bits(std::uint64_t value, int count) {
    int done = 0;
    while (done < count) {
      if (bits_ % 8 == 0) bytes_.push_back(0);
      const int room = 8 - static_cast<int>(bits_ % 8);
      const int take = std::min(room, count - done);
      const std::uint64_t chunk = (value >> done) & ((std::uint64_t{1} << take) - 1);
      bytes_.back() |= static_cast<std::uint8_t>(chunk << (bits_ % 8));
      bits_ += static_cast<std::size_t>(take);
      done += take;
    }
  }

  bool bit(std::size_t index) const {
    return (bytes_[index / 8] >> (index % 8)) & 1u;
  }

  std::uint64_t read_bits(std::size_t offset, int count) const {
    std::uint64_t out = 0;
    int got = 0;
    std::size_t byte = offset / 8;
    int start = static_cast<int>(offset % 8);
    while (got < count) {
      const int take = std::min(8 - start, count - got);
      const std::uint64_t chunk =
          (static_cast<std::uint64_t>(bytes_[byte]) >> start) &
          ((std::uint64_t{1} << take) - 1);
      out |= chunk << got;
      got += take;
      ++byte;
      start = 0;
    }
    return out;
  }

  bool operator==(const MemoryState& other) const {
    return bits_ == other.bits_ && bytes_ == other.bytes_;
  }
  bool operator!=(const MemoryState& other) const { return !(*this == other); }

  std::string to_hex() const;
  static MemoryState from_hex(const std::string& hex, std::size_t bit_length);

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t bits_ = 0;
};

// Sequential reader over a MemoryState.
class BitReader {
 public:
  explicit BitReader(const MemoryState& state) : state_(&state) {}

  std::uint64_t read(int count) {
    std::uint64_t out = state_->read_bits(cursor_, count);
    cursor_ += static_cast<std::size_t>(count);
    return out;
  }
  double read_double() {
    std::uint64_t raw = read(64);
    double d;
    static_assert(sizeof(d) == sizeof(raw));
    __builtin_memcpy(&d, &raw, sizeof(d));
    return d;
  }
  std::size_t cursor() const { return cursor_; }

 private:
  const MemoryState* state_;
  std::size_t cursor_ = 0;
};

inline void append_double(MemoryState& state, double value) {
  std::uint64_t raw;
  __builtin_memcpy(&raw, &value, sizeof(raw));
  state.append_bits(raw, 64);
}

// Signed fixed-point quantization of a value in [-1, 1] to `bits` bits.
// Round-trips through an integer so the stored width is explicit.
std::int64_t quantize_fixed(double value, int bits);
double dequantize_fixed(std::int64_t q, int bits);

}  // namespace memlb
