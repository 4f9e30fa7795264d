#pragma once

#include <cstdint>

#include "memlb/errors.hpp"

namespace memlb {

// Well-known named segments of the shared random string. Each segment is a
// disjoint bit-offset range of the same underlying stream, so independent
// consumers never collide and every bit remains a pure function of
// (seed, absolute offset).
enum class TapeSegment : int {
  kInstanceMatrix = 0,  // rows of the sign matrix A
  kNemirovski = 1,      // Nemirovski vectors v_1, v_2, ...
  kPlayerR1 = 2,        // function sampling in the game reduction
  kPlayerR2 = 3,        // algorithm randomness before the stored snapshot
  kPlayerR3 = 4,        // algorithm randomness after the stored snapshot
  kAux = 5,             // scratch (test matrices, drivers)
};

// A read-only, seeded, position-addressable stream of random bits.
//
// The bit at absolute offset p is a pure function of (seed, p): offsets are
// grouped into 64-bit blocks and each block is the SplitMix64 output for its
// index. Reading advances only the cursor, so any execution that records a
// cursor can be replayed bit-exactly.
class RandomTape {
 public:
  static constexpr std::uint64_t kSegmentSpan = std::uint64_t{1} << 56;

  explicit RandomTape(std::uint64_t seed)
      : RandomTape(seed, /*base_offset=*/0, /*limit_bits=*/kSegmentSpan) {}

  RandomTape(std::uint64_t seed, std::uint64_t base_offset,
             std::uint64_t limit_bits)
      : seed_(seed), base_(base_offset), limit_(limit_bits), cursor_(0) {}

  // The disjoint sub-stream reserved for `segment`.
  RandomTape segment(TapeSegment segment) const {
    const auto idx = static_cast<std::uint64_t>(segment);
    return RandomTape(seed_, (idx + 1) * kSegmentSpan, kSegmentSpan);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t cursor() const { return cursor_; }
  std::uint64_t remaining() const { return limit_ - cursor_; }

  void seek(std::uint64_t cursor) { cursor_ = cursor; }

  // Pure lookup: does not move the cursor.
  bool bit_at(std::uint64_t offset) const {
    const std::uint64_t abs = base_ + offset;
    return (block(abs >> 6) >> (abs & 63)) & 1u;
  }

  bool next_bit() {
    if (cursor_ >= limit_) {
      throw TapeUnderflow("random tape exhausted at offset " +
                          std::to_string(cursor_) + " (limit " +
                          std::to_string(limit_) + " bits)");
    }
    return bit_at(cursor_++);
  }

  // Next `count` bits packed little-endian into a word, count <= 64.
  std::uint64_t next_bits(int count) {
    std::uint64_t out = 0;
    for (int i = 0; i < count; ++i) {
      out |= static_cast<std::uint64_t>(next_bit()) << i;
    }
    return out;
  }

  // Fixed 32-bit fixed-point mapping onto [0, 1).
  double next_uniform() {
    return static_cast<double>(next_bits(32)) * 0x1p-32;
  }

 private:
  std::uint64_t block(std::uint64_t index) const {
    // SplitMix64 output stream keyed by the seed.
    std::uint64_t z = seed_ + (index + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t base_;
  std::uint64_t limit_;
  std::uint64_t cursor_;
};

}  // namespace memlb
