// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace puzzle {

/// Bit sequence packed most-significant-bit-first within each byte. The
/// MSB-first layout is part of the interoperability contract for
/// bit-granularity blocks.
class BitVector {
public:
  BitVector() = default;

  explicit BitVector(std::size_t bit_count)
      : bits_(bit_count), bytes_((bit_count + 7) / 8) {}

  static BitVector from_bytes(std::span<const std::uint8_t> data) {
    BitVector v(data.size() * 8);
    std::copy(data.begin(), data.end(), v.bytes_.begin());
    return v;
  }

  std::size_t size() const { return bits_; }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

  bool get(std::size_t i) const {
    return (bytes_[i >> 3] >> (7 - (i & 7))) & 1;
  }

  void set(std::size_t i, bool value) {
    std::uint8_t mask = static_cast<std::uint8_t>(1u << (7 - (i & 7)));
    if (value) {
      bytes_[i >> 3] |= mask;
    } else {
      bytes_[i >> 3] &= static_cast<std::uint8_t>(~mask);
    }
  }

  /// Rotation moving the first `n` bits to the end.
  BitVector rotated_left(std::size_t n) const {
    BitVector out(bits_);
    if (bits_ == 0) return out;
    n %= bits_;
    for (std::size_t i = 0; i < bits_; ++i) {
      out.set(i, get((i + n) % bits_));
    }
    return out;
  }

  BitVector rotated_right(std::size_t n) const {
    if (bits_ == 0) return *this;
    n %= bits_;
    return rotated_left(bits_ - n == bits_ ? 0 : bits_ - n);
  }

private:
  std::size_t bits_ = 0;
  std::vector<std::uint8_t> bytes_;
};

}  // namespace puzzle
