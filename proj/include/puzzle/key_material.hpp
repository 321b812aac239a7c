// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace puzzle {

/// A derived key with two views of the same bytes: the raw byte stream
/// (consumed by the XOR layer through direct indexing) and a little-endian
/// 32-bit word stream with a consuming cursor (the map layer).
///
/// When the cursor would walk off the end of the word view, the byte array
/// is rotated left by one byte and the cursor resets. The rotation happens
/// eagerly, inside the consuming call, so the byte array observed by a later
/// key regeneration reflects every completed sweep.
class KeyMaterial {
public:
  explicit KeyMaterial(std::vector<std::uint8_t> bytes)
      : bytes_(std::move(bytes)) {
    if (bytes_.empty() || bytes_.size() % 4 != 0) {
      throw std::invalid_argument(
          "key material must be a positive multiple of 4 bytes");
    }
  }

  std::size_t size_bytes() const { return bytes_.size(); }
  std::size_t word_count() const { return bytes_.size() / 4; }
  std::size_t cursor() const { return cursor_; }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

  /// Word `i` of the current byte array, little-endian, cursor untouched.
  std::uint32_t word_at(std::size_t i) const {
    const std::uint8_t* p = bytes_.data() + 4 * i;
    return static_cast<std::uint32_t>(p[0]) |
           static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 |
           static_cast<std::uint32_t>(p[3]) << 24;
  }

  std::uint32_t next_word() {
    std::uint32_t w = word_at(cursor_);
    if (++cursor_ == word_count()) {
      std::rotate(bytes_.begin(), bytes_.begin() + 1, bytes_.end());
      cursor_ = 0;
    }
    return w;
  }

  /// The (k_a, k_b) pair for one map element. A sweep boundary may fall
  /// between the two reads, in which case k_b comes from the rotated array.
  std::pair<std::uint32_t, std::uint32_t> next_word_pair() {
    std::uint32_t a = next_word();
    std::uint32_t b = next_word();
    return {a, b};
  }

  /// Replaces the byte content in place (IV application, regeneration).
  /// Resets the cursor.
  void replace_bytes(std::vector<std::uint8_t> bytes) {
    if (bytes.size() != bytes_.size()) {
      throw std::logic_error("key length changed during key update");
    }
    bytes_ = std::move(bytes);
    cursor_ = 0;
  }

  void xor_with(std::span<const std::uint8_t> mask) {
    if (mask.size() != bytes_.size()) {
      throw std::invalid_argument("XOR mask length does not match key length");
    }
    for (std::size_t i = 0; i < bytes_.size(); ++i) bytes_[i] ^= mask[i];
    cursor_ = 0;
  }

  bool operator==(const KeyMaterial&) const = default;

private:
  std::vector<std::uint8_t> bytes_;
  std::size_t cursor_ = 0;
};

}  // namespace puzzle
