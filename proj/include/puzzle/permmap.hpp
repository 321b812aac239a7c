// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "puzzle/key_material.hpp"
#include "puzzle/order_statistics.hpp"
#include "puzzle/params.hpp"

namespace puzzle {

/// Keyed bijection between initial and final element positions within one
/// block. `forward[initial] = final`, `inverse[final] = initial`.
struct PermutationMap {
  std::vector<std::uint32_t> forward;
  std::vector<std::uint32_t> inverse;
  MapMethod method = MapMethod::kUnfolding;

  std::size_t block_size() const { return forward.size(); }
};

/// The affine placement formula, in 64-bit arithmetic so positions up to
/// tens of millions cannot overflow.
inline std::size_t raw_final_position(std::uint64_t i, std::uint32_t k_a,
                                      std::uint32_t k_b,
                                      std::uint64_t block_size) {
  return static_cast<std::size_t>((i * k_a + k_b) % block_size);
}

namespace detail {

inline std::vector<std::uint32_t> invert_forward(
    const std::vector<std::uint32_t>& forward) {
  std::vector<std::uint32_t> inverse(forward.size());
  std::vector<bool> seen(forward.size(), false);
  for (std::size_t i = 0; i < forward.size(); ++i) {
    std::uint32_t f = forward[i];
    if (f >= forward.size() || seen[f]) {
      throw std::logic_error("map is not a bijection");
    }
    seen[f] = true;
    inverse[f] = static_cast<std::uint32_t>(i);
  }
  return inverse;
}

/// Occupancy bitmap with word-scanned nearest-free-slot queries. Finding
/// the next free slot in either direction with wraparound is equivalent to
/// stepping one slot at a time, but skips occupied runs 64 slots per probe.
class FreeSlotBitmap {
public:
  explicit FreeSlotBitmap(std::size_t n)
      : words_((n + 63) / 64, ~std::uint64_t{0}) {
    std::size_t tail = n % 64;
    if (tail != 0) words_.back() = (std::uint64_t{1} << tail) - 1;
  }

  bool free(std::size_t pos) const {
    return (words_[pos >> 6] >> (pos & 63)) & 1;
  }

  void occupy(std::size_t pos) {
    words_[pos >> 6] &= ~(std::uint64_t{1} << (pos & 63));
  }

  /// First free slot at `pos` or after it, wrapping past the end.
  std::size_t next_free(std::size_t pos) const {
    std::size_t w = pos >> 6;
    std::uint64_t masked = words_[w] & (~std::uint64_t{0} << (pos & 63));
    for (std::size_t steps = 0;; ++steps) {
      if (masked != 0) {
        return (w << 6) + static_cast<std::size_t>(std::countr_zero(masked));
      }
      if (steps > words_.size()) throw std::logic_error("bitmap full");
      w = w + 1 == words_.size() ? 0 : w + 1;
      masked = words_[w];
    }
  }

  /// First free slot at `pos` or before it, wrapping past the start.
  std::size_t prev_free(std::size_t pos) const {
    std::size_t w = pos >> 6;
    std::size_t bit = pos & 63;
    std::uint64_t masked =
        words_[w] & (bit == 63 ? ~std::uint64_t{0}
                               : (std::uint64_t{1} << (bit + 1)) - 1);
    for (std::size_t steps = 0;; ++steps) {
      if (masked != 0) {
        return (w << 6) + 63 -
               static_cast<std::size_t>(std::countl_zero(masked));
      }
      if (steps > words_.size()) throw std::logic_error("bitmap full");
      w = w == 0 ? words_.size() - 1 : w - 1;
      masked = words_[w];
    }
  }

private:
  std::vector<std::uint64_t> words_;
};

}  // namespace detail

/// Memory-unfolding map construction: each element draws a word pair,
/// reduces the affine formula modulo the number of still-available
/// positions, and extracts that entry from the shrinking ordered set.
inline PermutationMap build_map_unfolding(std::size_t block_size,
                                          KeyMaterial& map_key) {
  if (block_size == 0) throw std::invalid_argument("empty block");
  PermutationMap map;
  map.method = MapMethod::kUnfolding;
  map.forward.resize(block_size);
  OrderStatisticSet available(block_size);
  for (std::size_t i = 0; i < block_size; ++i) {
    auto [k_a, k_b] = map_key.next_word_pair();
    std::size_t intermediate = raw_final_position(i, k_a, k_b, block_size);
    std::size_t rank = intermediate % available.size();
    map.forward[i] = static_cast<std::uint32_t>(available.take(rank));
  }
  map.inverse = detail::invert_forward(map.forward);
  return map;
}

/// Iteration map construction: the affine candidate is taken as-is when
/// free; otherwise the scan walks up (odd k_a) or down (even k_a) with
/// wraparound until it finds a free slot.
inline PermutationMap build_map_iteration(std::size_t block_size,
                                          KeyMaterial& map_key) {
  if (block_size == 0) throw std::invalid_argument("empty block");
  PermutationMap map;
  map.method = MapMethod::kIteration;
  map.forward.resize(block_size);
  detail::FreeSlotBitmap slots(block_size);
  for (std::size_t i = 0; i < block_size; ++i) {
    auto [k_a, k_b] = map_key.next_word_pair();
    std::size_t candidate = raw_final_position(i, k_a, k_b, block_size);
    std::size_t final_pos = (k_a % 2 == 1) ? slots.next_free(candidate)
                                           : slots.prev_free(candidate);
    slots.occupy(final_pos);
    map.forward[i] = static_cast<std::uint32_t>(final_pos);
  }
  map.inverse = detail::invert_forward(map.forward);
  return map;
}

inline PermutationMap build_map(MapMethod method, std::size_t block_size,
                                KeyMaterial& map_key) {
  return method == MapMethod::kUnfolding
             ? build_map_unfolding(block_size, map_key)
             : build_map_iteration(block_size, map_key);
}

/// Swaps the forward and inverse orientations. The new forward array is
/// recomputed from the old one, which doubles as the bijectivity check.
inline PermutationMap invert(const PermutationMap& map) {
  PermutationMap out;
  out.method = map.method;
  out.forward = detail::invert_forward(map.forward);
  out.inverse = map.forward;
  return out;
}

/// Flat "index,final" rows, consumed by the analysis tooling.
inline void write_map_csv(const PermutationMap& map, std::ostream& os) {
  for (std::size_t i = 0; i < map.forward.size(); ++i) {
    os << i << ',' << map.forward[i] << '\n';
  }
}

}  // namespace puzzle
