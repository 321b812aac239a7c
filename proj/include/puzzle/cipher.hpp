// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "puzzle/bits.hpp"
#include "puzzle/key_material.hpp"
#include "puzzle/keyschedule.hpp"
#include "puzzle/params.hpp"
#include "puzzle/permmap.hpp"

namespace puzzle {

/// Byte-wise XOR against the rolling key window:
/// out[i] = in[i] ^ key[(i + block_number * stride) mod key_len].
/// `stride` is the nominal block length in bytes, so the window keeps
/// advancing across blocks instead of resetting.
inline void xor_layer_inplace(std::span<std::uint8_t> block,
                              std::uint64_t block_number,
                              const KeyMaterial& xor_key,
                              std::size_t stride_bytes) {
  const auto& key = xor_key.bytes();
  const std::uint64_t base = block_number * static_cast<std::uint64_t>(stride_bytes);
  for (std::size_t i = 0; i < block.size(); ++i) {
    block[i] ^= key[(base + i) % key.size()];
  }
}

inline std::vector<std::uint8_t> xor_layer(std::span<const std::uint8_t> block,
                                           std::uint64_t block_number,
                                           const KeyMaterial& xor_key,
                                           std::size_t stride_bytes) {
  std::vector<std::uint8_t> out(block.begin(), block.end());
  xor_layer_inplace(out, block_number, xor_key, stride_bytes);
  return out;
}

/// Number of elements rotated out of the front of a block before the XOR
/// and permutation: the map entry at the block number (wrapped).
inline std::size_t shift_amount(const PermutationMap& map,
                                std::uint64_t block_number) {
  return map.forward[block_number % map.block_size()];
}

inline std::vector<std::uint8_t> rotated_left(
    std::span<const std::uint8_t> block, std::size_t n) {
  std::vector<std::uint8_t> out(block.begin(), block.end());
  if (!out.empty()) {
    n %= out.size();
    std::rotate(out.begin(), out.begin() + n, out.end());
  }
  return out;
}

inline std::vector<std::uint8_t> rotated_right(
    std::span<const std::uint8_t> block, std::size_t n) {
  std::vector<std::uint8_t> out(block.begin(), block.end());
  if (!out.empty()) {
    n %= out.size();
    std::rotate(out.begin(), out.end() - n, out.end());
  }
  return out;
}

/// out[forward[i]] = in[i].
inline std::vector<std::uint8_t> permute_bytes(
    const PermutationMap& map, std::span<const std::uint8_t> block) {
  if (block.size() != map.block_size()) {
    throw std::invalid_argument("block length does not match map size");
  }
  std::vector<std::uint8_t> out(block.size());
  for (std::size_t i = 0; i < block.size(); ++i) {
    out[map.forward[i]] = block[i];
  }
  return out;
}

/// out[i] = in[forward[i]].
inline std::vector<std::uint8_t> unpermute_bytes(
    const PermutationMap& map, std::span<const std::uint8_t> block) {
  if (block.size() != map.block_size()) {
    throw std::invalid_argument("block length does not match map size");
  }
  std::vector<std::uint8_t> out(block.size());
  for (std::size_t i = 0; i < block.size(); ++i) {
    out[i] = block[map.forward[i]];
  }
  return out;
}

inline BitVector permute_bits(const PermutationMap& map, const BitVector& in) {
  if (in.size() != map.block_size()) {
    throw std::invalid_argument("bit count does not match map size");
  }
  BitVector out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    out.set(map.forward[i], in.get(i));
  }
  return out;
}

inline BitVector unpermute_bits(const PermutationMap& map,
                                const BitVector& in) {
  if (in.size() != map.block_size()) {
    throw std::invalid_argument("bit count does not match map size");
  }
  BitVector out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    out.set(i, in.get(map.forward[i]));
  }
  return out;
}

/// Streaming block cipher state: shift, XOR, permute per block, with both
/// keys regenerated and the map rebuilt after every `block_size` blocks.
///
/// Strictly sequential: block n+1 depends on the state left by block n.
/// Distinct streams are independent and may run on different threads.
class PuzzleStream {
public:
  /// Called once per processed block with the map and shift in effect.
  using BlockObserver = std::function<void(
      std::uint64_t block_number, const PermutationMap& map, std::size_t shift)>;

  PuzzleStream(KeyPair keys, const CipherParams& params)
      : keys_(std::move(keys)),
        params_(params),
        block_size_(compute_block_size(params, keys_.map_key)) {}

  std::size_t block_size() const { return block_size_; }
  const CipherParams& params() const { return params_; }
  std::uint64_t block_number() const { return block_number_; }
  MapMethod method() const { return select_method(block_size_, params_); }

  /// Nominal block length in bytes; the XOR window stride.
  std::size_t block_size_bytes() const {
    return params_.granularity == Granularity::kBit ? block_size_ / 8
                                                    : block_size_;
  }

  void set_block_observer(BlockObserver observer) {
    observer_ = std::move(observer);
  }

  std::vector<std::uint8_t> encrypt_block(std::span<const std::uint8_t> block) {
    return process_block(block, false);
  }

  std::vector<std::uint8_t> decrypt_block(std::span<const std::uint8_t> block) {
    return process_block(block, true);
  }

private:
  std::size_t element_count(std::size_t byte_len) const {
    return params_.granularity == Granularity::kBit ? byte_len * 8 : byte_len;
  }

  /// The nominal map (built lazily, once per epoch) for full blocks, or a
  /// transient own-sized map for a short tail block. Both consume word
  /// pairs from the map key, so encrypt and decrypt must see blocks in the
  /// same order.
  const PermutationMap& map_for(std::size_t elements) {
    MapMethod method = select_method(block_size_, params_);
    if (elements == block_size_) {
      if (!main_map_) {
        main_map_ = build_map(method, block_size_, keys_.map_key);
      }
      return *main_map_;
    }
    if (elements > block_size_ ||
        elements < min_block_elements(params_.granularity)) {
      throw std::invalid_argument("block length does not fit the stream");
    }
    transient_map_ = build_map(method, elements, keys_.map_key);
    return *transient_map_;
  }

  std::vector<std::uint8_t> process_block(std::span<const std::uint8_t> block,
                                          bool decrypt) {
    const std::size_t elements = element_count(block.size());
    const PermutationMap& map = map_for(elements);
    const std::size_t shift = shift_amount(map, block_number_);
    const std::size_t stride = block_size_bytes();

    std::vector<std::uint8_t> out;
    if (params_.granularity == Granularity::kByte) {
      if (!decrypt) {
        out = rotated_left(block, shift);
        xor_layer_inplace(out, block_number_, keys_.xor_key, stride);
        out = permute_bytes(map, out);
      } else {
        out = unpermute_bytes(map, block);
        xor_layer_inplace(out, block_number_, keys_.xor_key, stride);
        out = rotated_right(out, shift);
      }
    } else {
      BitVector v = BitVector::from_bytes(block);
      if (!decrypt) {
        v = v.rotated_left(shift);
        xor_layer_inplace(v.bytes(), block_number_, keys_.xor_key, stride);
        v = permute_bits(map, v);
      } else {
        v = unpermute_bits(map, v);
        xor_layer_inplace(v.bytes(), block_number_, keys_.xor_key, stride);
        v = v.rotated_right(shift);
      }
      out = v.bytes();
    }

    if (observer_) observer_(block_number_, map, shift);
    advance_epoch();
    return out;
  }

  void advance_epoch() {
    ++block_number_;
    if (++blocks_since_regen_ == block_size_) {
      regenerate(keys_.xor_key, params_.hash_alg);
      regenerate(keys_.map_key, params_.hash_alg);
      main_map_.reset();
      blocks_since_regen_ = 0;
    }
  }

  KeyPair keys_;
  CipherParams params_;
  std::size_t block_size_;
  std::optional<PermutationMap> main_map_;
  std::optional<PermutationMap> transient_map_;
  std::uint64_t block_number_ = 0;
  std::size_t blocks_since_regen_ = 0;
  BlockObserver observer_;
};

}  // namespace puzzle
