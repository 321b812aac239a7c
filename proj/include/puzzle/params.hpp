// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "puzzle/hash.hpp"
#include "puzzle/key_material.hpp"

namespace puzzle {

/// Whether permuted elements are bytes or bits.
enum class Granularity : std::uint8_t {
  kByte = 0,
  kBit = 1,
};

enum class MapMethod {
  kUnfolding,
  kIteration,
};

inline std::string map_method_name(MapMethod m) {
  return m == MapMethod::kUnfolding ? "unfolding" : "iteration";
}

/// Smallest permitted block, in elements.
constexpr std::size_t min_block_elements(Granularity g) {
  return g == Granularity::kByte ? 100 : 128;
}

/// Default upper bound (inclusive) for choosing the unfolding method.
constexpr std::size_t kDefaultMethodThreshold = 10'000;

struct CipherParams {
  std::size_t reference_block_size = 4096;  // elements
  Granularity granularity = Granularity::kByte;
  HashAlg hash_alg = HashAlg::kSha512;
  std::size_t method_threshold = kDefaultMethodThreshold;
  std::optional<MapMethod> method_override;

  void validate() const {
    if (method_threshold == 0) {
      throw std::invalid_argument("method threshold must be positive");
    }
    if (granularity == Granularity::kByte) {
      if (reference_block_size < 100) {
        throw std::invalid_argument(
            "reference block size below 100 bytes is not allowed");
      }
    } else {
      if (reference_block_size < 128 || reference_block_size % 8 != 0) {
        throw std::invalid_argument(
            "bit-granularity reference block size must be a multiple of 8 "
            "and at least 128");
      }
    }
  }
};

/// Derives the actual (secret) block size from the reference size and the
/// first six words of the map key, read by index without moving the cursor.
/// The six-word sum is taken in 64-bit arithmetic; the result lies in
/// [R, R + floor(R/2)), and bit-granularity sizes are rounded down to a
/// multiple of 8.
inline std::size_t compute_block_size(const CipherParams& params,
                                      const KeyMaterial& map_key) {
  params.validate();
  if (map_key.word_count() < 6) {
    throw std::invalid_argument("map key shorter than six words");
  }
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < 6; ++i) sum += map_key.word_at(i);
  const std::uint64_t r = params.reference_block_size;
  std::size_t block_size = static_cast<std::size_t>(r + sum % (r / 2));
  if (params.granularity == Granularity::kBit) {
    block_size -= block_size % 8;
  }
  return block_size;
}

/// Unfolding for blocks up to the threshold (inclusive), iteration above,
/// unless explicitly overridden.
inline MapMethod select_method(std::size_t block_size,
                               const CipherParams& params) {
  if (params.method_override) return *params.method_override;
  return block_size <= params.method_threshold ? MapMethod::kUnfolding
                                               : MapMethod::kIteration;
}

/// One block of the message layout. `elements` is the processed size
/// (padding included); `payload_elements` is how much of it is real data.
struct BlockExtent {
  std::size_t elements;
  std::size_t payload_elements;
};

/// Splits a message into full blocks plus one final block of the residual
/// size. A residual below the granularity minimum is padded up to that
/// minimum (the container header keeps the true length). A message shorter
/// than the block size becomes a single block of its own padded size.
inline std::vector<BlockExtent> plan_message(std::uint64_t total_len_bytes,
                                             const CipherParams& params,
                                             std::size_t block_size) {
  if (total_len_bytes == 0) {
    throw std::invalid_argument("message must not be empty");
  }
  const bool bits = params.granularity == Granularity::kBit;
  const std::uint64_t total = bits ? total_len_bytes * 8 : total_len_bytes;
  std::vector<BlockExtent> plan;
  std::uint64_t full = total / block_size;
  std::uint64_t residual = total % block_size;
  plan.reserve(static_cast<std::size_t>(full) + 1);
  for (std::uint64_t b = 0; b < full; ++b) {
    plan.push_back({block_size, block_size});
  }
  if (residual != 0) {
    std::size_t padded = static_cast<std::size_t>(
        std::max<std::uint64_t>(residual, min_block_elements(params.granularity)));
    plan.push_back({padded, static_cast<std::size_t>(residual)});
  }
  return plan;
}

}  // namespace puzzle
