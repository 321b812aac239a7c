// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

namespace puzzle {

/// Hash algorithms usable by the key schedule. The numeric values are wire
/// identifiers recorded in the container header.
enum class HashAlg : std::uint8_t {
  kSha256 = 1,
  kSha512 = 2,
};

constexpr std::size_t digest_size(HashAlg alg) {
  return alg == HashAlg::kSha256 ? 32 : 64;
}

inline std::optional<HashAlg> hash_alg_from_id(std::uint8_t id) {
  if (id == 1) return HashAlg::kSha256;
  if (id == 2) return HashAlg::kSha512;
  return std::nullopt;
}

inline std::optional<HashAlg> hash_alg_from_name(std::string_view name) {
  if (name == "sha256") return HashAlg::kSha256;
  if (name == "sha512") return HashAlg::kSha512;
  return std::nullopt;
}

inline std::string hash_alg_name(HashAlg alg) {
  return alg == HashAlg::kSha256 ? "sha256" : "sha512";
}

/// Digest of `data`, 32 or 64 bytes depending on the algorithm.
inline std::vector<std::uint8_t> digest(HashAlg alg,
                                        std::span<const std::uint8_t> data) {
  const EVP_MD* md =
      alg == HashAlg::kSha256 ? EVP_sha256() : EVP_sha512();
  std::vector<std::uint8_t> out(digest_size(alg));
  unsigned int written = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &written, md,
                 nullptr) != 1 ||
      written != out.size()) {
    throw std::runtime_error("message digest computation failed");
  }
  return out;
}

inline std::vector<std::uint8_t> digest(HashAlg alg, std::string_view text) {
  return digest(alg, std::span<const std::uint8_t>(
                         reinterpret_cast<const std::uint8_t*>(text.data()),
                         text.size()));
}

}  // namespace puzzle
