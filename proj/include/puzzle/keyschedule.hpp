// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "puzzle/hash.hpp"
#include "puzzle/key_material.hpp"

namespace puzzle {

/// The two final keys. Both derive from the same password; the map key runs
/// the pipeline on the byte-reversed password.
struct KeyPair {
  KeyMaterial xor_key;
  KeyMaterial map_key;
};

/// Digests of password prefixes of length 3, 6, 9, ... plus a final digest
/// of the whole password when its length is not a multiple of 3. Always
/// ceil(len/3) entries.
inline std::vector<std::vector<std::uint8_t>> derive_parts(
    std::span<const std::uint8_t> password, HashAlg alg) {
  if (password.empty()) {
    throw std::invalid_argument("password must not be empty");
  }
  std::size_t n = (password.size() + 2) / 3;
  std::vector<std::vector<std::uint8_t>> parts;
  parts.reserve(n);
  for (std::size_t i = 1; i < n; ++i) {
    parts.push_back(digest(alg, password.subspan(0, 3 * i)));
  }
  parts.push_back(digest(alg, password));
  return parts;
}

/// Second pass over the parts, in reverse order of coverage: entry i hashes
/// the suffix parts[i..N), and the last entry hashes every part except the
/// one before the last. With a single part the exclusion is vacuous and the
/// entry is just its digest.
inline std::vector<std::uint8_t> second_pass(
    const std::vector<std::vector<std::uint8_t>>& parts, HashAlg alg) {
  if (parts.empty()) {
    throw std::invalid_argument("parts list must not be empty");
  }
  const std::size_t n = parts.size();
  std::vector<std::uint8_t> out;
  out.reserve(n * digest_size(alg));
  std::vector<std::uint8_t> buf;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    buf.clear();
    for (std::size_t j = i; j < n; ++j) {
      buf.insert(buf.end(), parts[j].begin(), parts[j].end());
    }
    auto d = digest(alg, buf);
    out.insert(out.end(), d.begin(), d.end());
  }
  buf.clear();
  for (std::size_t j = 0; j < n; ++j) {
    if (n >= 2 && j == n - 2) continue;
    buf.insert(buf.end(), parts[j].begin(), parts[j].end());
  }
  auto d = digest(alg, buf);
  out.insert(out.end(), d.begin(), d.end());
  return out;
}

/// Splits the intermediate key into four equal quarters E,F,G,H and returns
/// (E^G) || (E^H) || (F^G) || (F^H). Length preserved.
inline std::vector<std::uint8_t> xor_fold(
    std::span<const std::uint8_t> intermediate) {
  if (intermediate.size() % 4 != 0) {
    throw std::logic_error("intermediate key length not divisible by 4");
  }
  const std::size_t q = intermediate.size() / 4;
  auto e = intermediate.subspan(0, q);
  auto f = intermediate.subspan(q, q);
  auto g = intermediate.subspan(2 * q, q);
  auto h = intermediate.subspan(3 * q, q);
  std::vector<std::uint8_t> out(intermediate.size());
  for (std::size_t i = 0; i < q; ++i) {
    out[i] = e[i] ^ g[i];
    out[q + i] = e[i] ^ h[i];
    out[2 * q + i] = f[i] ^ g[i];
    out[3 * q + i] = f[i] ^ h[i];
  }
  return out;
}

inline std::vector<std::uint8_t> derive_final_key(
    std::span<const std::uint8_t> password, HashAlg alg) {
  return xor_fold(second_pass(derive_parts(password, alg), alg));
}

inline KeyPair derive_key_pair(std::span<const std::uint8_t> password,
                               HashAlg alg) {
  std::vector<std::uint8_t> reversed(password.rbegin(), password.rend());
  return KeyPair{KeyMaterial(derive_final_key(password, alg)),
                 KeyMaterial(derive_final_key(reversed, alg))};
}

inline KeyPair derive_key_pair(std::string_view password, HashAlg alg) {
  return derive_key_pair(
      std::span<const std::uint8_t>(
          reinterpret_cast<const std::uint8_t*>(password.data()),
          password.size()),
      alg);
}

/// Hash-chain expansion of the IV to `key_len` bytes. The raw IV is hashed
/// once and discarded; each round appends the digest of the whole current
/// extension, and the result is truncated to the requested length.
inline std::vector<std::uint8_t> extend_iv(std::span<const std::uint8_t> iv,
                                           std::size_t key_len, HashAlg alg) {
  if (iv.empty()) throw std::invalid_argument("IV must not be empty");
  if (key_len == 0) throw std::invalid_argument("key length must be positive");
  std::vector<std::uint8_t> ext = digest(alg, iv);
  while (ext.size() < key_len) {
    auto d = digest(alg, ext);
    ext.insert(ext.end(), d.begin(), d.end());
  }
  ext.resize(key_len);
  return ext;
}

/// XORs the extended IV into both keys and resets their cursors.
inline void apply_iv(KeyPair& keys, std::span<const std::uint8_t> iv,
                     HashAlg alg) {
  auto ext = extend_iv(iv, keys.xor_key.size_bytes(), alg);
  keys.xor_key.xor_with(ext);
  keys.map_key.xor_with(ext);
}

/// Replaces each digest-sized block of the key by its own digest. Length
/// preserved, cursor reset.
inline void regenerate(KeyMaterial& key, HashAlg alg) {
  const std::size_t n = digest_size(alg);
  if (key.size_bytes() % n != 0) {
    throw std::logic_error("key length is not a multiple of the digest size");
  }
  std::span<const std::uint8_t> cur(key.bytes());
  std::vector<std::uint8_t> out;
  out.reserve(key.size_bytes());
  for (std::size_t off = 0; off < cur.size(); off += n) {
    auto d = digest(alg, cur.subspan(off, n));
    out.insert(out.end(), d.begin(), d.end());
  }
  key.replace_bytes(std::move(out));
}

}  // namespace puzzle
