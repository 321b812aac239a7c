// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/rand.h>

#include "puzzle/cipher.hpp"
#include "puzzle/errors.hpp"
#include "puzzle/keyschedule.hpp"
#include "puzzle/params.hpp"

namespace puzzle {

/// File-mode framing. All multi-byte integers are big-endian. The reference
/// block size is deliberately absent: it travels out of band so the actual
/// block size stays secret.
///
///   magic "PZLE" | version u8 | hash_alg u8 | flags u8 | iv_len u16 |
///   iv | plaintext_len u64
struct ContainerHeader {
  static constexpr std::array<std::uint8_t, 4> kMagic{'P', 'Z', 'L', 'E'};
  static constexpr std::uint8_t kVersion = 1;
  static constexpr std::size_t kMinIvLen = 8;

  HashAlg hash_alg = HashAlg::kSha512;
  Granularity granularity = Granularity::kByte;
  std::vector<std::uint8_t> iv;
  std::uint64_t plaintext_len = 0;

  std::size_t serialized_size() const { return 17 + iv.size(); }

  void write(std::ostream& os) const {
    os.write(reinterpret_cast<const char*>(kMagic.data()), kMagic.size());
    std::uint8_t fixed[3] = {kVersion, static_cast<std::uint8_t>(hash_alg),
                             static_cast<std::uint8_t>(granularity)};
    os.write(reinterpret_cast<const char*>(fixed), sizeof(fixed));
    std::uint8_t iv_len[2] = {static_cast<std::uint8_t>(iv.size() >> 8),
                              static_cast<std::uint8_t>(iv.size() & 0xFF)};
    os.write(reinterpret_cast<const char*>(iv_len), sizeof(iv_len));
    os.write(reinterpret_cast<const char*>(iv.data()),
             static_cast<std::streamsize>(iv.size()));
    std::uint8_t len[8];
    for (int i = 0; i < 8; ++i) {
      len[i] = static_cast<std::uint8_t>(plaintext_len >> (56 - 8 * i));
    }
    os.write(reinterpret_cast<const char*>(len), sizeof(len));
    if (!os) throw IoError("failed to write container header");
  }

  static ContainerHeader read(std::istream& is) {
    auto read_exact = [&](std::uint8_t* buf, std::size_t n, const char* what) {
      is.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n));
      if (static_cast<std::size_t>(is.gcount()) != n) {
        throw FormatError(std::string("truncated container header: ") + what);
      }
    };
    ContainerHeader h;
    std::uint8_t magic[4];
    read_exact(magic, 4, "magic");
    if (!std::equal(std::begin(magic), std::end(magic), kMagic.begin())) {
      throw FormatError("not a puzzle container (bad magic)");
    }
    std::uint8_t fixed[3];
    read_exact(fixed, 3, "version/algorithm");
    if (fixed[0] != kVersion) {
      throw FormatError("unsupported container version " +
                        std::to_string(fixed[0]));
    }
    auto alg = hash_alg_from_id(fixed[1]);
    if (!alg) {
      throw FormatError("unknown hash algorithm id " + std::to_string(fixed[1]));
    }
    h.hash_alg = *alg;
    if (fixed[2] > 1) {
      throw FormatError("unknown flags byte " + std::to_string(fixed[2]));
    }
    h.granularity = fixed[2] ? Granularity::kBit : Granularity::kByte;
    std::uint8_t iv_len_buf[2];
    read_exact(iv_len_buf, 2, "iv length");
    std::size_t iv_len = (static_cast<std::size_t>(iv_len_buf[0]) << 8) |
                         iv_len_buf[1];
    if (iv_len < kMinIvLen) {
      throw FormatError("IV shorter than the 8-byte minimum");
    }
    h.iv.resize(iv_len);
    read_exact(h.iv.data(), iv_len, "iv");
    std::uint8_t len[8];
    read_exact(len, 8, "plaintext length");
    h.plaintext_len = 0;
    for (int i = 0; i < 8; ++i) {
      h.plaintext_len = (h.plaintext_len << 8) | len[i];
    }
    if (h.plaintext_len == 0) {
      throw FormatError("container declares an empty plaintext");
    }
    return h;
  }
};

/// Cryptographically random IV bytes.
inline std::vector<std::uint8_t> random_iv(std::size_t len = 16) {
  std::vector<std::uint8_t> iv(len);
  if (RAND_bytes(iv.data(), static_cast<int>(len)) != 1) {
    throw std::runtime_error("system randomness source failed");
  }
  return iv;
}

namespace detail {

inline std::size_t extent_bytes(const BlockExtent& e, Granularity g) {
  return g == Granularity::kBit ? e.elements / 8 : e.elements;
}

inline std::size_t payload_bytes(const BlockExtent& e, Granularity g) {
  return g == Granularity::kBit ? e.payload_elements / 8 : e.payload_elements;
}

}  // namespace detail

/// Encrypts `total_len` bytes from `in` into a container on `out`. Blocks
/// are processed one at a time, so memory stays bounded by a few block
/// lengths regardless of file size.
inline void encrypt_file(std::istream& in, std::uint64_t total_len,
                         std::ostream& out,
                         std::span<const std::uint8_t> password,
                         std::span<const std::uint8_t> iv,
                         const CipherParams& params) {
  params.validate();
  if (total_len == 0) throw std::invalid_argument("refusing to encrypt an empty input");
  if (iv.size() < ContainerHeader::kMinIvLen) {
    throw std::invalid_argument("IV must be at least 8 bytes");
  }
  if (iv.size() > 0xFFFF) throw std::invalid_argument("IV too long for the header");

  KeyPair keys = derive_key_pair(password, params.hash_alg);
  apply_iv(keys, iv, params.hash_alg);
  PuzzleStream stream(std::move(keys), params);

  ContainerHeader header;
  header.hash_alg = params.hash_alg;
  header.granularity = params.granularity;
  header.iv.assign(iv.begin(), iv.end());
  header.plaintext_len = total_len;
  header.write(out);

  std::uint64_t consumed = 0;
  std::vector<std::uint8_t> buf;
  for (const BlockExtent& extent :
       plan_message(total_len, params, stream.block_size())) {
    const std::size_t want = detail::payload_bytes(extent, params.granularity);
    buf.assign(detail::extent_bytes(extent, params.granularity), 0);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(want));
    if (static_cast<std::size_t>(in.gcount()) != want) {
      throw IoError("input ended early at byte " + std::to_string(consumed));
    }
    consumed += want;
    auto ct = stream.encrypt_block(buf);
    out.write(reinterpret_cast<const char*>(ct.data()),
              static_cast<std::streamsize>(ct.size()));
    if (!out) throw IoError("failed to write ciphertext block");
  }
}

/// Decrypts a container. The reference block size (and method policy) come
/// from the caller; hash algorithm, granularity and IV come from the
/// header. A wrong password or reference size yields garbage or a length
/// mismatch, never an authenticated failure: the format carries no
/// integrity check.
inline void decrypt_file(std::istream& in, std::ostream& out,
                         std::span<const std::uint8_t> password,
                         std::size_t reference_block_size,
                         const CipherParams& policy = CipherParams{}) {
  ContainerHeader header = ContainerHeader::read(in);
  CipherParams params = policy;
  params.reference_block_size = reference_block_size;
  params.hash_alg = header.hash_alg;
  params.granularity = header.granularity;
  params.validate();

  KeyPair keys = derive_key_pair(password, params.hash_alg);
  apply_iv(keys, header.iv, params.hash_alg);
  PuzzleStream stream(std::move(keys), params);

  std::uint64_t produced = 0;
  std::vector<std::uint8_t> buf;
  for (const BlockExtent& extent :
       plan_message(header.plaintext_len, params, stream.block_size())) {
    const std::size_t padded = detail::extent_bytes(extent, params.granularity);
    buf.resize(padded);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(padded));
    if (static_cast<std::size_t>(in.gcount()) != padded) {
      throw FormatError("container body truncated at block " +
                        std::to_string(stream.block_number()));
    }
    auto pt = stream.decrypt_block(buf);
    const std::size_t keep = detail::payload_bytes(extent, params.granularity);
    out.write(reinterpret_cast<const char*>(pt.data()),
              static_cast<std::streamsize>(keep));
    if (!out) throw IoError("failed to write plaintext block");
    produced += keep;
  }
  if (in.peek() != std::istream::traits_type::eof()) {
    throw FormatError("trailing bytes after container body");
  }
}

inline std::vector<std::uint8_t> encrypt_bytes(
    std::span<const std::uint8_t> plaintext,
    std::span<const std::uint8_t> password, std::span<const std::uint8_t> iv,
    const CipherParams& params) {
  std::istringstream in(
      std::string(reinterpret_cast<const char*>(plaintext.data()),
                  plaintext.size()));
  std::ostringstream out;
  encrypt_file(in, plaintext.size(), out, password, iv, params);
  auto s = out.str();
  return {s.begin(), s.end()};
}

inline std::vector<std::uint8_t> decrypt_bytes(
    std::span<const std::uint8_t> container,
    std::span<const std::uint8_t> password, std::size_t reference_block_size,
    const CipherParams& policy = CipherParams{}) {
  std::istringstream in(
      std::string(reinterpret_cast<const char*>(container.data()),
                  container.size()));
  std::ostringstream out;
  decrypt_file(in, out, password, reference_block_size, policy);
  auto s = out.str();
  return {s.begin(), s.end()};
}

namespace detail {

inline std::vector<std::uint8_t> crypt_packet(
    std::span<const std::uint8_t> payload, std::uint64_t seq,
    const KeyPair& keys, Granularity granularity, bool decrypt,
    std::size_t method_threshold, std::optional<MapMethod> method_override) {
  const std::size_t elements =
      granularity == Granularity::kBit ? payload.size() * 8 : payload.size();
  if (elements < min_block_elements(granularity)) {
    throw std::invalid_argument("packet payload below the minimum block size");
  }
  CipherParams policy;
  policy.granularity = granularity;
  policy.method_threshold = method_threshold;
  policy.method_override = method_override;

  // Packets must decrypt independently of each other, so every packet
  // starts from the session keys with fresh cursors; the sequence number
  // provides the per-packet variation through the shift and XOR window.
  KeyMaterial xor_key(keys.xor_key.bytes());
  KeyMaterial map_key(keys.map_key.bytes());
  PermutationMap map =
      build_map(select_method(elements, policy), elements, map_key);
  const std::size_t shift = shift_amount(map, seq);

  std::vector<std::uint8_t> out;
  if (granularity == Granularity::kByte) {
    if (!decrypt) {
      out = rotated_left(payload, shift);
      xor_layer_inplace(out, seq, xor_key, payload.size());
      out = permute_bytes(map, out);
    } else {
      out = unpermute_bytes(map, payload);
      xor_layer_inplace(out, seq, xor_key, payload.size());
      out = rotated_right(out, shift);
    }
  } else {
    BitVector v = BitVector::from_bytes(payload);
    if (!decrypt) {
      v = v.rotated_left(shift);
      xor_layer_inplace(v.bytes(), seq, xor_key, payload.size());
      v = permute_bits(map, v);
    } else {
      v = unpermute_bits(map, v);
      xor_layer_inplace(v.bytes(), seq, xor_key, payload.size());
      v = v.rotated_right(shift);
    }
    out = v.bytes();
  }
  return out;
}

}  // namespace detail

/// Packet-mode framing: the block size equals the payload size and the
/// sequence number acts as the block number. No header is emitted; session
/// setup (keys, IV) is the transport's concern.
inline std::vector<std::uint8_t> encrypt_packet(
    std::span<const std::uint8_t> payload, std::uint64_t seq,
    const KeyPair& keys, Granularity granularity = Granularity::kByte,
    std::size_t method_threshold = kDefaultMethodThreshold,
    std::optional<MapMethod> method_override = std::nullopt) {
  return detail::crypt_packet(payload, seq, keys, granularity, false,
                              method_threshold, method_override);
}

inline std::vector<std::uint8_t> decrypt_packet(
    std::span<const std::uint8_t> packet, std::uint64_t seq,
    const KeyPair& keys, Granularity granularity = Granularity::kByte,
    std::size_t method_threshold = kDefaultMethodThreshold,
    std::optional<MapMethod> method_override = std::nullopt) {
  return detail::crypt_packet(packet, seq, keys, granularity, true,
                              method_threshold, method_override);
}

}  // namespace puzzle
