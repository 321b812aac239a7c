// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "puzzle/keyschedule.hpp"
#include "test_support.hpp"

using namespace puzzle;
using testsupport::bytes2hex;
using testsupport::hex2bytes;

namespace {

std::vector<std::uint8_t> bytes_of(std::string_view s) {
  return {s.begin(), s.end()};
}

}  // namespace

TEST_CASE("derive_parts hashes growing prefixes plus the full password") {
  auto pw = bytes_of("mypassword");
  auto parts = derive_parts(pw, HashAlg::kSha512);
  REQUIRE(parts.size() == 4);
  CHECK(parts[0] == digest(HashAlg::kSha512, "myp"));
  CHECK(parts[1] == digest(HashAlg::kSha512, "mypass"));
  CHECK(parts[2] == digest(HashAlg::kSha512, "mypasswor"));
  CHECK(parts[3] == digest(HashAlg::kSha512, "mypassword"));

  CHECK(derive_parts(bytes_of("abc"), HashAlg::kSha512) ==
        std::vector<std::vector<std::uint8_t>>{digest(HashAlg::kSha512, "abc")});
  auto two = derive_parts(bytes_of("abcd"), HashAlg::kSha512);
  REQUIRE(two.size() == 2);
  CHECK(two[0] == digest(HashAlg::kSha512, "abc"));
  CHECK(two[1] == digest(HashAlg::kSha512, "abcd"));

  CHECK_THROWS_AS(derive_parts({}, HashAlg::kSha512), std::invalid_argument);
}

TEST_CASE("second_pass emits suffix hashes and the skip-one final entry") {
  auto alg = HashAlg::kSha512;
  auto parts = derive_parts(bytes_of("mypassword"), alg);
  const auto &a = parts[0], &b = parts[1], &c = parts[2], &d = parts[3];
  auto cat = [](auto... vs) {
    std::vector<std::uint8_t> out;
    (out.insert(out.end(), vs.begin(), vs.end()), ...);
    return out;
  };
  auto expected = cat(digest(alg, cat(a, b, c, d)), digest(alg, cat(b, c, d)),
                      digest(alg, cat(c, d)), digest(alg, cat(a, b, d)));
  CHECK(second_pass(parts, alg) == expected);

  auto p0 = digest(alg, "x"), p1 = digest(alg, "y");
  CHECK(second_pass({p0}, alg) == digest(alg, p0));
  CHECK(second_pass({p0, p1}, alg) ==
        cat(digest(alg, cat(p0, p1)), digest(alg, p1)));
  CHECK_THROWS_AS(second_pass({}, alg), std::invalid_argument);
}

TEST_CASE("xor_fold splits into quarters and recombines") {
  SECTION("identical quarters cancel") {
    std::vector<std::uint8_t> in;
    for (int q = 0; q < 4; ++q)
      for (int i = 0; i < 8; ++i) in.push_back(static_cast<std::uint8_t>(i));
    CHECK(xor_fold(in) == std::vector<std::uint8_t>(32, 0));
  }
  SECTION("zero E,F pass G,H through") {
    std::vector<std::uint8_t> in(32, 0);
    for (int i = 0; i < 8; ++i) in[16 + i] = static_cast<std::uint8_t>(0x10 + i);
    for (int i = 0; i < 8; ++i) in[24 + i] = static_cast<std::uint8_t>(0x20 + i);
    auto out = xor_fold(in);
    for (int i = 0; i < 8; ++i) {
      CHECK(out[i] == 0x10 + i);
      CHECK(out[8 + i] == 0x20 + i);
      CHECK(out[16 + i] == 0x10 + i);
      CHECK(out[24 + i] == 0x20 + i);
    }
  }
  SECTION("random input matches the quarter-XOR oracle") {
    std::mt19937_64 rng(7);
    std::vector<std::uint8_t> in(256);
    for (auto& v : in) v = static_cast<std::uint8_t>(rng());
    auto out = xor_fold(in);
    REQUIRE(out.size() == in.size());
    std::size_t q = in.size() / 4;
    for (std::size_t i = 0; i < q; ++i) {
      CHECK(out[i] == (in[i] ^ in[2 * q + i]));
      CHECK(out[q + i] == (in[i] ^ in[3 * q + i]));
      CHECK(out[2 * q + i] == (in[q + i] ^ in[2 * q + i]));
      CHECK(out[3 * q + i] == (in[q + i] ^ in[3 * q + i]));
    }
  }
}

TEST_CASE("key pairs match the frozen reference vectors") {
  for (const auto& c : testsupport::load_json("keyschedule_vectors.json")) {
    auto pw = hex2bytes(c["password"]);
    auto alg = *hash_alg_from_id(c["alg"].get<std::uint8_t>());
    INFO("password " << c["password"].get<std::string>() << " alg "
                     << hash_alg_name(alg));

    auto parts = derive_parts(pw, alg);
    REQUIRE(parts.size() == c["parts"].size());
    for (std::size_t i = 0; i < parts.size(); ++i) {
      CHECK(bytes2hex(parts[i]) == c["parts"][i].get<std::string>());
    }

    KeyPair keys = derive_key_pair(pw, alg);
    CHECK(bytes2hex(keys.xor_key.bytes()) == c["xor_key"].get<std::string>());
    CHECK(bytes2hex(keys.map_key.bytes()) == c["map_key"].get<std::string>());

    apply_iv(keys, hex2bytes(c["iv"]), alg);
    CHECK(bytes2hex(keys.xor_key.bytes()) == c["xor_key_iv"].get<std::string>());
    CHECK(bytes2hex(keys.map_key.bytes()) == c["map_key_iv"].get<std::string>());

    regenerate(keys.xor_key, alg);
    CHECK(bytes2hex(keys.xor_key.bytes()) ==
          c["xor_key_iv_regen"].get<std::string>());
    regenerate(keys.xor_key, alg);
    CHECK(bytes2hex(keys.xor_key.bytes()) ==
          c["xor_key_iv_regen2"].get<std::string>());
  }
}

TEST_CASE("keys derive deterministically and with the expected length") {
  auto pw = bytes_of("mypassword");
  KeyPair a = derive_key_pair(pw, HashAlg::kSha512);
  KeyPair b = derive_key_pair(pw, HashAlg::kSha512);
  CHECK(a.xor_key == b.xor_key);
  CHECK(a.map_key == b.map_key);
  // ceil(10/3) = 4 groups of 64 bytes.
  CHECK(a.xor_key.size_bytes() == 256);
  CHECK(a.map_key.size_bytes() == 256);
  CHECK(a.xor_key.bytes() != a.map_key.bytes());

  KeyPair pal = derive_key_pair(bytes_of("abccba"), HashAlg::kSha256);
  CHECK(pal.xor_key.bytes() == pal.map_key.bytes());
}

TEST_CASE("extend_iv chains digests and truncates") {
  auto alg = HashAlg::kSha512;
  auto iv = hex2bytes("000102030405060708090a0b0c0d0e0f");
  auto h1 = digest(alg, iv);
  auto h2 = digest(alg, h1);
  CHECK(extend_iv(iv, 64, alg) == h1);

  auto two = extend_iv(iv, 128, alg);
  REQUIRE(two.size() == 128);
  CHECK(std::equal(h1.begin(), h1.end(), two.begin()));
  CHECK(std::equal(h2.begin(), h2.end(), two.begin() + 64));

  auto odd = extend_iv(iv, 65, alg);
  REQUIRE(odd.size() == 65);
  CHECK(odd.back() == h2.front());

  CHECK_THROWS_AS(extend_iv({}, 64, alg), std::invalid_argument);

  for (const auto& c : testsupport::load_json("extendiv_vectors.json")) {
    auto got = extend_iv(hex2bytes(c["iv"]), c["key_len"].get<std::size_t>(),
                         *hash_alg_from_id(c["alg"].get<std::uint8_t>()));
    CHECK(bytes2hex(got) == c["extended"].get<std::string>());
  }
}

TEST_CASE("apply_iv is an involution and differentiates IVs") {
  auto pw = bytes_of("ivcheck");
  auto alg = HashAlg::kSha256;
  KeyPair keys = derive_key_pair(pw, alg);
  KeyPair orig = keys;

  auto iv = hex2bytes("0011223344556677");
  apply_iv(keys, iv, alg);
  CHECK(keys.xor_key.bytes() != orig.xor_key.bytes());
  apply_iv(keys, iv, alg);
  CHECK(keys.xor_key.bytes() == orig.xor_key.bytes());
  CHECK(keys.map_key.bytes() == orig.map_key.bytes());

  KeyPair k1 = derive_key_pair(pw, alg);
  KeyPair k2 = derive_key_pair(pw, alg);
  apply_iv(k1, hex2bytes("0000000000000001"), alg);
  apply_iv(k2, hex2bytes("0000000000000002"), alg);
  CHECK(k1.xor_key.bytes() != k2.xor_key.bytes());
  CHECK(k1.map_key.bytes() != k2.map_key.bytes());
}

TEST_CASE("regenerate rehashes each digest-sized block in place") {
  auto alg = HashAlg::kSha512;
  KeyPair keys = derive_key_pair(bytes_of("regen"), alg);
  auto before = keys.xor_key.bytes();
  REQUIRE(before.size() % 64 == 0);

  regenerate(keys.xor_key, alg);
  const auto& after = keys.xor_key.bytes();
  REQUIRE(after.size() == before.size());
  for (std::size_t off = 0; off < before.size(); off += 64) {
    auto expect = digest(
        alg, std::span<const std::uint8_t>(before.data() + off, 64));
    CHECK(std::equal(expect.begin(), expect.end(), after.begin() + off));
  }

  // Distinct inputs stay distinct across the fixed corpus.
  KeyPair other = derive_key_pair(bytes_of("regen2"), alg);
  regenerate(other.xor_key, alg);
  CHECK(other.xor_key.bytes() != keys.xor_key.bytes());
}

TEST_CASE("next_words walks the word view and rotates on exhaustion") {
  SECTION("fresh key reads words in order") {
    KeyMaterial km(std::vector<std::uint8_t>{1, 0, 0, 0, 2, 0, 0, 0});
    CHECK(km.next_word() == 1);
    CHECK(km.cursor() == 1);
  }

  SECTION("exhaustion rotates the byte array left by one") {
    KeyMaterial km(std::vector<std::uint8_t>{1, 2, 3, 4, 5, 6, 7, 8});
    auto w0 = km.next_word();
    auto w1 = km.next_word();  // consumes the last word; triggers rotation
    CHECK(w0 == 0x04030201u);
    CHECK(w1 == 0x08070605u);
    CHECK(km.bytes() == std::vector<std::uint8_t>{2, 3, 4, 5, 6, 7, 8, 1});
    CHECK(km.cursor() == 0);
    CHECK(km.next_word() == 0x05040302u);
  }

  SECTION("k full sweeps rotate k times, matching a naive simulation") {
    std::mt19937_64 rng(99);
    for (int rep = 0; rep < 10; ++rep) {
      std::size_t len = 4 * (1 + rng() % 16);
      std::vector<std::uint8_t> bytes(len);
      for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
      KeyMaterial km(bytes);

      std::vector<std::uint8_t> sim = bytes;
      std::size_t k = 3;
      std::vector<std::uint32_t> expect;
      for (std::size_t sweep = 0; sweep < k; ++sweep) {
        for (std::size_t w = 0; w < sim.size() / 4; ++w) {
          expect.push_back(static_cast<std::uint32_t>(sim[4 * w]) |
                           static_cast<std::uint32_t>(sim[4 * w + 1]) << 8 |
                           static_cast<std::uint32_t>(sim[4 * w + 2]) << 16 |
                           static_cast<std::uint32_t>(sim[4 * w + 3]) << 24);
        }
        std::rotate(sim.begin(), sim.begin() + 1, sim.end());
      }
      for (auto e : expect) CHECK(km.next_word() == e);
      CHECK(km.bytes() == sim);
    }
  }

  SECTION("frozen word stream vectors") {
    for (const auto& c : testsupport::load_json("words_vectors.json")) {
      auto pw = hex2bytes(c["password"]);
      auto alg = *hash_alg_from_id(c["alg"].get<std::uint8_t>());
      KeyMaterial km(derive_final_key(pw, alg));
      for (const auto& w : c["words"]) {
        CHECK(km.next_word() == w.get<std::uint32_t>());
      }
      CHECK(bytes2hex(km.bytes()) == c["bytes_after"].get<std::string>());
      CHECK(km.cursor() == c["cursor_after"].get<std::size_t>());
    }
  }
}
