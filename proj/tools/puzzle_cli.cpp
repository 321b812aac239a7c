// SPDX-License-Identifier: Apache-2.0
//
// Command-line front door: encrypt/decrypt files, inspect derived
// parameters, reproduce the statistics suite, and benchmark.
//
// Exit codes: 0 success, 2 usage, 3 format, 4 I/O, 5 statistics threshold.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <termios.h>
#include <unistd.h>

#include "puzzle/analysis.hpp"
#include "puzzle/cipher.hpp"
#include "puzzle/container.hpp"
#include "puzzle/keyschedule.hpp"
#include "puzzle/params.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitFormat = 3;
constexpr int kExitIo = 4;
constexpr int kExitThreshold = 5;

struct CommonOpts {
  std::size_t ref_block_size = 4096;
  std::string granularity = "byte";
  std::string hash = "sha512";
  std::string method = "auto";
  std::string password_env;
  std::string password_file;
};

std::vector<std::uint8_t> hex_decode(const std::string& hex) {
  if (hex.size() % 2 != 0) throw std::invalid_argument("odd hex length");
  std::vector<std::uint8_t> out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(
        std::stoul(hex.substr(2 * i, 2), nullptr, 16));
  }
  return out;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--block-size", opts.ref_block_size,
                  "Reference block size (elements; bytes or bits per "
                  "--granularity). Must match between encrypt and decrypt.")
      ->capture_default_str();
  cmd->add_option("--granularity", opts.granularity,
                  "Element granularity: byte or bit")
      ->check(CLI::IsMember({"byte", "bit"}))
      ->capture_default_str();
  cmd->add_option("--hash", opts.hash, "Key schedule hash: sha256 or sha512")
      ->check(CLI::IsMember({"sha256", "sha512"}))
      ->capture_default_str();
  cmd->add_option("--method", opts.method,
                  "Map method: auto (size-based), unfolding, or iteration")
      ->check(CLI::IsMember({"auto", "unfolding", "iteration"}))
      ->capture_default_str();
  cmd->add_option("--password-env", opts.password_env,
                  "Environment variable holding the password");
  cmd->add_option("--password-file", opts.password_file,
                  "File whose full content (minus one trailing newline) is "
                  "the password");
}

puzzle::CipherParams params_from(const CommonOpts& opts) {
  puzzle::CipherParams params;
  params.reference_block_size = opts.ref_block_size;
  params.granularity = opts.granularity == "bit" ? puzzle::Granularity::kBit
                                                 : puzzle::Granularity::kByte;
  params.hash_alg = *puzzle::hash_alg_from_name(opts.hash);
  if (opts.method == "unfolding") {
    params.method_override = puzzle::MapMethod::kUnfolding;
  } else if (opts.method == "iteration") {
    params.method_override = puzzle::MapMethod::kIteration;
  }
  params.validate();
  return params;
}

std::vector<std::uint8_t> prompt_password() {
  if (!isatty(STDIN_FILENO)) {
    std::string line;
    if (!std::getline(std::cin, line)) {
      throw std::invalid_argument("no password on stdin");
    }
    return {line.begin(), line.end()};
  }
  std::fprintf(stderr, "Password: ");
  std::fflush(stderr);
  termios before{};
  tcgetattr(STDIN_FILENO, &before);
  termios silent = before;
  silent.c_lflag &= ~static_cast<tcflag_t>(ECHO);
  tcsetattr(STDIN_FILENO, TCSANOW, &silent);
  std::string line;
  std::getline(std::cin, line);
  tcsetattr(STDIN_FILENO, TCSANOW, &before);
  std::fprintf(stderr, "\n");
  return {line.begin(), line.end()};
}

std::vector<std::uint8_t> resolve_password(const CommonOpts& opts) {
  if (!opts.password_env.empty()) {
    const char* value = std::getenv(opts.password_env.c_str());
    if (value == nullptr) {
      throw std::invalid_argument("environment variable " + opts.password_env +
                                  " is not set");
    }
    std::string s(value);
    return {s.begin(), s.end()};
  }
  if (!opts.password_file.empty()) {
    std::ifstream is(opts.password_file, std::ios::binary);
    if (!is) {
      throw puzzle::IoError("cannot read password file " + opts.password_file);
    }
    std::string s(std::istreambuf_iterator<char>(is), {});
    if (!s.empty() && s.back() == '\n') s.pop_back();
    return {s.begin(), s.end()};
  }
  auto pw = prompt_password();
  if (pw.empty()) throw std::invalid_argument("empty password");
  return pw;
}

void warn_short_password(const std::vector<std::uint8_t>& pw) {
  if (pw.size() < 8) {
    std::fprintf(stderr,
                 "warning: password is shorter than 8 bytes; the key "
                 "schedule gives it no extra stretching\n");
  }
}

int run_encrypt(const CommonOpts& opts, const std::string& input,
                const std::string& output, const std::string& iv_hex,
                std::size_t iv_len) {
  auto params = params_from(opts);
  auto password = resolve_password(opts);
  warn_short_password(password);

  std::ifstream in(input, std::ios::binary);
  if (!in) throw puzzle::IoError("cannot open input file " + input);
  std::uint64_t total = std::filesystem::file_size(input);
  std::ofstream out(output, std::ios::binary | std::ios::trunc);
  if (!out) throw puzzle::IoError("cannot open output file " + output);

  std::vector<std::uint8_t> iv =
      iv_hex.empty() ? puzzle::random_iv(iv_len) : hex_decode(iv_hex);

  auto start = std::chrono::steady_clock::now();
  puzzle::encrypt_file(in, total, out, password, iv, params);
  double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  puzzle::KeyPair keys = puzzle::derive_key_pair(password, params.hash_alg);
  puzzle::apply_iv(keys, iv, params.hash_alg);
  std::size_t bs = puzzle::compute_block_size(params, keys.map_key);
  std::size_t blocks = puzzle::plan_message(total, params, bs).size();
  std::fprintf(stderr, "encrypted %llu bytes in %zu block(s), %.1f MB/s\n",
               static_cast<unsigned long long>(total), blocks,
               total / 1e6 / (secs > 0 ? secs : 1e-9));
  return kExitOk;
}

int run_decrypt(const CommonOpts& opts, const std::string& input,
                const std::string& output) {
  auto params = params_from(opts);
  auto password = resolve_password(opts);

  std::ifstream in(input, std::ios::binary);
  if (!in) throw puzzle::IoError("cannot open input file " + input);
  std::ofstream out(output, std::ios::binary | std::ios::trunc);
  if (!out) throw puzzle::IoError("cannot open output file " + output);

  auto start = std::chrono::steady_clock::now();
  puzzle::decrypt_file(in, out, password, opts.ref_block_size, params);
  double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  std::uint64_t total = std::filesystem::file_size(output);
  std::fprintf(stderr, "decrypted %llu bytes, %.1f MB/s\n",
               static_cast<unsigned long long>(total),
               total / 1e6 / (secs > 0 ? secs : 1e-9));
  std::fprintf(stderr,
               "note: the container has no integrity check; a wrong password "
               "or block size yields garbage\n");
  return kExitOk;
}

int run_keyinfo(const CommonOpts& opts, const std::string& iv_hex) {
  auto params = params_from(opts);
  auto password = resolve_password(opts);
  warn_short_password(password);

  puzzle::KeyPair keys = puzzle::derive_key_pair(password, params.hash_alg);
  std::size_t groups = (password.size() + 2) / 3;
  std::printf("hash:               %s\n",
              puzzle::hash_alg_name(params.hash_alg).c_str());
  std::printf("password groups:    %zu\n", groups);
  std::printf("key length:         %zu bytes (%zu words)\n",
              keys.xor_key.size_bytes(), keys.xor_key.word_count());
  if (!iv_hex.empty()) {
    auto iv = hex_decode(iv_hex);
    puzzle::apply_iv(keys, iv, params.hash_alg);
    std::size_t bs = puzzle::compute_block_size(params, keys.map_key);
    std::printf("block size:         %zu elements (IV applied)\n", bs);
    std::printf("map method:         %s\n",
                puzzle::map_method_name(
                    puzzle::select_method(bs, params)).c_str());
  } else {
    std::printf("block size:         depends on the IV; pass --iv-hex to "
                "inspect a specific stream\n");
  }
  return kExitOk;
}

int run_stats(const CommonOpts& opts, std::size_t trials,
              std::size_t block_size, std::uint64_t seed,
              const std::string& out_dir) {
  if (trials == 0) throw CLI::ValidationError("--trials must be positive");
  auto results = puzzle::run_appendix_suite(
      block_size, trials, seed, *puzzle::hash_alg_from_name(opts.hash));
  puzzle::write_appendix_csvs(results, out_dir);

  std::ofstream summary(std::filesystem::path(out_dir) / "summary.jsonl",
                        std::ios::trunc);
  puzzle::write_summary_jsonl(results.summary, summary);
  puzzle::write_summary_jsonl(results.summary, std::cout);

  if (trials < 30) {
    std::fprintf(stderr,
                 "note: %zu trial(s) emit CSVs only; thresholds need >= 30 "
                 "trials\n",
                 trials);
    return kExitOk;
  }
  return results.summary.thresholds_pass ? kExitOk : kExitThreshold;
}

int run_bench(const CommonOpts& opts) {
  using clock = std::chrono::steady_clock;
  std::mt19937_64 rng(0xBE9C);
  std::vector<std::uint8_t> password(64);
  for (auto& b : password) b = static_cast<std::uint8_t>(rng());
  auto alg = *puzzle::hash_alg_from_name(opts.hash);
  puzzle::KeyPair keys = puzzle::derive_key_pair(password, alg);

  std::printf("%-10s %-12s %14s %14s %12s\n", "method", "block", "map build s",
              "encrypt MB/s", "cycles/byte");

  for (std::size_t n : {std::size_t{100}, std::size_t{10'000},
                        std::size_t{1'000'000}}) {
    for (auto method :
         {puzzle::MapMethod::kUnfolding, puzzle::MapMethod::kIteration}) {
      // Map construction cost: the only stage where the methods differ.
      double build_best = 1e300;
      for (int rep = 0; rep < 3; ++rep) {
        puzzle::KeyMaterial key = keys.map_key;
        auto t0 = clock::now();
        auto map = puzzle::build_map(method, n, key);
        double t = std::chrono::duration<double>(clock::now() - t0).count();
        if (map.forward.size() == n) build_best = std::min(build_best, t);
      }

      // Steady-state throughput: encrypt whole blocks through one stream.
      puzzle::KeyMaterial key = keys.map_key;
      auto map = puzzle::build_map(method, n, key);
      puzzle::KeyMaterial xor_key = keys.xor_key;
      std::vector<std::uint8_t> block(n);
      for (auto& b : block) b = static_cast<std::uint8_t>(rng());
      const std::size_t target_bytes = 64 * 1024 * 1024;
      const std::size_t reps = std::max<std::size_t>(1, target_bytes / n);
      auto t0 = clock::now();
#if defined(__x86_64__)
      std::uint64_t c0 = __builtin_ia32_rdtsc();
#endif
      std::uint64_t sink = 0;
      for (std::size_t rep = 0; rep < reps; ++rep) {
        auto rotated = puzzle::rotated_left(block, puzzle::shift_amount(map, rep));
        puzzle::xor_layer_inplace(rotated, rep, xor_key, n);
        auto ct = puzzle::permute_bytes(map, rotated);
        sink += ct[0];
      }
#if defined(__x86_64__)
      std::uint64_t cycles = __builtin_ia32_rdtsc() - c0;
#endif
      double secs = std::chrono::duration<double>(clock::now() - t0).count();
      double mbps = static_cast<double>(reps) * n / 1e6 / secs;
#if defined(__x86_64__)
      double cpb = static_cast<double>(cycles) / (static_cast<double>(reps) * n);
      std::printf("%-10s %-12zu %14.4f %14.1f %12.2f\n",
                  puzzle::map_method_name(method).c_str(), n, build_best, mbps,
                  cpb);
#else
      std::printf("%-10s %-12zu %14.4f %14.1f %12s\n",
                  puzzle::map_method_name(method).c_str(), n, build_best, mbps,
                  "n/a");
#endif
      if (sink == 0xFFFFFFFFFFFFFFFFull) std::printf("\n");
    }
  }
  std::printf("throughput is hardware dependent; figures are reports, not "
              "gates\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"puzzle: a transposition block cipher with keyed permutation "
               "maps, plus its measurement harness"};
  app.require_subcommand(1);

  CommonOpts opts;

  auto* enc = app.add_subcommand("encrypt", "Encrypt a file into a container");
  std::string enc_in, enc_out, enc_iv_hex;
  std::size_t enc_iv_len = 16;
  add_common(enc, opts);
  enc->add_option("-i,--input", enc_in, "Input file")->required();
  enc->add_option("-o,--output", enc_out, "Output container")->required();
  enc->add_option("--iv-len", enc_iv_len, "Random IV length in bytes (>= 8)")
      ->capture_default_str();
  enc->add_option("--iv-hex", enc_iv_hex,
                  "Fixed IV as hex (testing only; never reuse an IV with the "
                  "same password)")
      ->group("");  // hidden

  auto* dec = app.add_subcommand("decrypt", "Decrypt a container");
  std::string dec_in, dec_out;
  add_common(dec, opts);
  dec->add_option("-i,--input", dec_in, "Input container")->required();
  dec->add_option("-o,--output", dec_out, "Output file")->required();

  auto* info = app.add_subcommand(
      "keyinfo", "Show derived key parameters (never key material)");
  std::string info_iv_hex;
  add_common(info, opts);
  info->add_option("--iv-hex", info_iv_hex,
                   "IV as hex, to show the derived block size");

  auto* stats = app.add_subcommand(
      "stats", "Reproduce the statistical measurements and emit CSV/JSONL");
  std::size_t stats_trials = 100, stats_block = 10'000;
  std::uint64_t stats_seed = 0xA11CE;
  std::string stats_dir = "stats-out";
  add_common(stats, opts);
  stats->add_option("--trials", stats_trials, "Number of random-key trials")
      ->capture_default_str();
  stats->add_option("--map-size", stats_block,
                    "Map size in elements for the measurement")
      ->capture_default_str();
  stats->add_option("--seed", stats_seed, "Trial RNG seed")
      ->capture_default_str();
  stats->add_option("--out-dir", stats_dir, "Output directory for CSV/JSONL")
      ->capture_default_str();

  auto* bench = app.add_subcommand(
      "bench", "Measure map construction cost and encrypt throughput");
  add_common(bench, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (enc->parsed()) {
      return run_encrypt(opts, enc_in, enc_out, enc_iv_hex, enc_iv_len);
    }
    if (dec->parsed()) return run_decrypt(opts, dec_in, dec_out);
    if (info->parsed()) return run_keyinfo(opts, info_iv_hex);
    if (stats->parsed()) {
      return run_stats(opts, stats_trials, stats_block, stats_seed, stats_dir);
    }
    if (bench->parsed()) return run_bench(opts);
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const puzzle::FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return kExitFormat;
  } catch (const puzzle::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
