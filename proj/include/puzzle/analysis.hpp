// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <nlohmann/json.hpp>

#include "puzzle/cipher.hpp"
#include "puzzle/errors.hpp"
#include "puzzle/keyschedule.hpp"
#include "puzzle/params.hpp"
#include "puzzle/permmap.hpp"

// The measurement harness behind the `stats` subcommand: final-position
// traces, nonlinearity profiles of both map methods, uniformity checks, and
// the brute-force cost calculators.
//
// A note on the combined differential-linear relation: an attacker who can
// recover (initial, final) position pairs would try to fit
//
//   final = ((initial + (block_number * A + B) mod block_size) * C + D)
//           mod block_size
//
// with four unknown 32-bit words A, B, C, D. The harness documents this
// relation for reference but ships no solver: the modulo keeps the solution
// set enormous, and positions produced by either map method mostly do not
// satisfy any affine relation at all (that is what the nonlinear
// coefficient below measures).

namespace puzzle {

/// Thresholds the statistics suite is gated on.
constexpr double kChiSquareAlpha = 0.001;
constexpr double kMinUnfoldingCoeff = 0.95;
constexpr double kMaxIterationCoeff = 0.65;
constexpr double kMinDecileOrderedFraction = 0.90;

/// The affine formula output for every initial position, consuming word
/// pairs on the same schedule as the map builders but skipping the
/// collision handling entirely.
inline std::vector<std::uint32_t> raw_position_trace(std::size_t block_size,
                                                     KeyMaterial map_key) {
  std::vector<std::uint32_t> trace(block_size);
  for (std::size_t i = 0; i < block_size; ++i) {
    auto [k_a, k_b] = map_key.next_word_pair();
    trace[i] =
        static_cast<std::uint32_t>(raw_final_position(i, k_a, k_b, block_size));
  }
  return trace;
}

/// Per-map nonlinearity measurement: which entries disagree with the raw
/// affine formula, given the key state the map was built from.
struct MapStats {
  std::vector<std::uint32_t> final_positions;
  std::vector<std::uint8_t> nonlinear_flags;
  double nonlinear_coefficient = 0.0;
  std::vector<std::uint64_t> bucket_counts;
};

/// Replays the builder's word consumption from `key_snapshot` (the state at
/// the start of the build) and flags every position whose final placement
/// differs from the raw formula. The caller is responsible for snapshotting
/// the right state; a wrong snapshot yields a meaningless profile.
inline MapStats nonlinear_profile(const PermutationMap& map,
                                  KeyMaterial key_snapshot) {
  const std::size_t n = map.block_size();
  if (n == 0) throw std::invalid_argument("empty map");
  MapStats stats;
  stats.final_positions = map.forward;
  stats.nonlinear_flags.resize(n);
  stats.bucket_counts.assign(n, 0);
  std::size_t nonlinear = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto [k_a, k_b] = key_snapshot.next_word_pair();
    std::size_t raw = raw_final_position(i, k_a, k_b, n);
    bool flag = map.forward[i] != raw;
    stats.nonlinear_flags[i] = flag;
    nonlinear += flag;
    stats.bucket_counts[map.forward[i]] += 1;
  }
  stats.nonlinear_coefficient = static_cast<double>(nonlinear) / static_cast<double>(n);
  return stats;
}

struct ChiSquareResult {
  double statistic = 0.0;
  double critical_value = 0.0;
  std::size_t degrees_of_freedom = 0;
  bool pass = false;
};

/// Pearson chi-square test of the aggregated final-position histogram
/// against the uniform expectation. Not rejected at `alpha` counts as pass.
inline ChiSquareResult uniformity_test(std::span<const std::uint64_t> bucket_counts,
                                       std::size_t trials,
                                       double alpha = kChiSquareAlpha) {
  if (bucket_counts.size() < 2) {
    throw std::invalid_argument("uniformity test needs at least two buckets");
  }
  if (trials < 30) {
    throw std::invalid_argument("uniformity test needs at least 30 trials");
  }
  std::uint64_t total = 0;
  for (auto c : bucket_counts) total += c;
  const double expected =
      static_cast<double>(total) / static_cast<double>(bucket_counts.size());
  double statistic = 0.0;
  for (auto c : bucket_counts) {
    const double d = static_cast<double>(c) - expected;
    statistic += d * d / expected;
  }
  ChiSquareResult result;
  result.statistic = statistic;
  result.degrees_of_freedom = bucket_counts.size() - 1;
  boost::math::chi_squared dist(static_cast<double>(result.degrees_of_freedom));
  result.critical_value = boost::math::quantile(dist, 1.0 - alpha);
  result.pass = statistic <= result.critical_value;
  return result;
}

/// log10 of block_size! — the cost of brute-forcing the reordering.
inline double log10_permutations(std::uint64_t block_size) {
  if (block_size == 0) throw std::invalid_argument("block size must be positive");
  return std::lgamma(static_cast<double>(block_size) + 1.0) / std::log(10.0);
}

/// log10 of 2^key_bits — the cost of brute-forcing the key.
inline double log10_keyspace(std::uint64_t key_bits) {
  if (key_bits == 0) throw std::invalid_argument("key size must be positive");
  return static_cast<double>(key_bits) * std::log10(2.0);
}

// ---------------------------------------------------------------------------
// Differential probe

struct DifferenceReport {
  std::vector<std::size_t> positions;  // differing ciphertext body offsets
  std::size_t predicted_position = 0;
  bool single_difference_at_prediction = false;
};

/// Encrypts `plaintext` twice under identical fresh states, once verbatim
/// and once with the byte at `byte_index` XORed by `flip_mask`, and reports
/// where the ciphertext bodies differ. For byte granularity the flipped
/// byte relocates through the shift and the permutation but never spreads,
/// so the expected report is a single difference at the predicted offset.
inline DifferenceReport differential_probe(
    const std::function<PuzzleStream()>& make_stream,
    std::span<const std::uint8_t> plaintext, std::size_t byte_index,
    std::uint8_t flip_mask = 0xFF) {
  if (flip_mask == 0) throw std::invalid_argument("flip mask must be non-zero");
  if (byte_index >= plaintext.size()) {
    throw std::invalid_argument("flip index beyond the plaintext");
  }

  PuzzleStream reference = make_stream();
  if (reference.params().granularity != Granularity::kByte) {
    throw std::invalid_argument("the probe prediction covers byte granularity");
  }

  struct BlockRecord {
    std::vector<std::uint32_t> forward;
    std::size_t shift;
  };
  std::vector<BlockRecord> records;
  reference.set_block_observer(
      [&records](std::uint64_t, const PermutationMap& map, std::size_t shift) {
        records.push_back({map.forward, shift});
      });

  auto encrypt_all = [&](PuzzleStream& stream,
                         std::span<const std::uint8_t> pt) {
    std::vector<std::uint8_t> body;
    std::size_t pos = 0;
    for (const BlockExtent& extent :
         plan_message(pt.size(), stream.params(), stream.block_size())) {
      std::vector<std::uint8_t> block(extent.elements, 0);
      std::copy_n(pt.begin() + pos, extent.payload_elements, block.begin());
      pos += extent.payload_elements;
      auto ct = stream.encrypt_block(block);
      body.insert(body.end(), ct.begin(), ct.end());
    }
    return body;
  };

  auto base = encrypt_all(reference, plaintext);

  std::vector<std::uint8_t> flipped(plaintext.begin(), plaintext.end());
  flipped[byte_index] ^= flip_mask;
  PuzzleStream other = make_stream();
  auto variant = encrypt_all(other, flipped);

  DifferenceReport report;
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (base[i] != variant[i]) report.positions.push_back(i);
  }

  // Locate the block holding the flipped byte and push the local offset
  // through that block's shift and permutation.
  const std::size_t block_size = reference.block_size();
  const std::size_t block = byte_index / block_size;
  const std::size_t local = byte_index % block_size;
  const BlockRecord& rec = records.at(block);
  const std::size_t len = rec.forward.size();
  const std::size_t after_shift = (local + len - rec.shift % len) % len;
  report.predicted_position = block * block_size + rec.forward[after_shift];
  report.single_difference_at_prediction =
      report.positions.size() == 1 &&
      report.positions.front() == report.predicted_position;
  return report;
}

// ---------------------------------------------------------------------------
// Appendix reproduction suite

struct AppendixTrial {
  std::vector<std::uint32_t> raw_trace;       // appendix 1
  std::vector<std::uint32_t> iteration_map;   // appendix 2
  std::vector<std::uint32_t> unfolding_map;   // appendix 3
  std::vector<std::uint8_t> iteration_flags;  // appendix 4
  std::vector<std::uint8_t> unfolding_flags;  // appendix 5
  double iteration_coeff = 0.0;
  double unfolding_coeff = 0.0;
};

struct AppendixSummary {
  std::size_t block_size = 0;
  std::size_t trials = 0;
  ChiSquareResult raw_uniformity;
  ChiSquareResult iteration_uniformity;
  ChiSquareResult unfolding_uniformity;
  double mean_iteration_coeff = 0.0;
  double mean_unfolding_coeff = 0.0;
  std::size_t unfolding_first_linear_trials = 0;  // trials with flag[0] clear
  std::size_t decile_ordered_trials = 0;  // last-decile rate >= first-decile
  bool thresholds_pass = false;
};

struct AppendixResults {
  std::size_t block_size = 0;
  std::vector<AppendixTrial> trials;
  AppendixSummary summary;
};

namespace detail {

inline double flag_rate(std::span<const std::uint8_t> flags, std::size_t begin,
                        std::size_t end) {
  std::size_t set = 0;
  for (std::size_t i = begin; i < end; ++i) set += flags[i];
  return static_cast<double>(set) / static_cast<double>(end - begin);
}

}  // namespace detail

/// Runs `trials` independent measurements at the given block size. Each
/// trial derives a fresh key pair from 64 random password bytes (a 512-bit
/// key with the default algorithm) and evaluates the raw trace, both map
/// methods, and their nonlinearity profiles from the same key.
inline AppendixResults run_appendix_suite(std::size_t block_size,
                                          std::size_t trials,
                                          std::uint64_t seed = 0x517a5ad1,
                                          HashAlg alg = HashAlg::kSha512) {
  if (block_size < 2 || trials == 0) {
    throw std::invalid_argument("need a block size above 1 and at least one trial");
  }
  AppendixResults results;
  results.block_size = block_size;
  results.trials.reserve(trials);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> byte_dist(0, 255);

  std::vector<std::uint64_t> raw_buckets(block_size, 0);

  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<std::uint8_t> password(64);
    for (auto& b : password) b = static_cast<std::uint8_t>(byte_dist(rng));
    KeyPair keys = derive_key_pair(password, alg);

    AppendixTrial trial;
    trial.raw_trace = raw_position_trace(block_size, keys.map_key);
    for (auto v : trial.raw_trace) raw_buckets[v] += 1;

    KeyMaterial snapshot = keys.map_key;
    PermutationMap iter_map = build_map_iteration(block_size, keys.map_key);
    MapStats iter_stats = nonlinear_profile(iter_map, snapshot);
    trial.iteration_map = std::move(iter_map.forward);
    trial.iteration_flags = std::move(iter_stats.nonlinear_flags);
    trial.iteration_coeff = iter_stats.nonlinear_coefficient;

    KeyMaterial unfold_key = snapshot;
    PermutationMap unfold_map = build_map_unfolding(block_size, unfold_key);
    MapStats unfold_stats = nonlinear_profile(unfold_map, snapshot);
    trial.unfolding_map = std::move(unfold_map.forward);
    trial.unfolding_flags = std::move(unfold_stats.nonlinear_flags);
    trial.unfolding_coeff = unfold_stats.nonlinear_coefficient;

    results.trials.push_back(std::move(trial));
  }

  AppendixSummary& s = results.summary;
  s.block_size = block_size;
  s.trials = trials;
  double iter_sum = 0.0, unfold_sum = 0.0;
  const std::size_t decile = block_size / 10;
  std::vector<std::uint64_t> iter_buckets(block_size, 0);
  std::vector<std::uint64_t> unfold_buckets(block_size, 0);
  for (const AppendixTrial& trial : results.trials) {
    iter_sum += trial.iteration_coeff;
    unfold_sum += trial.unfolding_coeff;
    if (trial.unfolding_flags[0] == 0) s.unfolding_first_linear_trials += 1;
    if (decile > 0) {
      double first = detail::flag_rate(trial.iteration_flags, 0, decile);
      double last = detail::flag_rate(trial.iteration_flags,
                                      block_size - decile, block_size);
      if (last >= first) s.decile_ordered_trials += 1;
    }
    for (auto v : trial.iteration_map) iter_buckets[v] += 1;
    for (auto v : trial.unfolding_map) unfold_buckets[v] += 1;
  }
  s.mean_iteration_coeff = iter_sum / static_cast<double>(trials);
  s.mean_unfolding_coeff = unfold_sum / static_cast<double>(trials);

  if (trials >= 30) {
    s.raw_uniformity = uniformity_test(raw_buckets, trials);
    s.iteration_uniformity = uniformity_test(iter_buckets, trials);
    s.unfolding_uniformity = uniformity_test(unfold_buckets, trials);
  }

  s.thresholds_pass =
      trials >= 30 && s.raw_uniformity.pass && s.iteration_uniformity.pass &&
      s.unfolding_uniformity.pass &&
      s.mean_unfolding_coeff >= kMinUnfoldingCoeff &&
      s.mean_iteration_coeff <= kMaxIterationCoeff &&
      s.unfolding_first_linear_trials == trials &&
      static_cast<double>(s.decile_ordered_trials) >=
          kMinDecileOrderedFraction * static_cast<double>(trials);
  return results;
}

/// Writes appendix1.csv ... appendix5.csv under `dir`, one row per (trial,
/// position): final positions for the raw trace and both maps, 0/1
/// nonlinearity flags for the two profiles.
inline void write_appendix_csvs(const AppendixResults& results,
                                const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream os(dir / name, std::ios::trunc);
    if (!os) throw IoError(std::string("cannot write ") + name);
    os << "trial,position,value\n";
    return os;
  };
  auto dump_u32 = [](std::ofstream& os, std::size_t trial,
                     std::span<const std::uint32_t> values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      os << trial << ',' << i << ',' << values[i] << '\n';
    }
  };
  auto dump_u8 = [](std::ofstream& os, std::size_t trial,
                    std::span<const std::uint8_t> values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      os << trial << ',' << i << ',' << static_cast<int>(values[i]) << '\n';
    }
  };
  std::ofstream a1 = open("appendix1.csv");
  std::ofstream a2 = open("appendix2.csv");
  std::ofstream a3 = open("appendix3.csv");
  std::ofstream a4 = open("appendix4.csv");
  std::ofstream a5 = open("appendix5.csv");
  for (std::size_t t = 0; t < results.trials.size(); ++t) {
    const AppendixTrial& trial = results.trials[t];
    dump_u32(a1, t, trial.raw_trace);
    dump_u32(a2, t, trial.iteration_map);
    dump_u32(a3, t, trial.unfolding_map);
    dump_u8(a4, t, trial.iteration_flags);
    dump_u8(a5, t, trial.unfolding_flags);
  }
}

/// One JSON object per line: the three uniformity verdicts, the two mean
/// coefficients against their thresholds, and the structural checks.
inline void write_summary_jsonl(const AppendixSummary& s, std::ostream& os) {
  using nlohmann::json;
  auto chi = [](const char* name, const ChiSquareResult& r) {
    return json{{"check", name},
                {"statistic", r.statistic},
                {"critical_value", r.critical_value},
                {"degrees_of_freedom", r.degrees_of_freedom},
                {"pass", r.pass}};
  };
  os << chi("raw_trace_uniformity", s.raw_uniformity) << '\n';
  os << chi("iteration_map_uniformity", s.iteration_uniformity) << '\n';
  os << chi("unfolding_map_uniformity", s.unfolding_uniformity) << '\n';
  os << json{{"check", "unfolding_nonlinear_coefficient"},
             {"mean", s.mean_unfolding_coeff},
             {"threshold", kMinUnfoldingCoeff},
             {"pass", s.mean_unfolding_coeff >= kMinUnfoldingCoeff}}
     << '\n';
  os << json{{"check", "iteration_nonlinear_coefficient"},
             {"mean", s.mean_iteration_coeff},
             {"threshold", kMaxIterationCoeff},
             {"pass", s.mean_iteration_coeff <= kMaxIterationCoeff}}
     << '\n';
  os << json{{"check", "unfolding_first_element_linear"},
             {"trials", s.unfolding_first_linear_trials},
             {"total", s.trials},
             {"pass", s.unfolding_first_linear_trials == s.trials}}
     << '\n';
  os << json{{"check", "iteration_decile_ordering"},
             {"trials", s.decile_ordered_trials},
             {"total", s.trials},
             {"pass", static_cast<double>(s.decile_ordered_trials) >=
                          kMinDecileOrderedFraction *
                              static_cast<double>(s.trials)}}
     << '\n';
  os << json{{"check", "overall"}, {"pass", s.thresholds_pass}} << '\n';
}

}  // namespace puzzle
