// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace puzzle {

/// The ordered set {0, 1, ..., n-1} supporting select-by-rank and
/// remove-by-rank in O(log n), backed by a Fenwick tree of presence counts
/// with binary-lifting descent.
class OrderStatisticSet {
public:
  explicit OrderStatisticSet(std::size_t n) : n_(n), size_(n), tree_(n + 1) {
    // tree_[i] initialized to the Fenwick aggregate of all-ones.
    for (std::size_t i = 1; i <= n_; ++i) {
      tree_[i] += 1;
      std::size_t parent = i + (i & (~i + 1));
      if (parent <= n_) tree_[parent] += tree_[i];
    }
    log_ = 0;
    while ((std::size_t{1} << (log_ + 1)) <= n_) ++log_;
  }

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  /// Removes and returns the element with the given rank (0-based, in
  /// ascending order).
  std::size_t take(std::size_t rank) {
    if (rank >= size_) throw std::out_of_range("rank out of range");
    // Descend to the largest index whose prefix sum is <= rank.
    std::size_t pos = 0;
    std::size_t remaining = rank + 1;
    for (std::size_t step = std::size_t{1} << log_; step > 0; step >>= 1) {
      std::size_t next = pos + step;
      if (next <= n_ && tree_[next] < remaining) {
        pos = next;
        remaining -= tree_[next];
      }
    }
    std::size_t value = pos;  // element `pos` is the (rank+1)-th present
    for (std::size_t i = pos + 1; i <= n_; i += i & (~i + 1)) tree_[i] -= 1;
    --size_;
    return value;
  }

private:
  std::size_t n_;
  std::size_t size_;
  std::size_t log_;
  std::vector<std::uint32_t> tree_;
};

}  // namespace puzzle
