// Copyright 2026 The ctxk Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef CTXK_RNG_HPP_
#define CTXK_RNG_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace ctxk {

// 64-bit FNV-1a. Used for config hashes and for deriving per-item seeds.
std::uint64_t fnv1a64(std::string_view data,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

// Seeded generator with platform-independent output.
//
// The engine is std::mt19937_64, whose sequence is fixed by the C++
// standard. The standard distributions are not, so integer and real draws
// are derived here: integers by rejection sampling on the raw 64-bit
// output, reals from the top 53 bits.
class GenRng {
 public:
  explicit GenRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  // Independent stream for a named sub-task: seed xor FNV-1a(tag).
  GenRng derive(std::string_view tag) const {
    return GenRng(seed_ ^ fnv1a64(tag));
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t uniform_below(std::uint64_t bound);

  // Uniform real in [0, 1).
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  bool bernoulli(double p) { return uniform01() < p; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }
  template <typename T>
  void shuffle(std::vector<T>& items) {
    shuffle(std::span<T>(items));
  }

  // k distinct indices from [0, n) in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace ctxk

#endif  // CTXK_RNG_HPP_
