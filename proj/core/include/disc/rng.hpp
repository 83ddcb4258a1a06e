// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace disc {

/// Counter-based generator: draw i of stream `key` is a pure function of
/// (key, i), so the full state is the pair (key, counter) and can be saved
/// into a checkpoint and restored exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}
  Rng(std::uint64_t key, std::uint64_t counter) : key_(key), counter_(counter) {}

  std::uint64_t next_u64() {
    return mix(key_ + 0x9e3779b97f4a7c15ULL * (++counter_));
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; always consumes exactly two draws.
  double normal();

  /// Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Independent child stream; does not advance this generator.
  Rng split(std::uint64_t stream) const {
    return Rng(mix(key_ ^ mix(stream + 0xbb67ae8584caa73bULL)), 0);
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace disc
