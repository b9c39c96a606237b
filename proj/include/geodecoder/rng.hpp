// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace geodecoder {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Order-sensitive combination of two keys into one well-mixed 64-bit value.
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept;

/// FNV-1a over bytes.
std::uint64_t fnv1a(std::string_view bytes) noexcept;

/// Uniform double in [0, 1) from a 64-bit counter value.
double to_unit(std::uint64_t bits) noexcept;

// Seeded random source. The engine is std::mt19937_64; the transforms to
// uniform / normal / integer draws are implemented here so that sequences
// do not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// [0, 1)
  double uniform() { return to_unit(engine_()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Inclusive range, unbiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(n) - 1)); }

  /// Standard normal via Box-Muller.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Independent stream derived from this stream's seed and a key.
  Rng substream(std::uint64_t key) const { return Rng(hash_combine(seed_, key)); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace geodecoder
