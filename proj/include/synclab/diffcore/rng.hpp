// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>

#include "synclab/diffcore/tensor.hpp"

namespace synclab {

// Counter-based generator (Philox4x32-10). The stream is a pure function of
// (seed, stream id, draw index), so forked streams are reproducible no matter
// which thread consumes them or in what order.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "philox4x32-10";

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Independent child stream; does not advance this generator.
  Rng fork(std::uint64_t stream) const;

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  // [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  // Inclusive integer range.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  double normal();

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int next_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Standard normal tensor. Empty shape is a precondition error.
Tensor sample_normal(Rng& rng, const Shape& shape);

}  // namespace synclab
