// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>

#include "synclab/diffcore/tensor.hpp"

namespace synclab::model {

// Frame coordinate of a token. Toy latents are one vector per frame, so h and
// w stay 0; the embedder still takes all three axes.
struct PositionIndex {
  double l = 0.0;
  double h = 0.0;
  double w = 0.0;
};

// How many feature dims each axis rotates, in (l, h, w) order. Each entry
// must be even; they sum to the head dim.
using RopeAxes = std::array<std::size_t, 3>;

// Rotates adjacent pairs (x[2k], x[2k+1]) by position / base^(2k/d).
void rope_rotate_inplace(double* x, std::size_t d, double position, double base);

// Same with the per-axis split: the first axes[0] dims rotate with l, the
// next axes[1] with h, the last axes[2] with w.
void rope_rotate_3d(double* x, const RopeAxes& axes, const PositionIndex& p, double base);

// Unrecorded convenience over a 1-D tensor. Odd length throws.
Tensor rope_rotate(const Tensor& x, double position, double base = 10000.0);

// Shared positional embedder used for both video queries and audio keys.
class RotaryEmbedder {
 public:
  RotaryEmbedder(RopeAxes axes, double base);

  std::size_t dim() const { return axes_[0] + axes_[1] + axes_[2]; }
  const RopeAxes& axes() const { return axes_; }
  double base() const { return base_; }

  void rotate(double* x, const PositionIndex& p) const { rope_rotate_3d(x, axes_, p, base_); }
  // Transpose of rotate (rotation by the negated position).
  void unrotate(double* x, const PositionIndex& p) const {
    rope_rotate_3d(x, axes_, PositionIndex{-p.l, -p.h, -p.w}, base_);
  }

 private:
  RopeAxes axes_;
  double base_;
};

}  // namespace synclab::model
