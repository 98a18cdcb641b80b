// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "synclab/model/rope.hpp"

#include <cmath>
#include <string>

#include "synclab/error.hpp"

namespace synclab::model {

void rope_rotate_inplace(double* x, std::size_t d, double position, double base) {
  if (d % 2 != 0) throw DimensionError("rope_rotate: odd dimension " + std::to_string(d));
  if (position == 0.0) return;
  for (std::size_t k = 0; k < d / 2; ++k) {
    const double theta = position * std::pow(base, -2.0 * static_cast<double>(k) / static_cast<double>(d));
    const double c = std::cos(theta), s = std::sin(theta);
    const double x0 = x[2 * k], x1 = x[2 * k + 1];
    x[2 * k] = x0 * c - x1 * s;
    x[2 * k + 1] = x0 * s + x1 * c;
  }
}

void rope_rotate_3d(double* x, const RopeAxes& axes, const PositionIndex& p, double base) {
  const double pos[3] = {p.l, p.h, p.w};
  std::size_t off = 0;
  for (int a = 0; a < 3; ++a) {
    if (axes[a] > 0) rope_rotate_inplace(x + off, axes[a], pos[a], base);
    off += axes[a];
  }
}

Tensor rope_rotate(const Tensor& x, double position, double base) {
  if (x.rank() != 1) throw DimensionError("rope_rotate: expected a vector, got " + shape_str(x.shape()));
  std::vector<double> v(x.data().begin(), x.data().end());
  rope_rotate_inplace(v.data(), v.size(), position, base);
  const std::size_t n = v.size();
  return Tensor({n}, std::move(v));
}

RotaryEmbedder::RotaryEmbedder(RopeAxes axes, double base) : axes_(axes), base_(base) {
  for (std::size_t a : axes_) {
    if (a % 2 != 0) throw DimensionError("RotaryEmbedder: axis dims must be even");
  }
  if (!(base > 0.0)) throw PreconditionError("RotaryEmbedder: base must be positive");
}

}  // namespace synclab::model
