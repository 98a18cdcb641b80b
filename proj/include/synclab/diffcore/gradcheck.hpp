// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

#include "synclab/diffcore/tensor.hpp"

namespace synclab {

using ScalarFn = std::function<Tensor(const Tensor&)>;

// Max over coordinates of |analytic - central difference| /
// max(|analytic|, |fd|, 1e-8). f must be deterministic and return a scalar.
double finite_diff_check(const ScalarFn& f, const Tensor& x, double eps = 1e-5);

}  // namespace synclab
