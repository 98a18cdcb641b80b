// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "synclab/diffcore/tensor.hpp"

namespace synclab::model {

struct LossParts {
  Tensor total;
  Tensor mse;     // mean((pred - gt)^2)
  Tensor motion;  // mean(((pred - gt) * (gt - gt_prev))^2), before lambda
};

// mse + lambda * motion. lambda = 0 gives plain MSE exactly. gt_prev is the
// previous ground-truth frame of each row (the first frame passes gt itself).
LossParts motion_aware_loss_parts(const Tensor& pred, const Tensor& gt, const Tensor& gt_prev, double lambda = 1.0);

Tensor motion_aware_loss(const Tensor& pred, const Tensor& gt, const Tensor& gt_prev, double lambda = 1.0);

}  // namespace synclab::model
