// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "synclab/model/loss.hpp"

#include <string>

#include "synclab/diffcore/ops.hpp"
#include "synclab/error.hpp"

namespace synclab::model {

LossParts motion_aware_loss_parts(const Tensor& pred, const Tensor& gt, const Tensor& gt_prev, double lambda) {
  if (pred.shape() != gt.shape() || gt.shape() != gt_prev.shape()) {
    throw DimensionError("motion_aware_loss: shape mismatch " + shape_str(pred.shape()) + " vs " +
                         shape_str(gt.shape()) + " vs " + shape_str(gt_prev.shape()));
  }
  if (!(lambda >= 0.0)) throw PreconditionError("motion_aware_loss: lambda must be >= 0");
  const Tensor resid = ops::sub(pred, gt);
  const Tensor motion_w = ops::sub(gt, gt_prev);
  LossParts out;
  out.mse = ops::mean(ops::square(resid));
  out.motion = ops::mean(ops::square(ops::mul(resid, motion_w)));
  out.total = lambda == 0.0 ? out.mse : ops::add(out.mse, ops::scale(out.motion, lambda));
  return out;
}

Tensor motion_aware_loss(const Tensor& pred, const Tensor& gt, const Tensor& gt_prev, double lambda) {
  return motion_aware_loss_parts(pred, gt, gt_prev, lambda).total;
}

}  // namespace synclab::model
