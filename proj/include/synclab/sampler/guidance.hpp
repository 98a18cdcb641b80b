// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include <json.hpp>

#include "synclab/diffcore/tensor.hpp"

namespace synclab::sampler {

struct GuidanceConfig {
  double w_audio = 2.0;
  double w_text = 4.0;
  // Text weight used on the first denoising step.
  double w_text_first = 7.0;
  std::size_t steps = 30;

  void validate() const;
};

nlohmann::ordered_json to_json(const GuidanceConfig& g);
GuidanceConfig guidance_from_json(const nlohmann::json& j);

// pred_full + w_audio (pred_full - pred_offsync) + w_text (pred_full - pred_null).
// Both weights zero returns pred_full bit-exactly.
Tensor guided_prediction(const Tensor& pred_full, const Tensor& pred_offsync, const Tensor& pred_null,
                         double w_audio, double w_text);

}  // namespace synclab::sampler
