// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "synclab/model/checkpoint.hpp"
#include "synclab/synth/dataset.hpp"

namespace synclab::model {

struct TrainParams {
  std::size_t steps = 2000;
  double lr = 1e-3;
  std::size_t batch = 4;
  double lambda = 1.0;
  std::uint64_t seed = 0;
  // Condition dropout: null condition (class 0, zero audio) and off-sync
  // (audio layers bypassed), per sample.
  double null_dropout = 0.1;
  double offsync_dropout = 0.1;
  double grad_clip = 1.0;
  std::size_t warmup_steps = 50;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

nlohmann::ordered_json to_json(const TrainParams& p);
TrainParams train_params_from_json(const nlohmann::json& j);

// One training clip in model layout.
struct TrainExample {
  Tensor latents;  // [frames, channels]
  Tensor audio;    // [audio_length, audio_dim]
  int class_id = 1;
};

TrainExample make_example(const synth::Clip& clip);

struct LossRow {
  std::size_t step = 0;
  double loss = 0.0;
  double mse_term = 0.0;
  double motion_term = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LossRow> curve;
};

// Flow-matching training with the motion-aware loss. Deterministic given
// params.seed. steps = 0 returns the initialization. A non-finite loss throws
// NumericError naming the step.
TrainResult train(const ModelConfig& config, const std::vector<TrainExample>& data, const TrainParams& params,
                  const std::function<void(const LossRow&)>& on_step = {});

// step,loss,mse_term,motion_term
std::string loss_csv(const std::vector<LossRow>& curve);

// Mean loss over the first and last 10% of the curve (at least one row each).
std::pair<double, double> loss_window_means(const std::vector<LossRow>& curve);

}  // namespace synclab::model
