// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "synclab/model/toy_model.hpp"
#include "synclab/sampler/guidance.hpp"
#include "synclab/synth/world.hpp"

namespace synclab::sampler {

struct SampleRequest {
  Tensor init_latent;  // [channels], the clean first frame
  Tensor audio;        // [audio_length, audio_dim]
  int class_id = 1;
  std::uint64_t seed = 0;
  GuidanceConfig guidance{};
  std::set<std::size_t> skip_blocks;
  double frame_rate_hz = 24.0;
  // Evaluate the off-sync branch even when w_audio = 0 (reference semantics;
  // results are identical either way).
  bool always_eval_offsync = false;
};

struct StepTrace {
  std::size_t step = 0;
  double t = 0.0;
  double pred_norm = 0.0;   // Frobenius norm of the guided velocity
  double state_norm = 0.0;  // after the update
};

struct SampleOutput {
  synth::LatentSequence latents;
  std::vector<StepTrace> trace;
};

// Euler integration from seeded noise at t=0 to t=1. Every step evaluates the
// full, off-sync and null branches and combines them with
// guided_prediction (the off-sync call is skipped when w_audio = 0, which
// cannot change the result). Frame 0 is clamped to init_latent throughout.
SampleOutput sample(const model::ToyModel& model, const SampleRequest& req);

// Same trajectory with every branch audio-free and w_audio = 0: the off-sync
// model guided only by the text term. Independent of req.audio.
SampleOutput sample_offsync(const model::ToyModel& model, const SampleRequest& req);

// One sample with `block` bypassed.
SampleOutput skip_block_probe(const model::ToyModel& model, const SampleRequest& req, std::size_t block);

struct BlockProbeRow {
  std::size_t block = 0;
  bool audio_block = false;
  double divergence = 0.0;       // ||out - baseline||_F
  double first_frame_mse = 0.0;  // on frame 1, the first generated frame
};

// Probes every block against the unskipped baseline.
std::vector<BlockProbeRow> skip_block_sweep(const model::ToyModel& model, const SampleRequest& req);

// block,audio_block,divergence,first_frame_mse
std::string block_probe_csv(const std::vector<BlockProbeRow>& rows);

// Request echo plus per-step norms.
nlohmann::ordered_json sample_sidecar(const SampleRequest& req, const SampleOutput& out, const std::string& mode);

}  // namespace synclab::sampler
