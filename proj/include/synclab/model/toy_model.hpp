// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "synclab/diffcore/rng.hpp"
#include "synclab/diffcore/tensor.hpp"

namespace synclab::model {

struct ModelConfig {
  std::size_t n_blocks = 6;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::set<std::size_t> audio_blocks{3, 4, 5};
  double rope_base = 10000.0;
  bool use_rope = true;
  std::size_t alpha = 4;
  std::size_t delta_window = 1;
  // Class ids 1..class_vocab-1; 0 is the null condition.
  int class_vocab = 4;
  std::size_t latent_channels = 8;
  std::size_t frames = 48;
  std::size_t audio_dim = 16;
  std::size_t mlp_ratio = 2;
  std::size_t time_embed_dim = 16;

  std::size_t tokens() const { return frames + 1; }
  std::size_t audio_length() const { return frames * alpha; }
  // Throws PreconditionError describing the first violated constraint.
  void validate() const;
};

nlohmann::ordered_json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

// Named parameters, iterated in name order.
using ParamMap = std::map<std::string, Tensor>;

struct Conditioning {
  std::vector<int> class_ids;     // one per sample
  std::optional<Tensor> audio;    // [batch * audio_length, audio_dim]
  bool use_audio = true;
  // Per-sample audio switch (empty = all on). Off entries behave exactly as
  // use_audio = false for that sample.
  std::vector<bool> audio_mask;
  std::set<std::size_t> skip_blocks;
};

// Scaled-normal (0.02) projections, zero biases, zero cross-attention output
// heads, so an untrained audio path adds exactly nothing.
ParamMap init_params(const ModelConfig& config, Rng& rng);

// Token embedding [batch*tokens, d] before any block.
Tensor embed(const ModelConfig& config, const ParamMap& p, const Tensor& x, std::span<const double> t,
             const std::vector<int>& class_ids);

// Final norm and projection of the frame tokens: [batch*frames, channels].
Tensor head(const ModelConfig& config, const ParamMap& p, const Tensor& h, std::size_t batch);

// Velocity prediction for noised latents x [batch*frames, channels] at
// diffusion times t (one per sample). Records onto the tape of p / x when
// those are recorded. block_outputs, when given, receives the hidden state
// after every block (skipped blocks repeat their input).
Tensor forward(const ModelConfig& config, const ParamMap& p, const Tensor& x, std::span<const double> t,
               const Conditioning& cond, std::vector<Tensor>* block_outputs = nullptr);

class ToyModel {
 public:
  ToyModel(ModelConfig config, std::uint64_t seed);
  ToyModel(ModelConfig config, ParamMap params) : config_(std::move(config)), params_(std::move(params)) {}

  const ModelConfig& config() const { return config_; }
  const ParamMap& params() const { return params_; }
  ParamMap& mutable_params() { return params_; }

  Tensor forward(const Tensor& x, std::span<const double> t, const Conditioning& cond,
                 std::vector<Tensor>* block_outputs = nullptr) const {
    return model::forward(config_, params_, x, t, cond, block_outputs);
  }

 private:
  ModelConfig config_;
  ParamMap params_;
};

}  // namespace synclab::model
