// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "synclab/model/toy_model.hpp"

namespace synclab::model {

struct Checkpoint {
  ModelConfig config;
  ParamMap params;
  std::uint64_t train_step = 0;
  std::uint64_t seed = 0;
  // Free-form training settings echoed into the header.
  nlohmann::ordered_json train_info = nlohmann::ordered_json::object();

  ToyModel model() const { return ToyModel(config, params); }
  // Throws NumericError naming the first non-finite parameter.
  void validate() const;
};

// Layout: "SLCK", u64 little-endian header length, JSON header
// {format, config, step, seed, train, params: [names]}, then one SPTN blob per
// parameter in header order.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace synclab::model
