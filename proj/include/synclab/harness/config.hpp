// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "synclab/metrics/matching.hpp"
#include "synclab/model/toy_model.hpp"
#include "synclab/model/train.hpp"
#include "synclab/sampler/guidance.hpp"
#include "synclab/synth/dataset.hpp"

namespace synclab::harness {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

struct MetricParams {
  double delta_s = 0.05;
  metrics::ScoreMode mode = metrics::ScoreMode::kF1;
  std::vector<double> delays_s{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  double av_align_fps = 6.0;
};

struct EvalParams {
  std::size_t n_clips = 16;
  std::uint64_t seed_offset = 1000;  // eval set seed = seed + seed_offset
};

struct ExperimentConfig {
  std::string name = "default";
  std::uint64_t seed = 0;
  // Training seeds for the model experiments.
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  synth::DatasetParams dataset{};
  EvalParams eval{};
  model::ModelConfig model{};
  model::TrainParams train{};
  sampler::GuidanceConfig guidance{};
  MetricParams metrics{};
  std::vector<double> asg_weights{0.0, 1.0, 2.0, 4.0};
  std::string backend = "oracle";
  std::filesystem::path out_dir = "runs/default";

  void validate() const;
};

// Resolved config. out_dir is included for the record but not hashed.
nlohmann::json to_json(const ExperimentConfig& c);

// Missing fields take defaults; "seed" is mandatory, and "schema_version",
// when present, must match.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

// FNV-1a 64 over the canonical (key-sorted) JSON of every semantic field.
std::uint64_t config_hash(const ExperimentConfig& c);
std::string hex64(std::uint64_t v);

}  // namespace synclab::harness
