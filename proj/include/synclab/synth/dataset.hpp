// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "synclab/audio/waveform.hpp"
#include "synclab/synth/event_script.hpp"
#include "synclab/synth/world.hpp"

namespace synclab::synth {

struct DatasetParams {
  std::uint64_t seed = 7;
  std::size_t n_clips = 64;
  double duration_s = 2.0;
  int events_min = 1;
  int events_max = 4;
  double lead_min_s = 0.0;
  double lead_max_s = 0.0;
  double lag_min_s = 0.0;
  double lag_max_s = 0.0;
  double amplitude_min = 0.5;
  double amplitude_max = 1.0;
  // Event times keep this far from the clip edges and from each other.
  double edge_margin_s = 0.25;
  double min_gap_s = 0.25;
};

// Deterministic script for clip `index` of a dataset.
EventScript make_script(const DatasetParams& params, std::size_t index, const WorldConfig& world = {});

struct Clip {
  std::string id;
  EventScript script;
  audio::Waveform audio;
  LatentSequence latents;
  AudioFeatureSequence features;
};

// Generates clip `index` fully in memory (audio is PCM16-quantized so it
// matches what the dataset writes to disk).
Clip make_clip(const DatasetParams& params, std::size_t index, const WorldConfig& world = {});

struct ManifestRow {
  std::string id;
  std::string wav;
  std::string latents;
  std::string features;
  std::string script;
};

struct Manifest {
  std::filesystem::path root;
  std::vector<ManifestRow> rows;

  static Manifest load(const std::filesystem::path& manifest_path);
  Clip load_clip(std::size_t index) const;
  std::vector<Clip> load_all() const;
};

inline constexpr const char* kManifestName = "manifest.jsonl";

// Writes n_clips of (wav, latents, features, script) plus manifest.jsonl into
// out_dir. Paths in the manifest are relative to out_dir.
Manifest gen_dataset(const DatasetParams& params, const std::filesystem::path& out_dir,
                     const WorldConfig& world = {});

}  // namespace synclab::synth
