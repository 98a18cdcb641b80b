// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "synclab/harness/config.hpp"

#include <cstdio>
#include <fstream>

#include "synclab/error.hpp"

namespace synclab::harness {

namespace {

nlohmann::json dataset_json(const synth::DatasetParams& d) {
  return {{"seed", d.seed},
          {"n_clips", d.n_clips},
          {"duration_s", d.duration_s},
          {"events_min", d.events_min},
          {"events_max", d.events_max},
          {"lead_min_s", d.lead_min_s},
          {"lead_max_s", d.lead_max_s},
          {"lag_min_s", d.lag_min_s},
          {"lag_max_s", d.lag_max_s},
          {"amplitude_min", d.amplitude_min},
          {"amplitude_max", d.amplitude_max},
          {"edge_margin_s", d.edge_margin_s},
          {"min_gap_s", d.min_gap_s}};
}

template <class T>
void get(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

synth::DatasetParams dataset_from_json(const nlohmann::json& j, synth::DatasetParams d) {
  get(j, "seed", d.seed);
  get(j, "n_clips", d.n_clips);
  get(j, "duration_s", d.duration_s);
  get(j, "events_min", d.events_min);
  get(j, "events_max", d.events_max);
  get(j, "lead_min_s", d.lead_min_s);
  get(j, "lead_max_s", d.lead_max_s);
  get(j, "lag_min_s", d.lag_min_s);
  get(j, "lag_max_s", d.lag_max_s);
  get(j, "amplitude_min", d.amplitude_min);
  get(j, "amplitude_max", d.amplitude_max);
  get(j, "edge_margin_s", d.edge_margin_s);
  get(j, "min_gap_s", d.min_gap_s);
  return d;
}

}  // namespace

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) { throw PreconditionError("config: " + what); };
  if (name.empty()) fail("name must be nonempty");
  if (seeds.empty()) fail("seeds must be nonempty");
  if (dataset.n_clips == 0) fail("dataset.n_clips must be positive");
  if (eval.n_clips == 0) fail("eval.n_clips must be positive");
  if (dataset.events_min < 0 || dataset.events_max < dataset.events_min) fail("bad dataset event range");
  if (!(metrics.delta_s >= 0.0)) fail("metrics.delta_s must be >= 0");
  if (metrics.delays_s.empty()) fail("metrics.delays_s must be nonempty");
  if (!(metrics.av_align_fps > 0.0)) fail("metrics.av_align_fps must be positive");
  if (asg_weights.empty()) fail("asg_weights must be nonempty");
  if (out_dir.empty()) fail("out_dir must be set");
  model.validate();
  guidance.validate();
  const auto frames = static_cast<std::size_t>(std::lround(dataset.duration_s * 24.0));
  if (frames != model.frames) {
    fail("model.frames (" + std::to_string(model.frames) + ") does not match dataset duration (" +
         std::to_string(frames) + " frames)");
  }
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = c.name;
  j["seed"] = c.seed;
  j["seeds"] = c.seeds;
  j["dataset"] = dataset_json(c.dataset);
  j["eval"] = {{"n_clips", c.eval.n_clips}, {"seed_offset", c.eval.seed_offset}};
  j["model"] = nlohmann::json::parse(model::to_json(c.model).dump());
  j["train"] = nlohmann::json::parse(model::to_json(c.train).dump());
  j["guidance"] = nlohmann::json::parse(sampler::to_json(c.guidance).dump());
  j["metrics"] = {{"delta_s", c.metrics.delta_s},
                  {"mode", metrics::score_mode_name(c.metrics.mode)},
                  {"delays_s", c.metrics.delays_s},
                  {"av_align_fps", c.metrics.av_align_fps}};
  j["asg_weights"] = c.asg_weights;
  j["backend"] = c.backend;
  j["out_dir"] = c.out_dir.string();
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("config: expected a JSON object");
  if (j.contains("schema_version") && j.at("schema_version").get<int>() != kSchemaVersion) {
    throw FormatError("config: unsupported schema_version " + j.at("schema_version").dump());
  }
  if (!j.contains("seed")) throw PreconditionError("config: 'seed' is mandatory");
  ExperimentConfig c;
  try {
    get(j, "name", c.name);
    get(j, "seed", c.seed);
    get(j, "seeds", c.seeds);
    if (j.contains("dataset")) c.dataset = dataset_from_json(j.at("dataset"), c.dataset);
    if (j.contains("eval")) {
      get(j.at("eval"), "n_clips", c.eval.n_clips);
      get(j.at("eval"), "seed_offset", c.eval.seed_offset);
    }
    if (j.contains("model")) c.model = model::model_config_from_json(j.at("model"));
    if (j.contains("train")) c.train = model::train_params_from_json(j.at("train"));
    if (j.contains("guidance")) c.guidance = sampler::guidance_from_json(j.at("guidance"));
    if (j.contains("metrics")) {
      const auto& m = j.at("metrics");
      get(m, "delta_s", c.metrics.delta_s);
      if (m.contains("mode")) c.metrics.mode = metrics::parse_score_mode(m.at("mode").get<std::string>());
      get(m, "delays_s", c.metrics.delays_s);
      get(m, "av_align_fps", c.metrics.av_align_fps);
    }
    get(j, "asg_weights", c.asg_weights);
    get(j, "backend", c.backend);
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot read " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("config: " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::uint64_t config_hash(const ExperimentConfig& c) {
  nlohmann::json j = to_json(c);
  j.erase("out_dir");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace synclab::harness
