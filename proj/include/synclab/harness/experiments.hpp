// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "synclab/error.hpp"
#include "synclab/harness/config.hpp"
#include "synclab/metrics/backend.hpp"
#include "synclab/model/checkpoint.hpp"
#include "synclab/synth/dataset.hpp"

namespace synclab::harness {

const std::vector<std::string>& experiment_names();

// A pipeline stage failed; partial artifacts stay on disk.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& what)
      : Error("stage '" + stage + "' failed: " + what), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Model variants trained by the ablation experiments.
struct Variant {
  std::string name;
  double lambda = 1.0;
  bool use_rope = true;
};

Variant variant_full();      // lambda = 1, Audio RoPE
Variant variant_no_motion(); // lambda = 0
Variant variant_no_rope();   // lambda = 1, no RoPE

enum class SampleMode { kFull, kOffSync };

struct ClipEval {
  std::string clip_id;
  double cyclesync = 0.0;
  // Mean over script events of |nearest sampled motion peak - event time|,
  // capped at kMaeCapS.
  double onset_mae_s = 0.0;
  std::size_t n_peaks_ref = 0;
  std::size_t n_peaks_rec = 0;
};

inline constexpr double kMaeCapS = 0.5;

double onset_mae(const std::vector<double>& peak_times, const synth::EventScript& script);

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ExperimentResult {
  std::string name;
  std::vector<Check> checks;
  std::vector<std::filesystem::path> artifacts;

  bool passed() const;
};

// Shared state of one run directory: datasets, trained checkpoints and
// sample evaluations are computed once and reused across experiments.
class Workspace {
 public:
  explicit Workspace(ExperimentConfig config);
  ~Workspace();

  const ExperimentConfig& config() const { return config_; }
  const std::filesystem::path& dir() const { return config_.out_dir; }
  const metrics::V2ABackend& backend() const { return *backend_; }

  const std::vector<synth::Clip>& train_clips();
  const std::vector<synth::Clip>& eval_clips();

  // Trains on first use; reuses a checkpoint on disk with the same key.
  const model::Checkpoint& checkpoint(const Variant& v, std::uint64_t seed);
  std::filesystem::path loss_csv_path(const Variant& v, std::uint64_t seed) const;

  const std::vector<ClipEval>& evaluate(const Variant& v, std::uint64_t seed, SampleMode mode, double w_audio);

  // Runs fn as a named stage, recording its status in the run manifest.
  void stage(const std::string& name, const std::function<void()>& fn);
  void add_artifact(const std::filesystem::path& p);
  // Writes run_manifest.json (config echo, hash, stages, artifacts, times).
  void write_manifest() const;

  void set_log(std::function<void(const std::string&)> log) { log_ = std::move(log); }
  void log(const std::string& msg) const {
    if (log_) log_(msg);
  }

 private:
  std::string checkpoint_key(const Variant& v, std::uint64_t seed) const;

  ExperimentConfig config_;
  std::unique_ptr<metrics::V2ABackend> backend_;
  std::vector<synth::Clip> train_clips_;
  std::vector<synth::Clip> eval_clips_;
  std::map<std::string, model::Checkpoint> checkpoints_;
  std::map<std::string, std::vector<ClipEval>> evals_;
  nlohmann::ordered_json stages_ = nlohmann::ordered_json::array();
  std::vector<std::string> artifacts_;
  std::string started_;
  std::function<void(const std::string&)> log_;
};

// Runs one experiment, writing its CSV/SVG/summary under <out>/<name>/.
// Unknown names throw PreconditionError listing the valid ones.
ExperimentResult run_experiment(const std::string& name, Workspace& ws);

std::string summary_markdown(const ExperimentResult& r, const nlohmann::ordered_json& headline);

}  // namespace synclab::harness
