// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

// synclab command line: dataset synthesis, training, sampling, metric
// evaluation and the experiment harness.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "synclab/audio/wav.hpp"
#include "synclab/diffcore/sptn.hpp"
#include "synclab/harness/config.hpp"
#include "synclab/harness/experiments.hpp"
#include "synclab/metrics/cyclesync.hpp"
#include "synclab/metrics/delay_sweep.hpp"
#include "synclab/metrics/report.hpp"
#include "synclab/sampler/sampler.hpp"
#include "synclab/synth/oracle_v2a.hpp"

namespace {

using namespace synclab;
namespace fs = std::filesystem;

constexpr int kExitUsage = 2;
constexpr int kExitStage = 3;
constexpr int kExitCheck = 4;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> w_audio;
  std::optional<double> w_text;
  std::optional<std::size_t> steps;
  std::optional<double> delta_ms;
  std::optional<std::string> mode;
  std::optional<std::string> backend;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  app->add_option("--seed", o.seed, "run seed");
  app->add_option("--out", o.out, "output directory");
  app->add_option("--w-audio", o.w_audio, "audio sync guidance weight");
  app->add_option("--w-text", o.w_text, "classifier-free guidance weight");
  app->add_option("--steps", o.steps, "training steps (sampler steps for 'sample')");
  app->add_option("--delta-ms", o.delta_ms, "peak matching tolerance in milliseconds");
  app->add_option("--mode", o.mode, "score mode")->check(CLI::IsMember({"f1", "paper"}));
  app->add_option("--backend", o.backend, "oracle | external:<cmd>");
}

harness::ExperimentConfig resolve(const Overrides& o, bool steps_are_sampler_steps) {
  harness::ExperimentConfig c;
  nlohmann::json j = o.config.empty() ? harness::to_json(c) : nlohmann::json::parse(std::ifstream(o.config));
  if (o.seed) j["seed"] = *o.seed;
  if (o.out) j["out_dir"] = *o.out;
  if (!j.contains("guidance")) j["guidance"] = nlohmann::json::object();
  if (o.w_audio) j["guidance"]["w_audio"] = *o.w_audio;
  if (o.w_text) j["guidance"]["w_text"] = *o.w_text;
  if (o.steps) {
    if (steps_are_sampler_steps) {
      j["guidance"]["steps"] = *o.steps;
    } else {
      if (!j.contains("train")) j["train"] = nlohmann::json::object();
      j["train"]["steps"] = *o.steps;
    }
  }
  if (!j.contains("metrics")) j["metrics"] = nlohmann::json::object();
  if (o.delta_ms) j["metrics"]["delta_s"] = *o.delta_ms / 1000.0;
  if (o.mode) j["metrics"]["mode"] = *o.mode;
  if (o.backend) j["backend"] = *o.backend;
  return harness::config_from_json(j);
}

harness::Variant parse_variant(const std::string& name) {
  for (const auto& v : {harness::variant_full(), harness::variant_no_motion(), harness::variant_no_rope()}) {
    if (v.name == name) return v;
  }
  throw PreconditionError("unknown variant '" + name + "' (full, no_motion_loss, no_rope)");
}

void log_stderr(harness::Workspace& ws) {
  ws.set_log([](const std::string& msg) { std::cerr << "[synclab] " << msg << "\n"; });
}

int cmd_synth(const Overrides& o) {
  harness::Workspace ws(resolve(o, false));
  log_stderr(ws);
  const auto& clips = ws.train_clips();
  ws.write_manifest();
  std::cout << clips.size() << " clips in " << (ws.dir() / "dataset").string() << "\n";
  return 0;
}

int cmd_train(const Overrides& o, const std::string& variant) {
  harness::Workspace ws(resolve(o, false));
  log_stderr(ws);
  const auto v = parse_variant(variant);
  const auto& ck = ws.checkpoint(v, ws.config().seed);
  ws.write_manifest();
  std::cout << "checkpoint step " << ck.train_step << ", loss curve " << ws.loss_csv_path(v, ws.config().seed).string()
            << "\n";
  return 0;
}

int cmd_sample(const Overrides& o, const std::string& variant, const std::string& checkpoint, std::size_t clip_index,
               bool offsync, std::optional<std::size_t> skip_block) {
  harness::Workspace ws(resolve(o, true));
  log_stderr(ws);
  const auto& cfg = ws.config();
  model::Checkpoint ck = checkpoint.empty() ? ws.checkpoint(parse_variant(variant), cfg.seed)
                                            : model::load_checkpoint(checkpoint);
  const auto m = ck.model();
  const auto& clips = ws.eval_clips();
  if (clip_index >= clips.size()) {
    throw PreconditionError("--clip " + std::to_string(clip_index) + " out of range (eval set has " +
                            std::to_string(clips.size()) + " clips)");
  }
  const auto& clip = clips[clip_index];
  sampler::SampleRequest req;
  const auto z = clip.latents.latents.data();
  const std::size_t ch = clip.latents.channels();
  req.init_latent = Tensor({ch}, std::vector<double>(z.begin(), z.begin() + static_cast<long>(ch)));
  req.audio = clip.features.features;
  req.class_id = clip.script.clip_class;
  req.seed = cfg.seed * 1000 + 100 + clip_index;
  req.guidance = cfg.guidance;

  std::string mode = offsync ? "offsync" : "full";
  sampler::SampleOutput out;
  ws.stage("sample", [&] {
    if (skip_block) {
      mode = "skip" + std::to_string(*skip_block);
      out = sampler::skip_block_probe(m, req, *skip_block);
    } else {
      out = offsync ? sampler::sample_offsync(m, req) : sampler::sample(m, req);
    }
  });
  const fs::path base = ws.dir() / "samples" / (clip.id + "_" + mode);
  fs::create_directories(base.parent_path());
  sptn::write_file(base.string() + ".sptn", out.latents.latents);
  metrics::write_text(base.string() + ".json", sampler::sample_sidecar(req, out, mode).dump(2) + "\n");
  const double cs = metrics::cyclesync(clip.audio, out.latents, ws.backend(), {cfg.metrics.delta_s, cfg.metrics.mode});
  ws.write_manifest();
  std::cout << base.string() << ".sptn cyclesync " << metrics::fmt_fixed(100.0 * cs, 3) << "\n";
  return 0;
}

int cmd_eval(const Overrides& o, const std::string& latents, const std::string& audio_path) {
  harness::Workspace ws(resolve(o, false));
  log_stderr(ws);
  const auto& cfg = ws.config();
  metrics::CycleSyncParams csp;
  csp.delta_s = cfg.metrics.delta_s;
  csp.mode = cfg.metrics.mode;
  if (!latents.empty()) {
    if (audio_path.empty()) throw PreconditionError("--latents requires --audio");
    const synth::LatentSequence v{sptn::read_file(latents), 24.0};
    const auto a = audio::load_wav(audio_path);
    const auto r = metrics::cyclesync_detail(a, v, ws.backend(), csp);
    metrics::AvAlignParams ap;
    ap.fps = cfg.metrics.av_align_fps;
    const double av = metrics::av_align_clip(audio::detect_onsets(a), v, ap);
    std::cout << "cyclesync " << metrics::fmt_fixed(100.0 * r.score, 3) << " (peaks ref " << r.n_peaks_ref << ", rec "
              << r.n_peaks_rec << ")\nav_align " << metrics::fmt_fixed(100.0 * av, 3) << "\n";
    return 0;
  }
  metrics::SyncReport report;
  ws.stage("eval", [&] {
    metrics::DelaySweepParams p;
    p.delays_s = cfg.metrics.delays_s;
    p.cyclesync = csp;
    p.av_align.fps = cfg.metrics.av_align_fps;
    report = metrics::delay_sweep(ws.train_clips(), ws.backend(), p);
  });
  report.write(ws.dir() / "eval" / "scores.csv", ws.dir() / "eval" / "aggregate.json");
  ws.write_manifest();
  for (const auto& a : report.aggregates) {
    std::cout << a.metric << " delay " << metrics::fmt_fixed(a.delay_s, 2) << " mean "
              << metrics::fmt_fixed(100.0 * a.mean, 3) << " +- " << metrics::fmt_fixed(100.0 * a.ci95, 3) << " ("
              << metrics::fmt_fixed(a.rel_change_pct, 1) << "%)\n";
  }
  return 0;
}

int cmd_experiment(const Overrides& o, const std::vector<std::string>& names) {
  harness::Workspace ws(resolve(o, false));
  log_stderr(ws);
  std::vector<std::string> todo = names;
  if (todo.size() == 1 && todo[0] == "all") todo = harness::experiment_names();
  for (const auto& n : todo) {
    const auto& valid = harness::experiment_names();
    if (std::find(valid.begin(), valid.end(), n) == valid.end()) {
      harness::run_experiment(n, ws);  // throws the usage error listing valid names
    }
  }
  bool ok = true;
  for (const auto& n : todo) {
    const auto r = harness::run_experiment(n, ws);
    for (const auto& c : r.checks) {
      std::cout << n << " " << c.name << ": " << (c.pass ? "PASS" : "FAIL") << " (" << c.detail << ")\n";
    }
    ok = ok && r.passed();
  }
  return ok ? 0 : kExitCheck;
}

int cmd_report(const Overrides& o) {
  const auto cfg = resolve(o, false);
  std::string text = "# SyncLab report: " + cfg.name + "\n\nconfig hash " + harness::hex64(harness::config_hash(cfg)) +
                     "\n\n";
  bool ok = true;
  std::size_t found = 0;
  for (const auto& n : harness::experiment_names()) {
    std::ifstream in(cfg.out_dir / n / "summary.md");
    if (!in) continue;
    ++found;
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (body.find("Result: PASS") == std::string::npos) ok = false;
    std::cout << n << ": " << (body.find("Result: PASS") != std::string::npos ? "PASS" : "FAIL") << "\n";
    text += "#" + body + "\n";
  }
  if (found == 0) throw IoError("report: no experiment summaries under " + cfg.out_dir.string());
  metrics::write_text(cfg.out_dir / "report.md", text);
  return ok ? 0 : kExitCheck;
}

// Reads SPTN latents (24 fps) on stdin, writes the oracle's WAV to stdout.
// Used to exercise the external backend path end to end.
int cmd_v2a_oracle() {
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(std::cin)), std::istreambuf_iterator<char>());
  const synth::LatentSequence v{sptn::decode(bytes), 24.0};
  const auto wav = audio::encode_wav(synth::oracle_v2a(v));
  std::cout.write(reinterpret_cast<const char*>(wav.data()), static_cast<std::streamsize>(wav.size()));
  return std::cout ? 0 : kExitStage;
}

}  // namespace

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  CLI::App app{"synclab: audio-synchronized video generation testbed"};
  app.require_subcommand(1);
  Overrides o;

  auto* synth = app.add_subcommand("synth", "generate the synthetic dataset");
  add_common(synth, o);

  std::string variant = "full";
  auto* train = app.add_subcommand("train", "train the toy model");
  add_common(train, o);
  train->add_option("--variant", variant, "full | no_motion_loss | no_rope");

  std::string checkpoint;
  std::size_t clip = 0;
  bool offsync = false;
  std::optional<std::size_t> skip_block;
  auto* sample = app.add_subcommand("sample", "sample one eval clip");
  add_common(sample, o);
  sample->add_option("--variant", variant, "model variant when no checkpoint is given");
  sample->add_option("--checkpoint", checkpoint, "checkpoint file")->check(CLI::ExistingFile);
  sample->add_option("--clip", clip, "eval clip index");
  sample->add_flag("--offsync", offsync, "sample with audio layers bypassed");
  sample->add_option("--skip-block", skip_block, "bypass one transformer block");

  std::string latents, audio_path;
  auto* eval = app.add_subcommand("eval", "delay sweep on the dataset, or score one latents/audio pair");
  add_common(eval, o);
  eval->add_option("--latents", latents, "SPTN latent video")->check(CLI::ExistingFile);
  eval->add_option("--audio", audio_path, "WAV audio")->check(CLI::ExistingFile);

  std::vector<std::string> names;
  auto* experiment = app.add_subcommand("experiment", "run named experiments (or 'all')");
  add_common(experiment, o);
  experiment->add_option("names", names, "E1_delay_sweep ... E5_offsync, or all")->required();

  auto* report = app.add_subcommand("report", "collect experiment summaries into report.md");
  add_common(report, o);

  auto* oracle = app.add_subcommand("v2a-oracle", "SPTN latents on stdin -> WAV on stdout");
  oracle->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*synth) return cmd_synth(o);
    if (*train) return cmd_train(o, variant);
    if (*sample) return cmd_sample(o, variant, checkpoint, clip, offsync, skip_block);
    if (*eval) return cmd_eval(o, latents, audio_path);
    if (*experiment) return cmd_experiment(o, names);
    if (*report) return cmd_report(o);
    if (*oracle) return cmd_v2a_oracle();
  } catch (const harness::StageError& e) {
    std::cerr << "synclab: " << e.what() << "\n";
    return kExitStage;
  } catch (const PreconditionError& e) {
    std::cerr << "synclab: " << e.what() << "\n";
    return kExitUsage;
  } catch (const FormatError& e) {
    std::cerr << "synclab: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "synclab: " << e.what() << "\n";
    return kExitStage;
  }
  return kExitUsage;
}
