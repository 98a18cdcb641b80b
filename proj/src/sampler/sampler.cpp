// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "synclab/sampler/sampler.hpp"

#include <cmath>

#include "synclab/error.hpp"
#include "synclab/metrics/report.hpp"

namespace synclab::sampler {

namespace {

double frob(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

SampleOutput run(const model::ToyModel& model, const SampleRequest& req, bool audio_enabled) {
  const auto& cfg = model.config();
  const std::size_t T = cfg.frames, C = cfg.latent_channels;
  req.guidance.validate();
  if (req.init_latent.shape() != Shape{C}) {
    throw DimensionError("sample: init_latent shape " + shape_str(req.init_latent.shape()) + " vs [" +
                         std::to_string(C) + "]");
  }
  if (audio_enabled && req.audio.shape() != Shape{cfg.audio_length(), cfg.audio_dim}) {
    throw DimensionError("sample: audio shape " + shape_str(req.audio.shape()) + " vs [" +
                         std::to_string(cfg.audio_length()) + ", " + std::to_string(cfg.audio_dim) + "]");
  }
  if (req.class_id <= 0 || req.class_id >= cfg.class_vocab) throw PreconditionError("sample: class id out of range");
  for (std::size_t b : req.skip_blocks) {
    if (b >= cfg.n_blocks) throw PreconditionError("sample: skip block " + std::to_string(b) + " out of range");
  }

  Rng rng(req.seed, 0x534D504Cull);
  std::vector<double> x(T * C);
  for (double& v : x) v = rng.normal();
  const auto init = req.init_latent.data();
  auto clamp = [&] { std::copy(init.begin(), init.end(), x.begin()); };
  clamp();

  model::Conditioning full, off, null;
  full.class_ids = {req.class_id};
  full.skip_blocks = req.skip_blocks;
  off = full;
  null = full;
  null.class_ids = {0};
  if (audio_enabled) {
    full.audio = req.audio;
    full.use_audio = true;
    null.audio = Tensor::zeros({cfg.audio_length(), cfg.audio_dim});
    null.use_audio = true;
  } else {
    full.use_audio = false;
    null.use_audio = false;
  }
  off.use_audio = false;

  const GuidanceConfig& g = req.guidance;
  const double dt = 1.0 / static_cast<double>(g.steps);
  SampleOutput out;
  for (std::size_t k = 0; k < g.steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double ts[1] = {t};
    const Tensor xt({T, C}, x);
    const Tensor pf = model.forward(xt, ts, full);
    const Tensor po = g.w_audio != 0.0 || req.always_eval_offsync ? model.forward(xt, ts, off) : pf;
    const Tensor pn = model.forward(xt, ts, null);
    const double wt = k == 0 ? g.w_text_first : g.w_text;
    const Tensor v = guided_prediction(pf, po, pn, g.w_audio, wt);
    const auto vd = v.data();
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += dt * vd[i];
    clamp();
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!std::isfinite(x[i])) throw NumericError("sample: non-finite state at step " + std::to_string(k));
    }
    out.trace.push_back({k, t, frob(vd), frob(x)});
  }
  out.latents = synth::LatentSequence{Tensor({T, C}, std::move(x)), req.frame_rate_hz};
  return out;
}

}  // namespace

SampleOutput sample(const model::ToyModel& model, const SampleRequest& req) { return run(model, req, true); }

SampleOutput sample_offsync(const model::ToyModel& model, const SampleRequest& req) {
  SampleRequest r = req;
  r.guidance.w_audio = 0.0;
  return run(model, r, false);
}

SampleOutput skip_block_probe(const model::ToyModel& model, const SampleRequest& req, std::size_t block) {
  if (block >= model.config().n_blocks) {
    throw PreconditionError("skip_block_probe: block " + std::to_string(block) + " out of range [0, " +
                            std::to_string(model.config().n_blocks) + ")");
  }
  SampleRequest r = req;
  r.skip_blocks.insert(block);
  return sample(model, r);
}

std::vector<BlockProbeRow> skip_block_sweep(const model::ToyModel& model, const SampleRequest& req) {
  const Tensor base_t = sample(model, req).latents.latents;
  const auto base = base_t.data();
  const std::size_t C = model.config().latent_channels;
  std::vector<BlockProbeRow> rows;
  for (std::size_t b = 0; b < model.config().n_blocks; ++b) {
    const Tensor out_t = skip_block_probe(model, req, b).latents.latents;
    const auto out = out_t.data();
    BlockProbeRow row;
    row.block = b;
    row.audio_block = model.config().audio_blocks.count(b) != 0;
    double s = 0.0, f = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += (out[i] - base[i]) * (out[i] - base[i]);
    for (std::size_t c = 0; c < C; ++c) f += (out[C + c] - base[C + c]) * (out[C + c] - base[C + c]);
    row.divergence = std::sqrt(s);
    row.first_frame_mse = f / static_cast<double>(C);
    rows.push_back(row);
  }
  return rows;
}

std::string block_probe_csv(const std::vector<BlockProbeRow>& rows) {
  std::string out = "block,audio_block,divergence,first_frame_mse\n";
  for (const auto& r : rows) {
    out += std::to_string(r.block) + "," + (r.audio_block ? "1" : "0") + "," + metrics::fmt_fixed(r.divergence, 8) +
           "," + metrics::fmt_fixed(r.first_frame_mse, 10) + "\n";
  }
  return out;
}

nlohmann::ordered_json sample_sidecar(const SampleRequest& req, const SampleOutput& out, const std::string& mode) {
  nlohmann::ordered_json j;
  j["mode"] = mode;
  j["class_id"] = req.class_id;
  j["seed"] = req.seed;
  j["guidance"] = to_json(req.guidance);
  j["skip_blocks"] = std::vector<std::size_t>(req.skip_blocks.begin(), req.skip_blocks.end());
  j["init_latent"] = std::vector<double>(req.init_latent.data().begin(), req.init_latent.data().end());
  auto steps = nlohmann::ordered_json::array();
  for (const auto& s : out.trace) {
    steps.push_back({{"step", s.step}, {"t", s.t}, {"pred_norm", s.pred_norm}, {"state_norm", s.state_norm}});
  }
  j["steps"] = steps;
  return j;
}

}  // namespace synclab::sampler
