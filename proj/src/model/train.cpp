// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "synclab/model/train.hpp"

#include <algorithm>
#include <cmath>

#include "synclab/diffcore/ops.hpp"
#include "synclab/error.hpp"
#include "synclab/metrics/report.hpp"
#include "synclab/model/loss.hpp"

namespace synclab::model {

nlohmann::ordered_json to_json(const TrainParams& p) {
  return {{"steps", p.steps},
          {"lr", p.lr},
          {"batch", p.batch},
          {"lambda", p.lambda},
          {"seed", p.seed},
          {"null_dropout", p.null_dropout},
          {"offsync_dropout", p.offsync_dropout},
          {"grad_clip", p.grad_clip},
          {"warmup_steps", p.warmup_steps},
          {"beta1", p.beta1},
          {"beta2", p.beta2},
          {"adam_eps", p.adam_eps}};
}

TrainParams train_params_from_json(const nlohmann::json& j) {
  TrainParams p;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("steps", p.steps);
  get("lr", p.lr);
  get("batch", p.batch);
  get("lambda", p.lambda);
  get("seed", p.seed);
  get("null_dropout", p.null_dropout);
  get("offsync_dropout", p.offsync_dropout);
  get("grad_clip", p.grad_clip);
  get("warmup_steps", p.warmup_steps);
  get("beta1", p.beta1);
  get("beta2", p.beta2);
  get("adam_eps", p.adam_eps);
  return p;
}

TrainExample make_example(const synth::Clip& clip) {
  return {clip.latents.latents, clip.features.features, clip.script.clip_class};
}

namespace {

struct Adam {
  std::map<std::string, std::vector<double>> m, v;
  std::size_t t = 0;
};

}  // namespace

TrainResult train(const ModelConfig& config, const std::vector<TrainExample>& data, const TrainParams& params,
                  const std::function<void(const LossRow&)>& on_step) {
  config.validate();
  if (data.empty()) throw PreconditionError("train: dataset is empty");
  if (params.batch == 0) throw PreconditionError("train: batch must be positive");
  if (!(params.lambda >= 0.0)) throw PreconditionError("train: lambda must be >= 0");
  const std::size_t T = config.frames, C = config.latent_channels, L = config.audio_length(), D = config.audio_dim;
  for (const auto& ex : data) {
    if (ex.latents.shape() != Shape{T, C} || ex.audio.shape() != Shape{L, D}) {
      throw DimensionError("train: example shapes " + shape_str(ex.latents.shape()) + " / " +
                           shape_str(ex.audio.shape()) + " do not match the model config");
    }
    if (ex.class_id <= 0 || ex.class_id >= config.class_vocab) throw PreconditionError("train: class id out of range");
  }

  const Rng root(params.seed, 0x545241494Eull);
  Rng init_rng = root.fork(0);
  TrainResult result;
  result.checkpoint.config = config;
  result.checkpoint.params = init_params(config, init_rng);
  result.checkpoint.seed = params.seed;
  result.checkpoint.train_info = to_json(params);
  ParamMap& P = result.checkpoint.params;

  Rng rng = root.fork(1);
  Adam adam;
  for (const auto& [name, t] : P) {
    adam.m[name].assign(t.numel(), 0.0);
    adam.v[name].assign(t.numel(), 0.0);
  }
  const std::size_t B = params.batch;

  for (std::size_t step = 0; step < params.steps; ++step) {
    std::vector<double> t(B);
    std::vector<int> cls(B);
    std::vector<bool> mask(B, true);
    std::vector<double> x(B * T * C), one_minus_t(B * T * C), audio(B * L * D, 0.0);
    std::vector<double> gt((T - 1) * B * C), gt_prev((T - 1) * B * C), xt_sel((T - 1) * B * C);
    std::vector<std::size_t> sel;
    for (std::size_t b = 0; b < B; ++b) {
      const auto& ex = data[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(data.size()) - 1))];
      t[b] = rng.uniform();
      const double u = rng.uniform();
      cls[b] = ex.class_id;
      if (u < params.null_dropout) {
        cls[b] = 0;
      } else {
        std::copy(ex.audio.data().begin(), ex.audio.data().end(), audio.begin() + static_cast<long>(b * L * D));
        if (u < params.null_dropout + params.offsync_dropout) mask[b] = false;
      }
      const auto z = ex.latents.data();
      for (std::size_t l = 0; l < T; ++l) {
        for (std::size_t c = 0; c < C; ++c) {
          const std::size_t i = (b * T + l) * C + c;
          const double eps = rng.normal();
          x[i] = l == 0 ? z[l * C + c] : (1.0 - t[b]) * eps + t[b] * z[l * C + c];
          one_minus_t[i] = 1.0 - t[b];
        }
        if (l > 0) {
          sel.push_back(b * T + l);
          for (std::size_t c = 0; c < C; ++c) {
            const std::size_t j = (sel.size() - 1) * C + c;
            gt[j] = z[l * C + c];
            gt_prev[j] = z[(l - 1) * C + c];
            xt_sel[j] = x[(b * T + l) * C + c];
          }
        }
      }
    }

    Tape tape;
    ParamMap watched;
    for (const auto& [name, v] : P) watched.emplace(name, tape.watch(v));
    Conditioning cond;
    cond.class_ids = cls;
    cond.audio = Tensor({B * L, D}, std::move(audio));
    cond.audio_mask = mask;
    const Tensor xt({B * T, C}, std::move(x));
    const Tensor pred = forward(config, watched, xt, t, cond);
    // One-step estimate of the clean latent, on generated frames only.
    const Tensor scaled = ops::gather_rows(ops::mul(pred, Tensor({B * T, C}, std::move(one_minus_t))), sel);
    const Tensor zhat = ops::add(scaled, Tensor({sel.size(), C}, std::move(xt_sel)));
    const LossParts lp = motion_aware_loss_parts(zhat, Tensor({sel.size(), C}, std::move(gt)),
                                                 Tensor({sel.size(), C}, std::move(gt_prev)), params.lambda);
    const double loss = lp.total.item();
    if (!std::isfinite(loss)) throw NumericError("train: non-finite loss at step " + std::to_string(step));
    tape.backward(lp.total);

    std::map<std::string, std::vector<double>> grads;
    double norm2 = 0.0;
    for (const auto& [name, w] : watched) {
      auto g = w.grad();
      for (double v : g) norm2 += v * v;
      grads.emplace(name, std::move(g));
    }
    const double norm = std::sqrt(norm2);
    const double clip = params.grad_clip > 0.0 && norm > params.grad_clip ? params.grad_clip / norm : 1.0;
    adam.t += 1;
    const double warm = params.warmup_steps > 0
                            ? std::min(1.0, static_cast<double>(step + 1) / static_cast<double>(params.warmup_steps))
                            : 1.0;
    const double lr = params.lr * warm;
    const double bc1 = 1.0 - std::pow(params.beta1, static_cast<double>(adam.t));
    const double bc2 = 1.0 - std::pow(params.beta2, static_cast<double>(adam.t));
    for (auto& [name, w] : P) {
      auto data_span = w.mutable_data();
      auto& m = adam.m[name];
      auto& v = adam.v[name];
      const auto& g = grads[name];
      for (std::size_t i = 0; i < data_span.size(); ++i) {
        const double gi = g[i] * clip;
        m[i] = params.beta1 * m[i] + (1.0 - params.beta1) * gi;
        v[i] = params.beta2 * v[i] + (1.0 - params.beta2) * gi * gi;
        data_span[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + params.adam_eps);
      }
    }
    LossRow row{step, loss, lp.mse.item(), lp.motion.item()};
    result.curve.push_back(row);
    if (on_step) on_step(row);
  }
  result.checkpoint.train_step = params.steps;
  result.checkpoint.validate();
  return result;
}

std::string loss_csv(const std::vector<LossRow>& curve) {
  std::string out = "step,loss,mse_term,motion_term\n";
  for (const auto& r : curve) {
    out += std::to_string(r.step) + "," + metrics::fmt_fixed(r.loss, 8) + "," + metrics::fmt_fixed(r.mse_term, 8) +
           "," + metrics::fmt_fixed(r.motion_term, 8) + "\n";
  }
  return out;
}

std::pair<double, double> loss_window_means(const std::vector<LossRow>& curve) {
  if (curve.empty()) return {0.0, 0.0};
  const std::size_t w = std::max<std::size_t>(1, curve.size() / 10);
  double first = 0.0, last = 0.0;
  for (std::size_t i = 0; i < w; ++i) {
    first += curve[i].loss;
    last += curve[curve.size() - 1 - i].loss;
  }
  return {first / static_cast<double>(w), last / static_cast<double>(w)};
}

}  // namespace synclab::model
