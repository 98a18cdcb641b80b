// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "synclab/model/toy_model.hpp"

#include <cmath>
#include <string>

#include "synclab/diffcore/ops.hpp"
#include "synclab/error.hpp"
#include "synclab/model/audio_attention.hpp"
#include "synclab/model/self_attention.hpp"

namespace synclab::model {

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw PreconditionError("model config: " + what); };
  if (n_blocks == 0) fail("n_blocks must be positive");
  if (n_heads == 0 || d_model % (2 * n_heads) != 0) fail("d_model must be divisible by 2 * n_heads");
  for (std::size_t b : audio_blocks) {
    if (b >= n_blocks) fail("audio block " + std::to_string(b) + " outside [0, " + std::to_string(n_blocks) + ")");
  }
  if (class_vocab < 2) fail("class_vocab must be >= 2");
  if (frames == 0 || latent_channels == 0 || audio_dim == 0 || alpha == 0) fail("empty dimension");
  if (mlp_ratio == 0) fail("mlp_ratio must be positive");
  if (time_embed_dim == 0 || time_embed_dim % 2 != 0) fail("time_embed_dim must be even");
  if (!(rope_base > 0.0)) fail("rope_base must be positive");
}

nlohmann::ordered_json to_json(const ModelConfig& c) {
  return {{"n_blocks", c.n_blocks},
          {"d_model", c.d_model},
          {"n_heads", c.n_heads},
          {"audio_blocks", std::vector<std::size_t>(c.audio_blocks.begin(), c.audio_blocks.end())},
          {"rope_base", c.rope_base},
          {"use_rope", c.use_rope},
          {"alpha", c.alpha},
          {"delta_window", c.delta_window},
          {"class_vocab", c.class_vocab},
          {"latent_channels", c.latent_channels},
          {"frames", c.frames},
          {"audio_dim", c.audio_dim},
          {"mlp_ratio", c.mlp_ratio},
          {"time_embed_dim", c.time_embed_dim}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("n_blocks", c.n_blocks);
  get("d_model", c.d_model);
  get("n_heads", c.n_heads);
  if (j.contains("audio_blocks")) {
    const auto v = j.at("audio_blocks").get<std::vector<std::size_t>>();
    c.audio_blocks = std::set<std::size_t>(v.begin(), v.end());
  }
  get("rope_base", c.rope_base);
  get("use_rope", c.use_rope);
  get("alpha", c.alpha);
  get("delta_window", c.delta_window);
  get("class_vocab", c.class_vocab);
  get("latent_channels", c.latent_channels);
  get("frames", c.frames);
  get("audio_dim", c.audio_dim);
  get("mlp_ratio", c.mlp_ratio);
  get("time_embed_dim", c.time_embed_dim);
  c.validate();
  return c;
}

namespace {

std::string blk(std::size_t i, const char* name) { return "blk" + std::to_string(i) + "." + name; }

const Tensor& param(const ParamMap& p, const std::string& name) {
  auto it = p.find(name);
  if (it == p.end()) throw PreconditionError("model: missing parameter '" + name + "'");
  return it->second;
}

Tensor normal_init(Rng& rng, Shape shape, double std) {
  Tensor t = sample_normal(rng, shape);
  for (double& v : t.mutable_data()) v *= std;
  return t;
}

// Sinusoidal features of `pos` over `dim` dims: [sin(pos w_k), cos(pos w_k)].
void sinusoid(double pos, std::size_t dim, double* out) {
  const std::size_t half = dim / 2;
  for (std::size_t k = 0; k < half; ++k) {
    const double w = std::exp(-std::log(10000.0) * static_cast<double>(k) / static_cast<double>(half));
    out[k] = std::sin(pos * w);
    out[half + k] = std::cos(pos * w);
  }
}

}  // namespace

ParamMap init_params(const ModelConfig& c, Rng& rng) {
  c.validate();
  const std::size_t d = c.d_model;
  const double s = 0.02;
  ParamMap p;
  auto add = [&](const std::string& name, Tensor t) { p.emplace(name, std::move(t)); };
  // Fixed creation order keeps the parameter stream independent of map order.
  add("in.w", normal_init(rng, {c.latent_channels, d}, s));
  add("in.b", Tensor::zeros({d}));
  add("clean.emb", normal_init(rng, {1, d}, s));
  add("cls.emb", normal_init(rng, {static_cast<std::size_t>(c.class_vocab), d}, s));
  add("time.w1", normal_init(rng, {c.time_embed_dim, d}, s));
  add("time.b1", Tensor::zeros({d}));
  add("time.w2", normal_init(rng, {d, d}, s));
  add("time.b2", Tensor::zeros({d}));
  if (!c.audio_blocks.empty()) {
    add("audio.w", normal_init(rng, {c.audio_dim, d}, s));
    add("audio.b", Tensor::zeros({d}));
  }
  for (std::size_t i = 0; i < c.n_blocks; ++i) {
    add(blk(i, "qkv.w"), normal_init(rng, {d, 3 * d}, s));
    add(blk(i, "qkv.b"), Tensor::zeros({3 * d}));
    add(blk(i, "attn_out.w"), normal_init(rng, {d, d}, s));
    add(blk(i, "attn_out.b"), Tensor::zeros({d}));
    if (c.audio_blocks.count(i) != 0) {
      add(blk(i, "xattn.q.w"), normal_init(rng, {d, d}, s));
      add(blk(i, "xattn.kv.w"), normal_init(rng, {d, 2 * d}, s));
      add(blk(i, "xattn.out.w"), Tensor::zeros({d, d}));
    }
    add(blk(i, "mlp.w1"), normal_init(rng, {d, c.mlp_ratio * d}, s));
    add(blk(i, "mlp.b1"), Tensor::zeros({c.mlp_ratio * d}));
    add(blk(i, "mlp.w2"), normal_init(rng, {c.mlp_ratio * d, d}, s));
    add(blk(i, "mlp.b2"), Tensor::zeros({d}));
  }
  add("out.w", normal_init(rng, {d, c.latent_channels}, s));
  add("out.b", Tensor::zeros({c.latent_channels}));
  return p;
}

Tensor embed(const ModelConfig& c, const ParamMap& p, const Tensor& x, std::span<const double> t,
             const std::vector<int>& class_ids) {
  const std::size_t batch = t.size(), T = c.frames, N = c.tokens(), d = c.d_model;
  if (batch == 0) throw PreconditionError("forward: empty batch");
  if (x.rank() != 2 || x.dim(0) != batch * T || x.dim(1) != c.latent_channels) {
    throw DimensionError("forward: shape mismatch " + shape_str(x.shape()) + " vs [" + std::to_string(batch * T) +
                         ", " + std::to_string(c.latent_channels) + "]");
  }
  if (class_ids.size() != batch) throw DimensionError("forward: need one class id per sample");
  for (double ti : t) {
    if (!(ti >= 0.0 && ti <= 1.0)) throw PreconditionError("forward: t=" + std::to_string(ti) + " outside [0, 1]");
  }
  std::vector<std::size_t> cls_rows;
  for (int id : class_ids) {
    if (id < 0 || id >= c.class_vocab) throw PreconditionError("forward: class id " + std::to_string(id) + " out of range");
    cls_rows.push_back(static_cast<std::size_t>(id));
  }

  Tensor frames = ops::add_row(ops::matmul(x, param(p, "in.w")), param(p, "in.b"));
  // Frame 0 is the clean conditioning frame; tell the model which one it is.
  std::vector<std::size_t> clean_rows(batch * T, 0);
  for (std::size_t b = 0; b < batch; ++b) clean_rows[b * T] = 1;
  const Tensor clean_table = ops::concat_rows(Tensor::zeros({1, d}), param(p, "clean.emb"));
  frames = ops::add(frames, ops::gather_rows(clean_table, clean_rows));

  const Tensor cls = ops::gather_rows(param(p, "cls.emb"), cls_rows);
  std::vector<std::size_t> order;
  for (std::size_t b = 0; b < batch; ++b) {
    order.push_back(b);
    for (std::size_t l = 0; l < T; ++l) order.push_back(batch + b * T + l);
  }
  Tensor h = ops::gather_rows(ops::concat_rows(cls, frames), order);

  std::vector<double> pos(batch * N * d);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < N; ++j) sinusoid(static_cast<double>(j), d, pos.data() + (b * N + j) * d);
  }
  h = ops::add(h, Tensor({batch * N, d}, std::move(pos)));

  std::vector<double> tf(batch * c.time_embed_dim);
  for (std::size_t b = 0; b < batch; ++b) sinusoid(1000.0 * t[b], c.time_embed_dim, tf.data() + b * c.time_embed_dim);
  Tensor temb = ops::add_row(ops::matmul(Tensor({batch, c.time_embed_dim}, std::move(tf)), param(p, "time.w1")),
                             param(p, "time.b1"));
  temb = ops::add_row(ops::matmul(ops::silu(temb), param(p, "time.w2")), param(p, "time.b2"));
  std::vector<std::size_t> tile;
  for (std::size_t b = 0; b < batch; ++b) tile.insert(tile.end(), N, b);
  return ops::add(h, ops::gather_rows(temb, tile));
}

Tensor head(const ModelConfig& c, const ParamMap& p, const Tensor& h, std::size_t batch) {
  std::vector<std::size_t> rows;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t l = 0; l < c.frames; ++l) rows.push_back(b * c.tokens() + 1 + l);
  }
  const Tensor f = ops::layer_norm(ops::gather_rows(h, rows));
  return ops::add_row(ops::matmul(f, param(p, "out.w")), param(p, "out.b"));
}

Tensor forward(const ModelConfig& c, const ParamMap& p, const Tensor& x, std::span<const double> t,
               const Conditioning& cond, std::vector<Tensor>* block_outputs) {
  const std::size_t batch = t.size();
  for (std::size_t b : cond.skip_blocks) {
    if (b >= c.n_blocks) throw PreconditionError("forward: skip block " + std::to_string(b) + " out of range");
  }
  if (!cond.audio_mask.empty() && cond.audio_mask.size() != batch) {
    throw DimensionError("forward: audio mask needs one entry per sample");
  }
  bool audio_active = cond.use_audio && !c.audio_blocks.empty();
  if (audio_active && !cond.audio_mask.empty()) {
    bool any = false;
    for (bool m : cond.audio_mask) any = any || m;
    audio_active = any;
  }
  if (cond.use_audio && !cond.audio.has_value()) throw PreconditionError("forward: use_audio requires audio features");

  Tensor h = embed(c, p, x, t, cond.class_ids);

  Tensor audio_proj;
  CrossAttentionLayout lay;
  if (audio_active) {
    const Tensor& a = *cond.audio;
    if (a.rank() != 2 || a.dim(0) != batch * c.audio_length() || a.dim(1) != c.audio_dim) {
      throw DimensionError("forward: audio shape mismatch " + shape_str(a.shape()) + " vs [" +
                           std::to_string(batch * c.audio_length()) + ", " + std::to_string(c.audio_dim) + "]");
    }
    audio_proj = ops::add_row(ops::matmul(a, param(p, "audio.w")), param(p, "audio.b"));
    lay.batch = batch;
    lay.tokens = c.tokens();
    lay.first_frame = 1;
    lay.frames = c.frames;
    lay.l_audio = c.audio_length();
    lay.n_heads = c.n_heads;
    lay.alpha = c.alpha;
    lay.delta = c.delta_window;
    lay.use_rope = c.use_rope;
    lay.rope_base = c.rope_base;
  }

  for (std::size_t i = 0; i < c.n_blocks; ++i) {
    if (cond.skip_blocks.count(i) == 0) {
      Tensor a = ops::layer_norm(h);
      Tensor qkv = ops::add_row(ops::matmul(a, param(p, blk(i, "qkv.w"))), param(p, blk(i, "qkv.b")));
      Tensor att = self_attention_op(qkv, batch, c.n_heads);
      h = ops::add(h, ops::add_row(ops::matmul(att, param(p, blk(i, "attn_out.w"))), param(p, blk(i, "attn_out.b"))));
      if (audio_active && c.audio_blocks.count(i) != 0) {
        a = ops::layer_norm(h);
        Tensor q = ops::matmul(a, param(p, blk(i, "xattn.q.w")));
        Tensor kv = ops::matmul(audio_proj, param(p, blk(i, "xattn.kv.w")));
        Tensor xa = audio_cross_attention_op(q, kv, lay, cond.audio_mask);
        h = ops::add(h, ops::matmul(xa, param(p, blk(i, "xattn.out.w"))));
      }
      a = ops::layer_norm(h);
      Tensor m = ops::gelu(ops::add_row(ops::matmul(a, param(p, blk(i, "mlp.w1"))), param(p, blk(i, "mlp.b1"))));
      h = ops::add(h, ops::add_row(ops::matmul(m, param(p, blk(i, "mlp.w2"))), param(p, blk(i, "mlp.b2"))));
    }
    if (block_outputs != nullptr) block_outputs->push_back(h);
  }
  return head(c, p, h, batch);
}

ToyModel::ToyModel(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  Rng rng(seed, 0x4D4F44454Cull);
  params_ = init_params(config_, rng);
}

}  // namespace synclab::model
