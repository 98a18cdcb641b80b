// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "synclab/diffcore/gradcheck.hpp"
#include "synclab/diffcore/ops.hpp"
#include "synclab/error.hpp"
#include "synclab/model/audio_attention.hpp"
#include "synclab/model/checkpoint.hpp"
#include "synclab/model/loss.hpp"
#include "synclab/model/rope.hpp"
#include "synclab/model/self_attention.hpp"
#include "synclab/model/toy_model.hpp"
#include "synclab/model/train.hpp"
#include "test_util.hpp"

using namespace synclab;
using namespace synclab::model;
using testing::randn;

namespace {

double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Non-uniform weighted sum so gradient checks see every output element.
Tensor wsum(const Tensor& t) {
  std::vector<double> c(t.numel());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.2 + 0.05 * static_cast<double>(i % 11);
  return ops::sum(ops::mul(t, Tensor(t.shape(), c)));
}

ModelConfig tiny_config() {
  ModelConfig c;
  c.n_blocks = 2;
  c.d_model = 8;
  c.n_heads = 2;
  c.audio_blocks = {1};
  c.frames = 4;
  c.latent_channels = 4;
  c.audio_dim = 4;
  c.alpha = 2;
  c.delta_window = 1;
  c.class_vocab = 3;
  c.time_embed_dim = 4;
  c.mlp_ratio = 2;
  return c;
}

// Initialization zeroes the cross-attention output heads; perturb every
// parameter so each path carries gradient.
ParamMap perturbed(const ModelConfig& c, std::uint64_t seed) {
  Rng rng(seed);
  ParamMap p = init_params(c, rng);
  for (auto& [name, t] : p) t = randn(rng, t.shape(), 0.4);
  return p;
}

Conditioning cond_with_audio(const ModelConfig& c, std::size_t batch, Rng& rng) {
  Conditioning cond;
  for (std::size_t b = 0; b < batch; ++b) cond.class_ids.push_back(1 + static_cast<int>(b % 2));
  cond.audio = randn(rng, {batch * c.audio_length(), c.audio_dim});
  return cond;
}

}  // namespace

TEST_CASE("rope rotation properties") {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor x = randn(rng, {16});
    const double p = 200.0 * rng.uniform() - 100.0;
    const Tensor y = rope_rotate(x, p);
    CHECK(std::abs(norm(y.data()) - norm(x.data())) <= 1e-12 * std::max(1.0, norm(x.data())));

    const Tensor q = randn(rng, {16}), k = randn(rng, {16});
    const double pq = 50.0 * rng.uniform(), pk = 50.0 * rng.uniform(), s = 100.0 * rng.uniform() - 50.0;
    const double base = dot(rope_rotate(q, pq).data(), rope_rotate(k, pk).data());
    const double shifted = dot(rope_rotate(q, pq + s).data(), rope_rotate(k, pk + s).data());
    CHECK(std::abs(base - shifted) <= 1e-9);
  }
  const Tensor x = randn(rng, {8});
  CHECK(testing::bit_equal(rope_rotate(x, 0.0), x));
  CHECK_THROWS_AS(rope_rotate(Tensor::vector({1, 2, 3}), 1.0), DimensionError);

  const RotaryEmbedder emb({4, 2, 2}, 10000.0);
  std::vector<double> v(x.data().begin(), x.data().end());
  emb.rotate(v.data(), {3.5, 1.0, -2.0});
  emb.unrotate(v.data(), {3.5, 1.0, -2.0});
  CHECK(testing::max_abs_diff(v, x.data()) < 1e-14);
  CHECK_THROWS_AS(RotaryEmbedder({3, 1, 0}, 10000.0), DimensionError);
}

TEST_CASE("audio segment geometry") {
  const AudioSegment s = audio_segment(2, 4, 1, 192);
  CHECK(s.begin == 4);
  CHECK(s.end == 12);
  REQUIRE(s.size() == 9);
  CHECK(s.positions.front() == doctest::Approx(0.5));
  CHECK(s.positions.back() == doctest::Approx(3.5));

  const AudioSegment head = audio_segment(0, 4, 1, 192);
  CHECK(head.begin == 0);
  // The position attached to feature alpha*l is l itself.
  CHECK(head.positions[0] == doctest::Approx(0.0));

  const AudioSegment single = audio_segment(5, 4, 0, 192);
  CHECK(single.size() == 5);
  CHECK(single.begin == 18);
  CHECK(single.end == 22);
  CHECK(single.positions[2] == doctest::Approx(5.0));

  const AudioSegment tail = audio_segment(47, 4, 1, 192);
  CHECK(tail.end == 191);
  for (std::size_t i = 1; i < s.positions.size(); ++i) CHECK(s.positions[i] > s.positions[i - 1]);
}

TEST_CASE("reference cross-attention special cases") {
  Rng rng(2);
  const std::size_t d = 8, da = 4;
  const CrossAttentionWeights w{randn(rng, {d, d}), randn(rng, {da, d}), randn(rng, {da, d}), 2};
  const RotaryEmbedder rope({4, 0, 0}, 10000.0);
  const Tensor z = randn(rng, {d});

  const Tensor one = randn(rng, {1, da});
  const std::vector<double> p1{3.0};
  const Tensor out1 = audio_cross_attention(z, one, p1, 3.0, w, &rope);
  const Tensor vproj = ops::matmul(one, w.wv);
  CHECK(testing::max_abs_diff(out1.data(), vproj.data()) < 1e-14);

  std::vector<double> rows;
  for (int i = 0; i < 5; ++i) rows.insert(rows.end(), one.data().begin(), one.data().end());
  const Tensor same({5, da}, rows);
  const std::vector<double> p5{0.1, 0.7, 1.3, 2.2, 4.0};
  const Tensor out5 = audio_cross_attention(z, same, p5, 1.0, w, &rope);
  CHECK(testing::max_abs_diff(out5.data(), vproj.data()) < 1e-13);

  // Joint shift of query and key positions.
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor seg = randn(rng, {6, da});
    std::vector<double> pos(6);
    for (auto& p : pos) p = 10.0 * rng.uniform();
    const double qp = 10.0 * rng.uniform();
    const double shift = trial == 0 ? 5.0 : 40.0 * rng.uniform() - 20.0;
    std::vector<double> moved = pos;
    for (auto& p : moved) p += shift;
    const Tensor a = audio_cross_attention(z, seg, pos, qp, w, &rope);
    const Tensor b = audio_cross_attention(z, seg, moved, qp + shift, w, &rope);
    CHECK(testing::max_abs_diff(a.data(), b.data()) <= 1e-9);
  }
}

TEST_CASE("fused cross-attention op matches the reference") {
  Rng rng(3);
  for (bool use_rope : {true, false}) {
    for (std::size_t delta : {0u, 1u, 2u}) {
      CrossAttentionLayout lay;
      lay.batch = 2;
      lay.frames = 5;
      lay.tokens = 6;
      lay.first_frame = 1;
      lay.alpha = 3;
      lay.l_audio = 15;
      lay.delta = delta;
      lay.n_heads = 2;
      lay.use_rope = use_rope;
      const std::size_t d = 8, da = 3, dh = d / lay.n_heads;
      const CrossAttentionWeights w{Tensor::zeros({d, d}), randn(rng, {da, d}), randn(rng, {da, d}), lay.n_heads};
      // Identity query projection: the op takes already-projected queries.
      Tensor wq({d, d});
      for (std::size_t i = 0; i < d; ++i) wq.mutable_data()[i * d + i] = 1.0;
      const CrossAttentionWeights wref{wq, w.wk, w.wv, lay.n_heads};
      const Tensor q = randn(rng, {lay.batch * lay.tokens, d});
      const Tensor audio = randn(rng, {lay.batch * lay.l_audio, da});
      const Tensor kv = ops::concat_last(ops::matmul(audio, w.wk), ops::matmul(audio, w.wv));
      const Tensor out = audio_cross_attention_op(q, kv, lay, {true, false});
      const RotaryEmbedder rope({dh, 0, 0}, lay.rope_base);
      for (std::size_t b = 0; b < lay.batch; ++b) {
        for (std::size_t tok = 0; tok < lay.tokens; ++tok) {
          const auto row = out.data().subspan((b * lay.tokens + tok) * d, d);
          if (b == 1 || tok == 0) {
            for (double v : row) CHECK(v == 0.0);
            continue;
          }
          const std::size_t l = tok - 1;
          const AudioSegment seg = audio_segment(l, lay.alpha, lay.delta, lay.l_audio);
          const Tensor segt = ops::slice_rows(audio, b * lay.l_audio + seg.begin, b * lay.l_audio + seg.end + 1);
          const Tensor z({d}, std::vector<double>(q.data().begin() + (b * lay.tokens + tok) * d,
                                                  q.data().begin() + (b * lay.tokens + tok + 1) * d));
          const Tensor ref = audio_cross_attention(z, segt, seg.positions, double(l), wref, use_rope ? &rope : nullptr);
          CHECK(testing::max_abs_diff(row, ref.data()) < 1e-12);
        }
      }

      // Gradients through the fused op.
      const ScalarFn fq = [&](const Tensor& x) { return wsum(audio_cross_attention_op(x, kv, lay)); };
      const ScalarFn fkv = [&](const Tensor& x) { return wsum(audio_cross_attention_op(q, x, lay)); };
      CHECK(finite_diff_check(fq, q) < 1e-6);
      CHECK(finite_diff_check(fkv, kv) < 1e-6);
    }
  }
}

TEST_CASE("self-attention op: naive comparison and gradients") {
  Rng rng(4);
  const std::size_t batch = 2, tokens = 5, heads = 2, d = 8, dh = 4;
  const Tensor qkv = randn(rng, {batch * tokens, 3 * d});
  const Tensor out = self_attention_op(qkv, batch, heads);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < tokens; ++i) {
        std::vector<double> s(tokens);
        double mx = -1e300;
        for (std::size_t j = 0; j < tokens; ++j) {
          double acc = 0.0;
          for (std::size_t k = 0; k < dh; ++k)
            acc += qkv.at(b * tokens + i, h * dh + k) * qkv.at(b * tokens + j, d + h * dh + k);
          s[j] = acc / std::sqrt(double(dh));
          mx = std::max(mx, s[j]);
        }
        double tot = 0.0;
        for (auto& v : s) tot += (v = std::exp(v - mx));
        for (std::size_t k = 0; k < dh; ++k) {
          double o = 0.0;
          for (std::size_t j = 0; j < tokens; ++j) o += s[j] / tot * qkv.at(b * tokens + j, 2 * d + h * dh + k);
          CHECK(out.at(b * tokens + i, h * dh + k) == doctest::Approx(o).epsilon(1e-12));
        }
      }
    }
  }
  const ScalarFn f = [&](const Tensor& x) { return wsum(self_attention_op(x, batch, heads)); };
  CHECK(finite_diff_check(f, qkv) < 1e-6);
  CHECK_THROWS_AS(self_attention_op(randn(rng, {7, 24}), 2, 2), DimensionError);
}

TEST_CASE("motion-aware loss hand values") {
  const Tensor gt = Tensor::matrix(1, 2, {0.0, 0.0});
  const Tensor pred = Tensor::matrix(1, 2, {1.0, 1.0});
  const Tensor prev = Tensor::matrix(1, 2, {-2.0, 0.0});
  CHECK(motion_aware_loss(pred, gt, prev, 1.0).item() == 3.0);
  CHECK(motion_aware_loss(gt, gt, prev, 1.0).item() == 0.0);
  CHECK(motion_aware_loss(pred, gt, gt, 1.0).item() == ops::mse(pred, gt).item());
  const auto parts = motion_aware_loss_parts(pred, gt, prev, 0.0);
  CHECK(parts.total.item() == parts.mse.item());
  CHECK(parts.motion.item() == 2.0);
  CHECK_THROWS_AS(motion_aware_loss(pred, Tensor::matrix(2, 1, {0, 0}), prev), DimensionError);
}

TEST_CASE("model config validation and json") {
  ModelConfig c = tiny_config();
  c.validate();
  CHECK(model_config_from_json(to_json(c)).audio_blocks == c.audio_blocks);
  CHECK(to_json(model_config_from_json(to_json(c))).dump() == to_json(c).dump());
  c.d_model = 6;
  CHECK_THROWS_AS(c.validate(), PreconditionError);
  c = tiny_config();
  c.audio_blocks = {2};
  CHECK_THROWS_AS(c.validate(), PreconditionError);
}

TEST_CASE("forward: conditioning semantics") {
  const ModelConfig c = tiny_config();
  const ParamMap p = perturbed(c, 5);
  Rng rng(6);
  const std::size_t batch = 2;
  const Tensor x = randn(rng, {batch * c.frames, c.latent_channels});
  const std::vector<double> t{0.3, 0.8};
  Conditioning cond = cond_with_audio(c, batch, rng);

  const Tensor y1 = forward(c, p, x, t, cond);
  CHECK(y1.shape() == Shape{batch * c.frames, c.latent_channels});
  CHECK(testing::bit_equal(y1, forward(c, p, x, t, cond)));

  // Audio off: substituting the audio changes nothing.
  Conditioning off = cond;
  off.use_audio = false;
  const Tensor a = forward(c, p, x, t, off);
  off.audio = randn(rng, cond.audio->shape(), 5.0);
  CHECK(testing::bit_equal(a, forward(c, p, x, t, off)));
  off.audio.reset();
  CHECK(testing::bit_equal(a, forward(c, p, x, t, off)));
  // ...while with audio on it matters.
  Conditioning other = cond;
  other.audio = randn(rng, cond.audio->shape());
  CHECK_FALSE(testing::bit_equal(y1, forward(c, p, x, t, other)));

  // Per-sample mask equals switching that sample off.
  Conditioning masked = cond;
  masked.audio_mask = {true, false};
  const Tensor m = forward(c, p, x, t, masked);
  const Tensor all_off = forward(c, p, x, t, off);
  const std::size_t half = c.frames * c.latent_channels;
  CHECK(testing::max_abs_diff(m.data().subspan(0, half), y1.data().subspan(0, half)) < 1e-12);
  CHECK(testing::max_abs_diff(m.data().subspan(half), all_off.data().subspan(half)) < 1e-12);

  // Every block skipped: embedding straight into the head.
  Conditioning skip = cond;
  skip.skip_blocks = {0, 1};
  const Tensor h = embed(c, p, x, t, cond.class_ids);
  CHECK(testing::max_abs_diff(forward(c, p, x, t, skip).data(), head(c, p, h, batch).data()) < 1e-14);

  std::vector<Tensor> outs;
  forward(c, p, x, t, cond, &outs);
  CHECK(outs.size() == c.n_blocks);

  Conditioning missing = cond;
  missing.audio.reset();
  CHECK_THROWS_AS(forward(c, p, x, t, missing), PreconditionError);
}

TEST_CASE("untrained cross-attention adds nothing") {
  const ModelConfig c = tiny_config();
  Rng init(7);
  const ParamMap p = init_params(c, init);
  Rng rng(8);
  const Tensor x = randn(rng, {c.frames, c.latent_channels});
  const std::vector<double> t{0.5};
  Conditioning on = cond_with_audio(c, 1, rng);
  Conditioning off = on;
  off.use_audio = false;
  CHECK(testing::bit_equal(forward(c, p, x, t, on), forward(c, p, x, t, off)));
}

TEST_CASE("motion-aware loss gradients through a 2-block model") {
  for (bool rope : {true, false}) {
    ModelConfig c = tiny_config();
    c.use_rope = rope;
    const ParamMap p = perturbed(c, 9);
    Rng rng(10);
    const std::size_t batch = 2;
    const Tensor x = randn(rng, {batch * c.frames, c.latent_channels});
    const Tensor gt = randn(rng, {batch * c.frames, c.latent_channels});
    const Tensor gt_prev = randn(rng, {batch * c.frames, c.latent_channels});
    const std::vector<double> t{0.25, 0.6};
    const Conditioning cond = cond_with_audio(c, batch, rng);

    const ScalarFn wrt_x = [&](const Tensor& xx) {
      return motion_aware_loss(forward(c, p, xx, t, cond), gt, gt_prev, 1.0);
    };
    CHECK(finite_diff_check(wrt_x, x) < 1e-4);

    for (const char* name : {"blk1.xattn.q.w", "blk1.xattn.kv.w", "blk1.xattn.out.w", "blk0.qkv.w", "in.w",
                             "time.w1", "cls.emb", "clean.emb", "out.w"}) {
      CAPTURE(name);
      const ScalarFn wrt_p = [&](const Tensor& leaf) {
        ParamMap q = p;
        q.at(name) = leaf;
        return motion_aware_loss(forward(c, q, x, t, cond), gt, gt_prev, 1.0);
      };
      CHECK(finite_diff_check(wrt_p, p.at(name)) < 1e-4);
    }
  }
}

TEST_CASE("checkpoint round trip") {
  const ModelConfig c = tiny_config();
  Checkpoint ck{c, perturbed(c, 11), 17, 3, {{"note", "x"}}};
  const auto bytes = encode_checkpoint(ck);
  const Checkpoint back = decode_checkpoint(bytes);
  CHECK(back.train_step == 17);
  CHECK(back.seed == 3);
  CHECK(back.train_info.dump() == ck.train_info.dump());
  CHECK(to_json(back.config).dump() == to_json(c).dump());
  REQUIRE(back.params.size() == ck.params.size());
  for (const auto& [name, t] : ck.params) CHECK(testing::bit_equal(back.params.at(name), t));

  auto bad = bytes;
  bad[1] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);
  bad = bytes;
  bad.resize(bytes.size() - 9);
  CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);

  Checkpoint nan = ck;
  std::vector<double> v(nan.params.at("out.b").data().begin(), nan.params.at("out.b").data().end());
  v[0] = std::nan("");
  nan.params.at("out.b") = Tensor(nan.params.at("out.b").shape(), v);
  CHECK_THROWS_AS(nan.validate(), NumericError);

  const auto dir = testing::scratch_dir("ckpt");
  save_checkpoint(dir / "a.ck", ck);
  CHECK(encode_checkpoint(load_checkpoint(dir / "a.ck")) == bytes);
}

TEST_CASE("training: determinism, zero steps, objectives differ") {
  const ModelConfig c = tiny_config();
  Rng rng(12);
  std::vector<TrainExample> data;
  for (int i = 0; i < 4; ++i) {
    data.push_back({randn(rng, {c.frames, c.latent_channels}), randn(rng, {c.audio_length(), c.audio_dim}), 1 + i % 2});
  }
  TrainParams tp;
  tp.steps = 0;
  tp.batch = 2;
  const auto zero = train(c, data, tp);
  Rng init_rng = Rng(tp.seed, 0x545241494Eull).fork(0);
  const ParamMap init = init_params(c, init_rng);
  for (const auto& [name, t] : init) CHECK(testing::bit_equal(zero.checkpoint.params.at(name), t));

  tp.steps = 60;
  tp.warmup_steps = 5;
  const auto a = train(c, data, tp);
  const auto b = train(c, data, tp);
  for (const auto& [name, t] : a.checkpoint.params) CHECK(testing::bit_equal(b.checkpoint.params.at(name), t));
  CHECK(a.curve.size() == 60);
  CHECK(loss_csv(a.curve).rfind("step,loss,mse_term,motion_term\n", 0) == 0);

  tp.lambda = 0.0;
  const auto plain = train(c, data, tp);
  bool differs = false;
  for (const auto& [name, t] : a.checkpoint.params) differs = differs || !testing::bit_equal(plain.checkpoint.params.at(name), t);
  CHECK(differs);
  for (const auto& row : plain.curve) CHECK(row.loss == row.mse_term);

  TrainParams bad = tp;
  bad.batch = 0;
  CHECK_THROWS_AS(train(c, data, bad), PreconditionError);
  CHECK_THROWS_AS(train(c, {}, tp), PreconditionError);
}
