// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "synclab/diffcore/ops.hpp"
#include "synclab/error.hpp"
#include "synclab/sampler/guidance.hpp"
#include "synclab/sampler/sampler.hpp"
#include "test_util.hpp"

using namespace synclab;
using namespace synclab::sampler;
using testing::randn;

namespace {

model::ModelConfig small_config() {
  model::ModelConfig c;
  c.n_blocks = 3;
  c.d_model = 16;
  c.n_heads = 2;
  c.audio_blocks = {1, 2};
  c.frames = 8;
  c.alpha = 4;
  c.latent_channels = 4;
  c.audio_dim = 6;
  c.time_embed_dim = 8;
  return c;
}

// Random weights everywhere, including the cross-attention output heads.
model::ToyModel random_model(std::uint64_t seed) {
  const auto c = small_config();
  Rng rng(seed);
  auto p = model::init_params(c, rng);
  for (auto& [name, t] : p) t = randn(rng, t.shape(), 0.3);
  return model::ToyModel(c, p);
}

SampleRequest request(const model::ToyModel& m, Rng& rng) {
  SampleRequest r;
  r.init_latent = randn(rng, {m.config().latent_channels});
  r.audio = randn(rng, {m.config().audio_length(), m.config().audio_dim});
  r.class_id = 2;
  r.seed = 99;
  r.guidance.steps = 6;
  return r;
}

}  // namespace

TEST_CASE("guidance algebra") {
  const Tensor f = Tensor::scalar(1.0), o = Tensor::scalar(0.6), n = Tensor::scalar(0.2);
  CHECK(guided_prediction(f, o, n, 2.0, 4.0).item() == doctest::Approx(5.0).epsilon(1e-15));

  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor pf = randn(rng, {6, 5}), po = randn(rng, {6, 5}), pn = randn(rng, {6, 5});
    const double wa = 5.0 * rng.uniform(), wt = 8.0 * rng.uniform();
    const Tensor g = guided_prediction(pf, po, pn, wa, wt);
    for (std::size_t i = 0; i < g.numel(); ++i) {
      const double expect = pf.at(i) + wa * (pf.at(i) - po.at(i)) + wt * (pf.at(i) - pn.at(i));
      CHECK(std::abs(g.at(i) - expect) <= 1e-12);
    }
    CHECK(testing::bit_equal(guided_prediction(pf, po, pn, 0.0, 0.0), pf));
    const Tensor a = guided_prediction(pf, pf, pn, 0.0, wt);
    const Tensor b = guided_prediction(pf, pf, pn, wa, wt);
    CHECK(testing::max_abs_diff(a.data(), b.data()) <= 1e-12);
  }
  CHECK_THROWS_AS(guided_prediction(Tensor::vector({1, 2}), Tensor::vector({1}), Tensor::vector({1, 2}), 1, 1),
                  DimensionError);
}

TEST_CASE("guidance config") {
  GuidanceConfig g;
  g.validate();
  CHECK(to_json(guidance_from_json(to_json(g))).dump() == to_json(g).dump());
  g.steps = 0;
  CHECK_THROWS_AS(g.validate(), PreconditionError);
  g = {};
  g.w_audio = std::nan("");
  CHECK_THROWS_AS(g.validate(), PreconditionError);
}

TEST_CASE("sampling determinism and the w_audio = 0 shortcut") {
  const auto m = random_model(2);
  Rng rng(3);
  SampleRequest req = request(m, rng);
  const auto a = sample(m, req);
  const auto b = sample(m, req);
  CHECK(testing::bit_equal(a.latents.latents, b.latents.latents));
  CHECK(a.latents.frames() == m.config().frames);
  CHECK(a.trace.size() == req.guidance.steps);
  // Frame 0 is the clamped input.
  for (std::size_t c = 0; c < 4; ++c) CHECK(a.latents.latents.at(0, c) == req.init_latent.at(c));

  req.guidance.w_audio = 0.0;
  const auto skip = sample(m, req);
  req.always_eval_offsync = true;
  const auto full = sample(m, req);
  CHECK(testing::bit_equal(skip.latents.latents, full.latents.latents));

  req.seed = 100;
  CHECK_FALSE(testing::bit_equal(sample(m, req).latents.latents, full.latents.latents));
}

TEST_CASE("off-sync sampling ignores audio") {
  const auto m = random_model(4);
  Rng rng(5);
  SampleRequest req = request(m, rng);
  const auto a = sample_offsync(m, req);
  for (int trial = 0; trial < 3; ++trial) {
    SampleRequest other = req;
    other.audio = randn(rng, req.audio.shape(), 10.0);
    other.guidance.w_audio = 3.0 * trial;
    CHECK(testing::bit_equal(sample_offsync(m, other).latents.latents, a.latents.latents));
  }
  // With audio on, the audio does matter for this random model.
  SampleRequest other = req;
  other.audio = randn(rng, req.audio.shape());
  CHECK_FALSE(testing::bit_equal(sample(m, other).latents.latents, sample(m, req).latents.latents));
}

TEST_CASE("skip-block probes") {
  const auto m = random_model(6);
  Rng rng(7);
  SampleRequest req = request(m, rng);
  const auto base = sample(m, req);
  SampleRequest none = req;
  none.skip_blocks = {};
  CHECK(testing::bit_equal(sample(m, none).latents.latents, base.latents.latents));

  const auto p1 = skip_block_probe(m, req, 1);
  SampleRequest s1 = req;
  s1.skip_blocks = {1};
  CHECK(testing::bit_equal(sample(m, s1).latents.latents, p1.latents.latents));
  CHECK_THROWS_AS(skip_block_probe(m, req, 3), PreconditionError);

  const auto rows = skip_block_sweep(m, req);
  REQUIRE(rows.size() == 3);
  CHECK_FALSE(rows[0].audio_block);
  CHECK(rows[1].audio_block);
  for (const auto& r : rows) CHECK(r.divergence > 0.0);
  const std::string csv = block_probe_csv(rows);
  CHECK(csv.rfind("block,audio_block,divergence,first_frame_mse\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);

  const auto side = sample_sidecar(req, base, "full");
  CHECK(side["mode"] == "full");
}

TEST_CASE("sample input checks") {
  const auto m = random_model(8);
  Rng rng(9);
  SampleRequest req = request(m, rng);
  req.class_id = 0;
  CHECK_THROWS_AS(sample(m, req), PreconditionError);
  req = request(m, rng);
  req.audio = randn(rng, {5, m.config().audio_dim});
  CHECK_THROWS_AS(sample(m, req), DimensionError);
}
