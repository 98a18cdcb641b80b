// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <fstream>

#include "synclab/error.hpp"
#include "synclab/metrics/backend.hpp"
#include "synclab/metrics/cyclesync.hpp"
#include "synclab/metrics/delay_sweep.hpp"
#include "synclab/metrics/report.hpp"
#include "test_util.hpp"

using namespace synclab;
using namespace synclab::metrics;

namespace {

std::vector<synth::Clip> clips(std::size_t n, std::uint64_t seed = 7) {
  synth::DatasetParams p;
  p.seed = seed;
  std::vector<synth::Clip> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(synth::make_clip(p, i));
  return out;
}

}  // namespace

TEST_CASE("cyclesync round trip and failure cases") {
  const OracleBackend oracle;
  const auto cs = clips(12);
  double total = 0.0;
  for (const auto& c : cs) {
    const double aligned = cyclesync(c.audio, c.latents, oracle);
    const double late = cyclesync(c.audio, synth::shift_latents(c.latents, 0.3), oracle);
    CHECK(late < aligned);
    total += aligned;
  }
  CHECK(total / double(cs.size()) >= 0.95);

  const synth::LatentSequence still{Tensor::zeros({48, 8}), 24.0};
  CHECK(cyclesync(cs[0].audio, still, oracle) == 0.0);

  // Durations must agree within a frame.
  const synth::LatentSequence shorter{Tensor::zeros({40, 8}), 24.0};
  CHECK_THROWS_AS(cyclesync(cs[0].audio, shorter, oracle), PreconditionError);

  // Precomputed reference peaks give the same result.
  const auto ref = audio::detect_onsets(cs[1].audio);
  const auto a = cyclesync_detail(cs[1].audio, cs[1].latents, oracle);
  const auto b = cyclesync_with_reference(ref, cs[1].audio.duration_s(), cs[1].latents, oracle);
  CHECK(a.score == b.score);
  CHECK(a.n_peaks_ref == ref.times_s.size());
}

TEST_CASE("preparatory motion hurts direct matching more than cyclesync") {
  auto relative = [](double lead) {
    synth::DatasetParams p;
    p.seed = 7;
    p.lead_min_s = p.lead_max_s = lead;
    double cs = 0.0, av = 0.0;
    for (std::size_t i = 0; i < 24; ++i) {
      const auto c = synth::make_clip(p, i);
      cs += cyclesync(c.audio, c.latents, OracleBackend());
      av += av_align_clip(audio::detect_onsets(c.audio), c.latents);
    }
    return std::pair{cs, av};
  };
  const auto [cs0, av0] = relative(0.0);
  const auto [cs2, av2] = relative(0.2);
  const double cs_drop = 1.0 - cs2 / cs0, av_drop = 1.0 - av2 / av0;
  MESSAGE("lead 0.2 s: cyclesync drop " << cs_drop << ", av_align drop " << av_drop);
  CHECK(av_drop > cs_drop);
}

TEST_CASE("backend factory and external command") {
  CHECK(make_backend("oracle")->name() == "oracle");
  CHECK_THROWS_AS(make_backend("magic"), PreconditionError);

  const auto c = clips(1)[0];
  const auto ext = make_backend(std::string("external:") + SYNCLAB_CLI_PATH + " v2a-oracle");
  const auto via_cli = ext->reconstruct(c.latents);
  const auto direct = OracleBackend().reconstruct(c.latents);
  // The CLI writes PCM16, so compare on that grid.
  REQUIRE(via_cli.samples.size() == direct.samples.size());
  CHECK(testing::max_abs_diff(via_cli.samples, direct.samples) <= 1.0 / 32768.0);
  CHECK(cyclesync(c.audio, c.latents, *ext) == cyclesync(c.audio, c.latents, OracleBackend()));

  CHECK_THROWS_AS(ExternalBackend("exit 3").reconstruct(c.latents), Error);
  CHECK_THROWS_AS(ExternalBackend("echo not-a-wav").reconstruct(c.latents), FormatError);
}

TEST_CASE("av_align subsampling") {
  const auto c = clips(1)[0];
  CHECK_THROWS_AS(motion_peaks_at(c.latents, 5.0, AvAlignParams{}.motion_picker), PreconditionError);
  const auto p24 = motion_peaks_at(c.latents, 24.0, AvAlignParams{}.motion_picker);
  const auto p6 = motion_peaks_at(c.latents, 6.0, AvAlignParams{}.motion_picker);
  CHECK(!p24.times_s.empty());
  CHECK(p6.times_s.size() <= p24.times_s.size() + 1);
  const double s = av_align_clip(audio::detect_onsets(c.audio), c.latents);
  CHECK(s >= 0.0);
  CHECK(s <= 1.0);
}

TEST_CASE("delay sweep structure") {
  const auto cs = clips(6);
  DelaySweepParams p;
  p.delays_s = {0.0, 0.3};
  const SyncReport r = delay_sweep(cs, OracleBackend(), p);
  CHECK(r.rows.size() == 2 * 2 * 6);
  // Ordered by delay, metric, clip.
  CHECK(r.rows[0].delay_s == 0.0);
  CHECK(r.rows[0].metric == kMetricCycleSync);
  CHECK(r.rows[6].metric == kMetricAvAlign);
  CHECK(r.rows[12].delay_s == 0.3);
  CHECK(r.aggregates.size() == 4);
  CHECK(r.find(kMetricCycleSync, 0.0)->rel_change_pct == 0.0);
  CHECK(r.find(kMetricCycleSync, 0.3)->rel_change_pct < 0.0);
  CHECK(r.find("nope", 0.0) == nullptr);

  // Same inputs, same bytes.
  CHECK(delay_sweep(cs, OracleBackend(), p).to_csv() == r.to_csv());

  p.delays_s = {0.0, 0.7};
  CHECK_THROWS_AS(delay_sweep(cs, OracleBackend(), p), PreconditionError);
  p.delays_s = {0.0};
  p.metrics = {"bogus"};
  CHECK_THROWS_AS(delay_sweep(cs, OracleBackend(), p), PreconditionError);
}

TEST_CASE("report aggregation and formatting") {
  SyncReport r;
  r.rows = {{"c0", "m", 0.0, 1.0, 1, 1}, {"c1", "m", 0.0, 0.5, 1, 1},
            {"c0", "m", 0.1, 0.5, 1, 1}, {"c1", "m", 0.1, 0.25, 1, 1}};
  r.aggregate();
  REQUIRE(r.aggregates.size() == 2);
  const auto& a0 = r.aggregates[0];
  CHECK(a0.n == 2);
  CHECK(a0.mean == 0.75);
  CHECK(a0.std == doctest::Approx(std::sqrt(0.125)));
  CHECK(a0.ci95 == doctest::Approx(1.96 * std::sqrt(0.125) / std::sqrt(2.0)));
  CHECK(r.aggregates[1].rel_change_pct == doctest::Approx(-50.0));

  const std::string csv = r.to_csv();
  CHECK(csv.rfind("clip_id,metric,delay_s,score_x100\n", 0) == 0);
  CHECK(csv.find("c1,m,0.100,25.0000\n") != std::string::npos);

  CHECK(fmt_fixed(-0.00001, 3) == "0.000");
  CHECK(fmt_fixed(1.23456, 2) == "1.23");

  const auto one = aggregate_scores({0.4});
  CHECK(one.n == 1);
  CHECK(one.std == 0.0);

  const auto dir = testing::scratch_dir("report");
  r.write(dir / "sub" / "r.csv", dir / "sub" / "r.json");
  std::ifstream in(dir / "sub" / "r.csv");
  std::string first;
  std::getline(in, first);
  CHECK(first == "clip_id,metric,delay_s,score_x100");
}
