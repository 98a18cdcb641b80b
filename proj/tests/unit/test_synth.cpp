// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "synclab/audio/onset.hpp"
#include "synclab/audio/wav.hpp"
#include "synclab/error.hpp"
#include "synclab/synth/dataset.hpp"
#include "synclab/synth/oracle_v2a.hpp"
#include "test_util.hpp"

using namespace synclab;
using namespace synclab::synth;

namespace {

EventScript script_at(std::initializer_list<double> times, double lead = 0.0, double lag = 0.0) {
  EventScript s;
  for (double t : times) s.events.push_back({t, 1, lead, lag, 1.0});
  return s;
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("event script validation and json") {
  EventScript s = script_at({0.5, 1.25}, 0.1, 0.05);
  s.clip_class = 2;
  s.validate();
  const EventScript back = EventScript::from_json(s.to_json());
  CHECK(back.to_json() == s.to_json());
  CHECK(back.events.size() == 2);
  CHECK(back.clip_class == 2);

  EventScript bad = script_at({1.0, 0.5});
  CHECK_THROWS_AS(bad.validate(), PreconditionError);
  bad = script_at({2.5});
  CHECK_THROWS_AS(bad.validate(), PreconditionError);
  bad = script_at({0.5}, -0.1);
  CHECK_THROWS_AS(bad.validate(), PreconditionError);
  CHECK_THROWS(EventScript::from_json("{not json"));
}

TEST_CASE("gen_audio: empty and silent scripts") {
  const EventScript empty;
  const auto w = gen_audio(empty, Rng(1));
  CHECK(w.samples.size() == 32000);
  CHECK(audio::detect_onsets(w).times_s.empty());

  EventScript zero = script_at({0.5, 1.0});
  for (auto& e : zero.events) e.amplitude = 0.0;
  CHECK(gen_audio(zero, Rng(1)).samples == w.samples);
}

TEST_CASE("gen_latents: motion peaks sit on events") {
  const EventScript empty;
  const auto v0 = gen_latents(empty, Rng(2));
  CHECK(v0.frames() == 48);
  CHECK(v0.channels() == 8);
  CHECK(motion_peaks(v0, OracleV2AConfig{}.picker).times_s.empty());

  const auto v = gen_latents(script_at({1.0}), Rng(2));
  const auto ms = motion_series(v);
  CHECK(ms.values.size() == 47);
  // Step l spans frames l and l+1, so the jump into frame 24 is step 23.
  const std::size_t step = argmax(ms.values);
  CHECK(std::abs(double(step + 1) - 24.0) <= 1.0);

  // Lead: displacement starts early. Same noise stream with and without the
  // event isolates the event's displacement.
  const auto with = gen_latents(script_at({1.0}, 0.2), Rng(2));
  const auto without = gen_latents(EventScript{}, Rng(2));
  std::vector<double> disp(with.frames());
  for (std::size_t l = 0; l < disp.size(); ++l) {
    double d2 = 0.0;
    for (std::size_t c = 0; c < with.channels(); ++c) {
      const double d = with.latents.at(l, c) - without.latents.at(l, c);
      d2 += d * d;
    }
    disp[l] = std::sqrt(d2);
  }
  const double top = *std::max_element(disp.begin(), disp.end());
  std::size_t first = 0;
  while (disp[first] < 0.1 * top) ++first;
  CHECK(std::abs(double(first) / 24.0 - 0.8) <= 1.0 / 24.0 + 1e-9);
  // The largest per-frame motion is still the jolt at the event.
  const auto ml = motion_series(with);
  CHECK(std::abs(double(argmax(ml.values) + 1) - 24.0) <= 1.0);
}

TEST_CASE("event profile peaks at the event") {
  const Event e{1.0, 1, 0.1, 0.05, 1.0};
  CHECK(event_profile(e, 1.0) == doctest::Approx(1.0));
  CHECK(event_profile(e, 0.0) < 1e-6);
  CHECK(event_profile(e, 0.95) < 1.0);
  CHECK(event_profile(e, 1.1) < 1.0);
  for (double t = 0.0; t < 2.0; t += 0.01) {
    CHECK(event_profile(e, t) >= 0.0);
    CHECK(event_profile(e, t) <= 1.0 + 1e-12);
  }
}

TEST_CASE("audio features") {
  const EventScript empty;
  audio::Waveform quiet;
  quiet.samples.assign(32000, 0.0);
  const auto f0 = gen_audio_features(quiet);
  CHECK(f0.length() == 192);
  CHECK(f0.dim() == 16);
  for (std::size_t i = 1; i < f0.length(); ++i)
    for (std::size_t d = 0; d < f0.dim(); ++d) CHECK(f0.features.at(i, d) == f0.features.at(0, d));

  for (double dur : {1.0, 1.5, 2.0, 3.0}) {
    quiet.samples.assign(static_cast<std::size_t>(dur * 16000), 0.0);
    CHECK(gen_audio_features(quiet).length() == 4 * static_cast<std::size_t>(dur * 24));
  }
  const auto w = gen_audio(script_at({0.5}), Rng(4));
  CHECK(testing::bit_equal(gen_audio_features(w).features, gen_audio_features(w).features));
  audio::Waveform w8 = w;
  w8.rate_hz = 8000;
  CHECK_THROWS_AS(gen_audio_features(w8), PreconditionError);
}

TEST_CASE("motion series and shifting") {
  LatentSequence flat{Tensor::zeros({10, 8}), 24.0};
  const auto ms = motion_series(flat);
  CHECK(ms.values.size() == 9);
  CHECK(std::all_of(ms.values.begin(), ms.values.end(), [](double v) { return v == 0.0; }));
  CHECK(ms.time_of(0) == doctest::Approx(0.5 / 24.0));

  const auto v = gen_latents(script_at({0.5, 1.0}), Rng(5));
  const auto s = shift_latents(v, 3.0 / 24.0);
  for (std::size_t l = 0; l < 48; ++l) {
    const std::size_t src = l < 3 ? 0 : l - 3;
    for (std::size_t c = 0; c < 8; ++c) CHECK(s.latents.at(l, c) == v.latents.at(src, c));
  }
  CHECK(testing::bit_equal(shift_latents(v, 0.0).latents, v.latents));
}

TEST_CASE("oracle v2a") {
  LatentSequence flat{Tensor::zeros({48, 8}), 24.0};
  const auto quiet = oracle_v2a(flat);
  CHECK(quiet.samples.size() == 32000);
  CHECK(audio::detect_onsets(quiet).times_s.empty());

  const auto v = gen_latents(script_at({0.5, 1.0}), Rng(6));
  const auto peaks = audio::detect_onsets(oracle_v2a(v));
  REQUIRE(peaks.times_s.size() == 2);
  CHECK(std::abs(peaks.times_s[0] - 0.5) <= 1.0 / 24.0);
  CHECK(std::abs(peaks.times_s[1] - 1.0) <= 1.0 / 24.0);

  const auto shifted = audio::detect_onsets(oracle_v2a(shift_latents(v, 0.125)));
  REQUIRE(shifted.times_s.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(shifted.times_s[i] - peaks.times_s[i] - 0.125) <= 0.016);

  // Deterministic per input.
  CHECK(oracle_v2a(v).samples == oracle_v2a(v).samples);
}

TEST_CASE("dataset generation") {
  DatasetParams p;
  p.n_clips = 8;
  const auto a = testing::scratch_dir("ds_a");
  const auto b = testing::scratch_dir("ds_b");
  const Manifest ma = gen_dataset(p, a);
  gen_dataset(p, b);
  CHECK(slurp(a / kManifestName) == slurp(b / kManifestName));
  CHECK(ma.rows.size() == 8);
  for (const auto& r : ma.rows) {
    CHECK(std::filesystem::exists(a / r.wav));
    CHECK(std::filesystem::exists(a / r.latents));
    CHECK(std::filesystem::exists(a / r.features));
    CHECK(std::filesystem::exists(a / r.script));
  }
  // Loaded clips equal the in-memory generator.
  const Manifest loaded = Manifest::load(a / kManifestName);
  for (std::size_t i = 0; i < 8; ++i) {
    const Clip disk = loaded.load_clip(i);
    const Clip mem = make_clip(p, i);
    CHECK(disk.id == mem.id);
    CHECK(disk.audio.samples == mem.audio.samples);
    CHECK(testing::bit_equal(disk.latents.latents, mem.latents.latents));
    CHECK(testing::bit_equal(disk.features.features, mem.features.features));
    CHECK(disk.script.to_json() == mem.script.to_json());
    CHECK(mem.script.events.size() >= 1);
    CHECK(mem.script.events.size() <= 4);
    for (std::size_t k = 1; k < mem.script.events.size(); ++k)
      CHECK(mem.script.events[k].time_s - mem.script.events[k - 1].time_s >= p.min_gap_s - 1e-12);
  }
  p.n_clips = 0;
  CHECK_THROWS_AS(gen_dataset(p, testing::scratch_dir("ds_c")), PreconditionError);
  CHECK_THROWS_AS(Manifest::load(a / "nope.jsonl"), IoError);
}

TEST_CASE("zero-lag dataset: motion peaks track audio peaks") {
  DatasetParams p;
  p.n_clips = 64;
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < p.n_clips; ++i) {
    const Clip c = make_clip(p, i);
    const auto ap = audio::detect_onsets(c.audio);
    const auto mp = motion_peaks(c.latents, OracleV2AConfig{}.picker);
    for (double t : ap.times_s) {
      double best = 1.0;
      for (double u : mp.times_s) best = std::min(best, std::abs(u - t));
      total += best;
      ++n;
    }
  }
  REQUIRE(n > 64);
  CHECK(total / double(n) < 1.0 / 24.0);
}
