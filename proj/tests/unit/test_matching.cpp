// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "synclab/error.hpp"
#include "synclab/metrics/matching.hpp"
#include "test_util.hpp"

using namespace synclab;
using namespace synclab::metrics;
using audio::OnsetPeaks;

namespace {

MatchResult brute_force(const OnsetPeaks& a, const OnsetPeaks& b, double delta) {
  MatchResult m;
  m.n_a = a.times_s.size();
  m.n_b = b.times_s.size();
  m.delta_s = delta;
  for (double x : a.times_s) {
    bool hit = false;
    for (double y : b.times_s) hit = hit || std::abs(x - y) <= delta;
    m.matched_a += hit;
  }
  for (double y : b.times_s) {
    bool hit = false;
    for (double x : a.times_s) hit = hit || std::abs(x - y) <= delta;
    m.matched_b += hit;
  }
  std::set<double> u(a.times_s.begin(), a.times_s.end());
  u.insert(b.times_s.begin(), b.times_s.end());
  m.union_size = u.size();
  return m;
}

OnsetPeaks random_peaks(Rng& rng, bool on_grid) {
  OnsetPeaks p;
  const auto n = rng.uniform_int(0, 12);
  for (std::int64_t i = 0; i < n; ++i) {
    // Grid draws create exact ties and exact-delta distances.
    p.times_s.push_back(on_grid ? 0.01 * double(rng.uniform_int(0, 200)) : 2.0 * rng.uniform());
  }
  std::sort(p.times_s.begin(), p.times_s.end());
  return p;
}

}  // namespace

TEST_CASE("two-pointer matcher equals brute force on 1000 random instances") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const bool grid = trial % 2 == 0;
    const OnsetPeaks a = random_peaks(rng, grid), b = random_peaks(rng, grid);
    const double delta = grid ? 0.01 * double(rng.uniform_int(0, 10)) : 0.2 * rng.uniform();
    const MatchResult fast = match_peaks(a, b, delta);
    const MatchResult slow = brute_force(a, b, delta);
    CAPTURE(trial);
    REQUIRE(fast.matched_a == slow.matched_a);
    REQUIRE(fast.matched_b == slow.matched_b);
    REQUIRE(fast.n_a == slow.n_a);
    REQUIRE(fast.n_b == slow.n_b);
    REQUIRE(fast.union_size == slow.union_size);
    for (auto mode : {ScoreMode::kF1, ScoreMode::kPaper}) {
      const double s = cyclesync_score(fast, mode);
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
    }
    // Symmetry.
    const MatchResult rev = match_peaks(b, a, delta);
    CHECK(rev.matched_a == fast.matched_b);
    CHECK(cyclesync_score(rev) == cyclesync_score(fast));
  }
}

TEST_CASE("hand examples") {
  const OnsetPeaks a{{0.10, 0.50, 0.90}}, b{{0.11, 0.70}};
  const MatchResult m = match_peaks(a, b, 0.05);
  CHECK(m.matched_a == 1);
  CHECK(m.matched_b == 1);
  CHECK(m.union_size == 5);
  CHECK(cyclesync_score(m, ScoreMode::kF1) == 0.4);
  CHECK(cyclesync_score(m, ScoreMode::kPaper) == 0.2);

  const MatchResult same = match_peaks(a, a, 0.05);
  CHECK(same.matched_a == 3);
  CHECK(same.matched_b == 3);
  CHECK(cyclesync_score(same, ScoreMode::kF1) == 1.0);
  CHECK(cyclesync_score(same, ScoreMode::kPaper) == 1.0);

  const MatchResult far = match_peaks(OnsetPeaks{{0.1}}, OnsetPeaks{{0.3}}, 0.05);
  CHECK(far.matched_a == 0);
  CHECK(far.matched_b == 0);

  CHECK(cyclesync_score(match_peaks({}, {}, 0.05)) == 1.0);
  CHECK(cyclesync_score(match_peaks(a, {}, 0.05)) == 0.0);
}

TEST_CASE("matcher preconditions") {
  CHECK_THROWS_AS(match_peaks(OnsetPeaks{{0.5, 0.1}}, {}, 0.05), PreconditionError);
  CHECK_THROWS_AS(match_peaks({}, {}, -0.01), PreconditionError);
  CHECK(parse_score_mode("paper") == ScoreMode::kPaper);
  CHECK(std::string(score_mode_name(ScoreMode::kF1)) == "f1");
  CHECK_THROWS_AS(parse_score_mode("iou"), PreconditionError);
}

TEST_CASE("av_align") {
  const OnsetPeaks a{{0.10, 0.50, 0.90}}, b{{0.11, 0.70}};
  CHECK(av_align(a, a, 0.05) == 1.0);
  CHECK(av_align(a, b, 0.05) == 0.25);
  CHECK(av_align(a, OnsetPeaks{{0.3, 0.7}}, 0.05) == 0.0);
  CHECK(av_align({}, {}, 0.05) == 1.0);
  CHECK(av_align(a, {}, 0.05) == 0.0);
  // One-to-one: two audio peaks near one motion peak pair up only once.
  CHECK(av_align(OnsetPeaks{{0.50, 0.52}}, OnsetPeaks{{0.51}}, 0.05) == doctest::Approx(0.5));

  Rng rng(9);
  for (int trial = 0; trial < 300; ++trial) {
    const OnsetPeaks x = random_peaks(rng, false), y = random_peaks(rng, false);
    const double s = av_align(x, y, 0.1);
    CHECK(s == av_align(y, x, 0.1));
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
    // A one-to-one pairing can never beat the many-to-one hit counts.
    if (!x.times_s.empty() && !y.times_s.empty()) {
      const auto m = match_peaks(x, y, 0.1);
      const double pairs = s * double(x.times_s.size() + y.times_s.size()) / (1.0 + s);
      CHECK(pairs <= double(std::min(m.matched_a, m.matched_b)) + 1e-9);
    }
  }
}
