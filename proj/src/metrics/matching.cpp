// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "synclab/metrics/matching.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>
#include <vector>

#include "synclab/error.hpp"

namespace synclab::metrics {

namespace {

std::size_t count_matched(const std::vector<double>& from, const std::vector<double>& to, double delta) {
  std::size_t matched = 0, j = 0;
  for (double x : from) {
    // Skip partners that lie below x and out of reach; |x - y| grows
    // monotonically with x for those, so they never match again.
    while (j < to.size() && to[j] < x && std::abs(x - to[j]) > delta) ++j;
    if (j < to.size() && std::abs(x - to[j]) <= delta) ++matched;
  }
  return matched;
}

void require_sorted(const audio::OnsetPeaks& p, const char* which) {
  if (!std::is_sorted(p.times_s.begin(), p.times_s.end())) {
    throw PreconditionError(std::string("match_peaks: set ") + which + " is not sorted");
  }
}

}  // namespace

MatchResult match_peaks(const audio::OnsetPeaks& a, const audio::OnsetPeaks& b, double delta_s) {
  if (!(delta_s >= 0.0)) throw PreconditionError("match_peaks: delta must be >= 0");
  require_sorted(a, "A");
  require_sorted(b, "B");
  MatchResult m;
  m.n_a = a.times_s.size();
  m.n_b = b.times_s.size();
  m.delta_s = delta_s;
  m.matched_a = count_matched(a.times_s, b.times_s, delta_s);
  m.matched_b = count_matched(b.times_s, a.times_s, delta_s);
  std::vector<double> merged;
  merged.reserve(m.n_a + m.n_b);
  std::merge(a.times_s.begin(), a.times_s.end(), b.times_s.begin(), b.times_s.end(),
             std::back_inserter(merged));
  m.union_size = static_cast<std::size_t>(std::distance(merged.begin(), std::unique(merged.begin(), merged.end())));
  return m;
}

ScoreMode parse_score_mode(const std::string& name) {
  if (name == "f1") return ScoreMode::kF1;
  if (name == "paper") return ScoreMode::kPaper;
  throw PreconditionError("unknown score mode '" + name + "' (expected f1 or paper)");
}

const char* score_mode_name(ScoreMode mode) { return mode == ScoreMode::kF1 ? "f1" : "paper"; }

double cyclesync_score(const MatchResult& m, ScoreMode mode) {
  if (m.n_a == 0 && m.n_b == 0) return 1.0;
  if (m.n_a == 0 || m.n_b == 0) return 0.0;
  const double hits = static_cast<double>(m.matched_a + m.matched_b);
  if (mode == ScoreMode::kF1) return hits / static_cast<double>(m.n_a + m.n_b);
  return hits / (2.0 * static_cast<double>(m.union_size));
}

double av_align(const audio::OnsetPeaks& audio_peaks, const audio::OnsetPeaks& motion_peaks,
                double delta_s) {
  if (!(delta_s >= 0.0)) throw PreconditionError("av_align: delta must be >= 0");
  const auto& a = audio_peaks.times_s;
  const auto& b = motion_peaks.times_s;
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;

  // (distance, earlier time, later time, i, j); the key is symmetric in the
  // two arguments so swapping them yields the same pairing.
  std::vector<std::tuple<double, double, double, std::size_t, std::size_t>> cand;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double d = std::abs(a[i] - b[j]);
      if (d <= delta_s) cand.emplace_back(d, std::min(a[i], b[j]), std::max(a[i], b[j]), i, j);
    }
  }
  std::sort(cand.begin(), cand.end(), [](const auto& x, const auto& y) {
    return std::tie(std::get<0>(x), std::get<1>(x), std::get<2>(x)) <
           std::tie(std::get<0>(y), std::get<1>(y), std::get<2>(y));
  });
  std::vector<bool> used_a(a.size(), false), used_b(b.size(), false);
  std::size_t pairs = 0;
  for (const auto& [d, lo, hi, i, j] : cand) {
    if (used_a[i] || used_b[j]) continue;
    used_a[i] = used_b[j] = true;
    ++pairs;
  }
  const double p = static_cast<double>(pairs);
  return p / (static_cast<double>(a.size() + b.size()) - p);
}

}  // namespace synclab::metrics
