// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>

#include "synclab/audio/waveform.hpp"

namespace synclab::metrics {

struct MatchResult {
  std::size_t matched_a = 0;  // peaks of A with a partner in B within delta
  std::size_t matched_b = 0;  // peaks of B with a partner in A within delta
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  // Distinct time values in A u B, for the literal union normalization.
  std::size_t union_size = 0;
  double delta_s = 0.0;
};

// Symmetric tolerance matching by a sorted two-pointer sweep. Inputs must be
// sorted ascending. delta_s must be >= 0.
MatchResult match_peaks(const audio::OnsetPeaks& a, const audio::OnsetPeaks& b, double delta_s);

enum class ScoreMode {
  kF1,     // (matched_a + matched_b) / (n_a + n_b)
  kPaper,  // (matched_a + matched_b) / (2 |A u B|)
};

ScoreMode parse_score_mode(const std::string& name);
const char* score_mode_name(ScoreMode mode);

// Both sets empty -> 1, exactly one empty -> 0.
double cyclesync_score(const MatchResult& m, ScoreMode mode = ScoreMode::kF1);

// Intersection-over-union of a greedy nearest one-to-one pairing:
// pairs / (n_a + n_b - pairs). Candidate pairs within delta are taken in
// order of increasing distance. Both empty -> 1, exactly one empty -> 0.
double av_align(const audio::OnsetPeaks& audio_peaks, const audio::OnsetPeaks& motion_peaks,
                double delta_s);

}  // namespace synclab::metrics
