// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "synclab/audio/onset.hpp"
#include "synclab/audio/waveform.hpp"
#include "synclab/metrics/backend.hpp"
#include "synclab/metrics/matching.hpp"
#include "synclab/synth/world.hpp"

namespace synclab::metrics {

using synth::motion_series;

struct CycleSyncParams {
  double delta_s = 0.05;
  ScoreMode mode = ScoreMode::kF1;
  audio::OnsetConfig onset{};
  audio::PeakPickParams picker{};
};

struct CycleSyncResult {
  double score = 0.0;
  std::size_t n_peaks_ref = 0;
  std::size_t n_peaks_rec = 0;
};

// Reconstructs audio from the video with the backend, extracts onset peaks
// from both tracks and scores their tolerance matching. Audio and video
// durations must agree within one video frame.
CycleSyncResult cyclesync_detail(const audio::Waveform& audio, const synth::LatentSequence& video,
                                 const V2ABackend& backend, const CycleSyncParams& params = {});

double cyclesync(const audio::Waveform& audio, const synth::LatentSequence& video,
                 const V2ABackend& backend, const CycleSyncParams& params = {});

// Same score against precomputed reference peaks (saves re-analysing the
// original audio across many videos).
CycleSyncResult cyclesync_with_reference(const audio::OnsetPeaks& reference, double audio_duration_s,
                                         const synth::LatentSequence& video, const V2ABackend& backend,
                                         const CycleSyncParams& params = {});

}  // namespace synclab::metrics
