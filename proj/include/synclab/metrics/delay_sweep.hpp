// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "synclab/audio/onset.hpp"
#include "synclab/metrics/backend.hpp"
#include "synclab/metrics/cyclesync.hpp"
#include "synclab/metrics/report.hpp"
#include "synclab/synth/dataset.hpp"

namespace synclab::metrics {

inline constexpr const char* kMetricCycleSync = "cyclesync";
inline constexpr const char* kMetricAvAlign = "av_align";

struct AvAlignParams {
  // Motion is measured on latents subsampled to this rate; the tolerance is
  // one frame at that rate.
  double fps = 6.0;
  audio::PeakPickParams motion_picker{2, 2, 3, 3, 0.35, 0.08, true};
};

// Motion peaks of `v` after subsampling to `fps` (must divide the frame rate).
audio::OnsetPeaks motion_peaks_at(const synth::LatentSequence& v, double fps,
                                  const audio::PeakPickParams& picker);

// AV-Align between a clip's audio and its (possibly shifted) latents.
double av_align_clip(const audio::OnsetPeaks& audio_peaks, const synth::LatentSequence& v,
                     const AvAlignParams& params = {});

struct DelaySweepParams {
  std::vector<double> delays_s{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<std::string> metrics{kMetricCycleSync, kMetricAvAlign};
  double margin_s = 0.5;
  CycleSyncParams cyclesync{};
  AvAlignParams av_align{};
};

// For every delay, delays each clip's latents relative to its audio and
// scores each metric per clip. Rows are ordered by delay, metric, clip.
// Delays outside [0, margin_s] throw.
SyncReport delay_sweep(const std::vector<synth::Clip>& clips, const V2ABackend& backend,
                       const DelaySweepParams& params = {});

}  // namespace synclab::metrics
