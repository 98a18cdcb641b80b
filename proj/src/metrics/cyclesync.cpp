// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "synclab/metrics/cyclesync.hpp"

#include <cmath>
#include <string>

#include "synclab/error.hpp"

namespace synclab::metrics {

CycleSyncResult cyclesync_with_reference(const audio::OnsetPeaks& reference, double audio_duration_s,
                                         const synth::LatentSequence& video, const V2ABackend& backend,
                                         const CycleSyncParams& params) {
  const double frame = 1.0 / video.frame_rate_hz;
  if (std::abs(audio_duration_s - video.duration_s()) > frame + 1e-9) {
    throw PreconditionError("cyclesync: audio (" + std::to_string(audio_duration_s) + " s) and video (" +
                            std::to_string(video.duration_s()) + " s) durations differ by more than a frame");
  }
  const audio::Waveform rec = backend.reconstruct(video);
  const audio::OnsetPeaks rec_peaks = audio::detect_onsets(rec, params.onset, params.picker);
  const MatchResult m = match_peaks(reference, rec_peaks, params.delta_s);
  return {cyclesync_score(m, params.mode), reference.times_s.size(), rec_peaks.times_s.size()};
}

CycleSyncResult cyclesync_detail(const audio::Waveform& audio, const synth::LatentSequence& video,
                                 const V2ABackend& backend, const CycleSyncParams& params) {
  const audio::OnsetPeaks ref = audio::detect_onsets(audio, params.onset, params.picker);
  return cyclesync_with_reference(ref, audio.duration_s(), video, backend, params);
}

double cyclesync(const audio::Waveform& audio, const synth::LatentSequence& video,
                 const V2ABackend& backend, const CycleSyncParams& params) {
  return cyclesync_detail(audio, video, backend, params).score;
}

}  // namespace synclab::metrics
