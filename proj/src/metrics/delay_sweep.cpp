// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "synclab/metrics/delay_sweep.hpp"

#include <cmath>

#include "synclab/error.hpp"
#include "synclab/parallel.hpp"
#include "synclab/synth/oracle_v2a.hpp"

namespace synclab::metrics {

audio::OnsetPeaks motion_peaks_at(const synth::LatentSequence& v, double fps,
                                  const audio::PeakPickParams& picker) {
  const double ratio = v.frame_rate_hz / fps;
  const auto step = static_cast<std::size_t>(std::lround(ratio));
  if (step == 0 || std::abs(ratio - static_cast<double>(step)) > 1e-9) {
    throw PreconditionError("motion_peaks_at: " + std::to_string(fps) + " fps does not divide " +
                            std::to_string(v.frame_rate_hz));
  }
  if (step == 1) return synth::motion_peaks(v, picker);
  const std::size_t t = (v.frames() + step - 1) / step;
  const std::size_t c = v.channels();
  Tensor sub = Tensor::zeros({t, c});
  auto dst = sub.mutable_data();
  const auto src = v.latents.data();
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = 0; j < c; ++j) dst[i * c + j] = src[i * step * c + j];
  }
  return synth::motion_peaks(synth::LatentSequence{sub, fps}, picker);
}

double av_align_clip(const audio::OnsetPeaks& audio_peaks, const synth::LatentSequence& v,
                     const AvAlignParams& params) {
  return av_align(audio_peaks, motion_peaks_at(v, params.fps, params.motion_picker), 1.0 / params.fps);
}

SyncReport delay_sweep(const std::vector<synth::Clip>& clips, const V2ABackend& backend,
                       const DelaySweepParams& params) {
  for (double d : params.delays_s) {
    if (!(d >= 0.0) || d > params.margin_s + 1e-12) {
      throw PreconditionError("delay_sweep: delay " + std::to_string(d) + " s exceeds the available margin of " +
                              std::to_string(params.margin_s) + " s");
    }
  }
  for (const auto& m : params.metrics) {
    if (m != kMetricCycleSync && m != kMetricAvAlign) throw PreconditionError("delay_sweep: unknown metric '" + m + "'");
  }
  const std::size_t nd = params.delays_s.size();
  const std::size_t nm = params.metrics.size();
  const std::size_t nc = clips.size();
  std::vector<SyncRow> rows(nd * nm * nc);

  parallel_for(nc, [&](std::size_t c) {
    const synth::Clip& clip = clips[c];
    const audio::OnsetPeaks ref =
        audio::detect_onsets(clip.audio, params.cyclesync.onset, params.cyclesync.picker);
    for (std::size_t di = 0; di < nd; ++di) {
      const double d = params.delays_s[di];
      const synth::LatentSequence shifted = synth::shift_latents(clip.latents, d);
      for (std::size_t mi = 0; mi < nm; ++mi) {
        SyncRow& row = rows[(di * nm + mi) * nc + c];
        row.clip_id = clip.id;
        row.metric = params.metrics[mi];
        row.delay_s = d;
        if (row.metric == kMetricCycleSync) {
          try {
            const CycleSyncResult r =
                cyclesync_with_reference(ref, clip.audio.duration_s(), shifted, backend, params.cyclesync);
            row.score = r.score;
            row.n_peaks_ref = r.n_peaks_ref;
            row.n_peaks_rec = r.n_peaks_rec;
          } catch (const std::exception& e) {
            throw Error("clip " + clip.id + ": " + e.what());
          }
        } else {
          const audio::OnsetPeaks mp = motion_peaks_at(shifted, params.av_align.fps, params.av_align.motion_picker);
          row.score = av_align(ref, mp, 1.0 / params.av_align.fps);
          row.n_peaks_ref = ref.times_s.size();
          row.n_peaks_rec = mp.times_s.size();
        }
      }
    }
  });

  SyncReport report;
  report.rows = std::move(rows);
  report.aggregate();
  return report;
}

}  // namespace synclab::metrics
