// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "synclab/audio/onset.hpp"
#include "synclab/audio/waveform.hpp"
#include "synclab/synth/world.hpp"

namespace synclab::synth {

// Motion-driven video-to-audio synthesizer: picks peaks of the motion series
// and renders one decaying burst per peak on a quiet noise floor. Mirrors how the
// world encodes events in motion, so aligned clips reconstruct their own
// onsets.
struct OracleV2AConfig {
  // Motion magnitudes are in latent units; events move >= ~0.9, drift ~0.04.
  audio::PeakPickParams picker{4, 4, 4, 4, 0.35, 0.2, true};
  double burst_amplitude = 0.8;
  double carrier_hz = 1000.0;
  double decay_s = 0.03;
  // Same white floor as the synthetic world, from a fixed stream.
  double noise_floor_db = -40.0;
  int rate_hz = 16000;
};

audio::OnsetPeaks motion_peaks(const LatentSequence& v, const audio::PeakPickParams& picker);

audio::Waveform oracle_v2a(const LatentSequence& v, const OracleV2AConfig& config = {});

}  // namespace synclab::synth
