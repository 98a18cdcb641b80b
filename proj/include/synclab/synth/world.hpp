// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "synclab/audio/onset.hpp"
#include "synclab/audio/waveform.hpp"
#include "synclab/diffcore/rng.hpp"
#include "synclab/diffcore/tensor.hpp"
#include "synclab/synth/event_script.hpp"

namespace synclab::synth {

// Constants of the synthetic audio-motion world.
struct WorldConfig {
  int audio_rate_hz = 16000;
  double frame_rate_hz = 24.0;
  std::size_t channels = 8;
  double feature_rate_hz = 96.0;
  std::size_t feature_dim = 16;
  int n_classes = 3;

  // Audio: per-event decaying burst over a white noise floor.
  double burst_decay_s = 0.03;
  double burst_length_s = 0.3;
  double noise_floor_db = -40.0;
  std::array<double, 4> class_carrier_hz{440.0, 1320.0, 3520.0, 5280.0};

  // Motion: each event displaces its class's channel pair by
  // event_scale * amplitude along a fixed direction, rising over the lead
  // window and relaxing over attack/release + lag. With a lead, a slow
  // wind-up covers lead_fraction of the displacement and the rest arrives as
  // a jolt at the event, so the largest per-frame motion stays on the event.
  // lead_fraction must exceed 0.1.
  double event_scale = 2.0;
  double lead_fraction = 0.25;
  double attack_s = 0.02;
  double release_s = 0.15;
  double base_std = 0.5;
  double drift_amplitude = 0.1;

  // Audio feature front end.
  std::size_t feature_n_fft = 512;
  std::size_t feature_n_mels = 32;
  std::uint64_t feature_projection_seed = 0x5EEDFEA7ull;
};

// T x C latent trajectory.
struct LatentSequence {
  Tensor latents;
  double frame_rate_hz = 24.0;

  std::size_t frames() const { return latents.dim(0); }
  std::size_t channels() const { return latents.dim(1); }
  double duration_s() const { return static_cast<double>(frames()) / frame_rate_hz; }
};

// L x D audio feature frames; feature i is centred at i / rate_hz.
struct AudioFeatureSequence {
  Tensor features;
  double rate_hz = 96.0;

  std::size_t length() const { return features.dim(0); }
  std::size_t dim() const { return features.dim(1); }
};

struct GenAudioStats {
  std::size_t clipped_samples = 0;
};

audio::Waveform gen_audio(const EventScript& script, const Rng& rng, const WorldConfig& world = {},
                          GenAudioStats* stats = nullptr);

LatentSequence gen_latents(const EventScript& script, const Rng& rng, const WorldConfig& world = {});

// Displacement profile of one event at time t, in [0, 1], peaking at the
// event time.
double event_profile(const Event& e, double t, const WorldConfig& world = {});

// Projected log-mel frames at feature_rate_hz. Input must be 16 kHz.
AudioFeatureSequence gen_audio_features(const audio::Waveform& w, const WorldConfig& world = {});

// m_l = |z_{l+1} - z_l|_2 for l in [0, T-1); step l is dated at the midpoint
// of the two frames. Requires T >= 2.
audio::EnvelopeSeries motion_series(const LatentSequence& v);

// Shifts latents later by round(delay_s * frame_rate) frames, holding the
// first frame over the vacated head.
LatentSequence shift_latents(const LatentSequence& v, double delay_s);

}  // namespace synclab::synth
