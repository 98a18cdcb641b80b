// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "synclab/audio/onset.hpp"
#include "synclab/error.hpp"
#include "synclab/synth/world.hpp"

namespace synclab::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double carrier_for(const WorldConfig& world, int class_id) {
  const auto n = world.class_carrier_hz.size();
  return world.class_carrier_hz[static_cast<std::size_t>(class_id - 1) % n];
}

// Unit direction of a class's channel pair.
constexpr double kDirA = 0.8574929257125441;   // 1 / sqrt(1 + 0.6^2)
constexpr double kDirB = -0.5144957554275265;  // -0.6 / sqrt(1 + 0.6^2)

}  // namespace

audio::Waveform gen_audio(const EventScript& script, const Rng& rng, const WorldConfig& world,
                          GenAudioStats* stats) {
  script.validate();
  const int rate = world.audio_rate_hz;
  const auto n = static_cast<std::size_t>(std::llround(script.duration_s * rate));
  audio::Waveform w{std::vector<double>(n, 0.0), rate};

  Rng floor_rng = rng.fork(0);
  const double floor_amp = std::pow(10.0, world.noise_floor_db / 20.0);
  for (double& s : w.samples) s = floor_amp * floor_rng.normal();

  const auto burst_len = static_cast<std::size_t>(world.burst_length_s * rate);
  for (std::size_t k = 0; k < script.events.size(); ++k) {
    const Event& e = script.events[k];
    Rng burst_rng = rng.fork(1000 + k);
    const double fc = carrier_for(world, e.class_id);
    const auto start = static_cast<std::size_t>(std::llround(e.time_s * rate));
    for (std::size_t i = 0; i < burst_len && start + i < n; ++i) {
      const double t = static_cast<double>(i) / rate;
      const double env = e.amplitude * std::exp(-t / world.burst_decay_s);
      w.samples[start + i] += env * (0.6 * std::sin(kTwoPi * fc * t) + 0.4 * burst_rng.normal());
    }
  }

  std::size_t clipped = 0;
  for (double& s : w.samples) {
    if (s > 1.0 || s < -1.0) {
      s = std::clamp(s, -1.0, 1.0);
      ++clipped;
    }
  }
  if (stats != nullptr) stats->clipped_samples = clipped;
  return w;
}

double event_profile(const Event& e, double t, const WorldConfig& world) {
  if (t < e.time_s) {
    const double u = (e.time_s - t) / world.attack_s;
    const double impact = std::exp(-0.5 * u * u);
    // The wind-up crosses 10% of the full displacement at time - lead.
    const double sigma = e.motion_lead_s / std::sqrt(2.0 * std::log(10.0 * world.lead_fraction));
    if (!(sigma > world.attack_s)) return impact;
    // Slow wind-up to lead_fraction of the displacement, then the jolt.
    const double v = (e.time_s - t) / sigma;
    return world.lead_fraction * std::exp(-0.5 * v * v) + (1.0 - world.lead_fraction) * impact;
  }
  return std::exp(-(t - e.time_s) / (world.release_s + e.motion_lag_s));
}

LatentSequence gen_latents(const EventScript& script, const Rng& rng, const WorldConfig& world) {
  script.validate();
  const std::size_t c = world.channels;
  if (c < static_cast<std::size_t>(2 * world.n_classes)) {
    throw PreconditionError("gen_latents: need two channels per class");
  }
  const auto frames = static_cast<std::size_t>(std::llround(script.duration_s * world.frame_rate_hz));
  if (frames == 0) throw PreconditionError("gen_latents: clip shorter than one frame");

  Rng base_rng = rng.fork(1);
  Rng drift_rng = rng.fork(2);
  std::vector<double> base(c), freq(2 * c), phase(2 * c);
  for (double& b : base) b = world.base_std * base_rng.normal();
  for (std::size_t k = 0; k < 2 * c; ++k) {
    freq[k] = drift_rng.uniform(0.1, 0.5);
    phase[k] = drift_rng.uniform(0.0, kTwoPi);
  }

  Tensor z({frames, c});
  auto data = z.mutable_data();
  for (std::size_t l = 0; l < frames; ++l) {
    const double t = static_cast<double>(l) / world.frame_rate_hz;
    for (std::size_t ch = 0; ch < c; ++ch) {
      // Drift is measured relative to t=0 so frame 0 equals the base.
      double drift = 0.0;
      for (std::size_t k = 0; k < 2; ++k) {
        const std::size_t idx = 2 * ch + k;
        drift += std::sin(kTwoPi * freq[idx] * t + phase[idx]) - std::sin(phase[idx]);
      }
      data[l * c + ch] = base[ch] + 0.5 * world.drift_amplitude * drift;
    }
    for (const Event& e : script.events) {
      const std::size_t ch0 = 2 * static_cast<std::size_t>((e.class_id - 1) % world.n_classes);
      const double d = world.event_scale * e.amplitude * event_profile(e, t, world);
      data[l * c + ch0] += kDirA * d;
      data[l * c + ch0 + 1] += kDirB * d;
    }
  }
  return {z, world.frame_rate_hz};
}

AudioFeatureSequence gen_audio_features(const audio::Waveform& w, const WorldConfig& world) {
  if (w.rate_hz != world.audio_rate_hz) {
    throw PreconditionError("gen_audio_features: expected " + std::to_string(world.audio_rate_hz) +
                            " Hz audio, got " + std::to_string(w.rate_hz));
  }
  const auto length = static_cast<std::size_t>(std::llround(w.duration_s() * world.feature_rate_hz));
  if (length == 0) throw PreconditionError("gen_audio_features: clip too short");
  const std::size_t n_mels = world.feature_n_mels, d = world.feature_dim;

  // Fixed projection, identical for every clip.
  Rng proj_rng(world.feature_projection_seed);
  std::vector<double> proj(n_mels * d);
  const double s = 1.0 / std::sqrt(static_cast<double>(n_mels));
  for (double& p : proj) p = s * proj_rng.normal();

  audio::MelAnalyzer mel(world.feature_n_fft, n_mels, w.rate_hz);
  std::vector<double> frame(n_mels);
  Tensor out({length, d});
  auto data = out.mutable_data();
  const long half = static_cast<long>(world.feature_n_fft / 2);
  for (std::size_t i = 0; i < length; ++i) {
    const long centre = std::lround(static_cast<double>(i) * w.rate_hz / world.feature_rate_hz);
    mel.log_mel(w.samples, centre - half, frame);
    // Roughly unit scale: silence sits near -2.6, full-scale bursts near +1.
    for (double& v : frame) v = (v + 4.0) / 4.0;
    for (std::size_t j = 0; j < d; ++j) {
      double acc = 0.0;
      for (std::size_t b = 0; b < n_mels; ++b) acc += frame[b] * proj[b * d + j];
      data[i * d + j] = acc;
    }
  }
  return {out, world.feature_rate_hz};
}

audio::EnvelopeSeries motion_series(const LatentSequence& v) {
  if (v.latents.rank() != 2 || v.frames() < 2) {
    throw PreconditionError("motion_series: need at least two frames");
  }
  const std::size_t frames = v.frames(), c = v.channels();
  auto z = v.latents.data();
  audio::EnvelopeSeries env;
  env.values.resize(frames - 1);
  env.hop_s = 1.0 / v.frame_rate_hz;
  env.offset_s = 0.5 / v.frame_rate_hz;
  for (std::size_t l = 0; l + 1 < frames; ++l) {
    double acc = 0.0;
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double diff = z[(l + 1) * c + ch] - z[l * c + ch];
      acc += diff * diff;
    }
    env.values[l] = std::sqrt(acc);
  }
  return env;
}

LatentSequence shift_latents(const LatentSequence& v, double delay_s) {
  const long k = std::lround(delay_s * v.frame_rate_hz);
  const long frames = static_cast<long>(v.frames());
  if (k < 0 || k >= frames) {
    throw PreconditionError("shift_latents: delay " + std::to_string(delay_s) + " s out of range");
  }
  const std::size_t c = v.channels();
  Tensor out({v.frames(), c});
  auto dst = out.mutable_data();
  auto src = v.latents.data();
  for (long l = 0; l < frames; ++l) {
    const long from = std::max(0L, l - k);
    std::copy_n(src.begin() + from * static_cast<long>(c), c, dst.begin() + l * static_cast<long>(c));
  }
  return {out, v.frame_rate_hz};
}

}  // namespace synclab::synth
