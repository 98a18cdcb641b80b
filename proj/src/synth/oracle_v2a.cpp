// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "synclab/synth/oracle_v2a.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "synclab/diffcore/rng.hpp"

namespace synclab::synth {

audio::OnsetPeaks motion_peaks(const LatentSequence& v, const audio::PeakPickParams& picker) {
  return audio::pick_peaks(motion_series(v), picker);
}

audio::Waveform oracle_v2a(const LatentSequence& v, const OracleV2AConfig& config) {
  const audio::OnsetPeaks peaks = motion_peaks(v, config.picker);
  const auto n = static_cast<std::size_t>(std::llround(v.duration_s() * config.rate_hz));
  audio::Waveform w{std::vector<double>(n, 0.0), config.rate_hz};
  Rng floor_rng(0xF1003ull);
  const double floor_amp = std::pow(10.0, config.noise_floor_db / 20.0);
  for (double& s : w.samples) s = floor_amp * floor_rng.normal();
  const auto burst_len = static_cast<std::size_t>(10.0 * config.decay_s * config.rate_hz);
  for (std::size_t k = 0; k < peaks.times_s.size(); ++k) {
    // Burst texture depends only on the peak index, keeping the backend a
    // pure function of its input.
    Rng texture(0xB0A57ull, k);
    const auto start = static_cast<std::size_t>(std::llround(peaks.times_s[k] * config.rate_hz));
    for (std::size_t i = 0; i < burst_len && start + i < n; ++i) {
      const double t = static_cast<double>(i) / config.rate_hz;
      const double env = config.burst_amplitude * std::exp(-t / config.decay_s);
      w.samples[start + i] +=
          env * (0.6 * std::sin(2.0 * std::numbers::pi * config.carrier_hz * t) + 0.4 * texture.normal());
    }
  }
  for (double& s : w.samples) s = std::clamp(s, -1.0, 1.0);
  return w;
}

}  // namespace synclab::synth
