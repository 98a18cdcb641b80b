// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

namespace synclab::audio {

inline constexpr int kDefaultRateHz = 16000;

// Mono audio, samples nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int rate_hz = kDefaultRateHz;

  double duration_s() const { return static_cast<double>(samples.size()) / rate_hz; }
  // Throws PreconditionError on non-finite samples or a non-positive rate.
  void validate() const;
};

// Strictly increasing onset times in seconds.
struct OnsetPeaks {
  std::vector<double> times_s;
};

// Nonnegative per-step detection function. Step i is centred on
// offset_s + i * hop_s.
struct EnvelopeSeries {
  std::vector<double> values;
  double hop_s = 0.0;
  double offset_s = 0.0;

  double time_of(std::size_t i) const { return offset_s + static_cast<double>(i) * hop_s; }
};

// Delays content by round(delay_s * rate) samples (negative advances it),
// zero-padding the vacated end. Length is preserved. |delay_s| must be less
// than the clip duration.
Waveform shift_audio(const Waveform& w, double delay_s);

// Linear-interpolation resampler.
Waveform resample_linear(const Waveform& w, int target_rate_hz);

}  // namespace synclab::audio
