// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "synclab/audio/waveform.hpp"

#include <cmath>
#include <string>

#include "synclab/error.hpp"

namespace synclab::audio {

void Waveform::validate() const {
  if (rate_hz <= 0) throw PreconditionError("waveform: rate must be positive");
  for (double s : samples) {
    if (!std::isfinite(s)) throw PreconditionError("waveform: non-finite sample");
  }
}

Waveform shift_audio(const Waveform& w, double delay_s) {
  if (!(std::abs(delay_s) < w.duration_s())) {
    throw PreconditionError("shift_audio: delay " + std::to_string(delay_s) +
                            " s exceeds clip length " + std::to_string(w.duration_s()) + " s");
  }
  const auto k = static_cast<long>(std::lround(delay_s * w.rate_hz));
  const long n = static_cast<long>(w.samples.size());
  Waveform out{std::vector<double>(w.samples.size(), 0.0), w.rate_hz};
  for (long i = 0; i < n; ++i) {
    const long src = i - k;
    if (src >= 0 && src < n) out.samples[static_cast<std::size_t>(i)] = w.samples[static_cast<std::size_t>(src)];
  }
  return out;
}

Waveform resample_linear(const Waveform& w, int target_rate_hz) {
  if (target_rate_hz <= 0) throw PreconditionError("resample_linear: rate must be positive");
  if (target_rate_hz == w.rate_hz || w.samples.empty()) return {w.samples, target_rate_hz};
  const double ratio = static_cast<double>(w.rate_hz) / target_rate_hz;
  const auto n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(w.samples.size()) / ratio));
  Waveform out{std::vector<double>(n_out, 0.0), target_rate_hz};
  const std::size_t last = w.samples.size() - 1;
  for (std::size_t i = 0; i < n_out; ++i) {
    const double pos = static_cast<double>(i) * ratio;
    const auto i0 = std::min(static_cast<std::size_t>(pos), last);
    const std::size_t i1 = std::min(i0 + 1, last);
    const double frac = pos - static_cast<double>(i0);
    out.samples[i] = w.samples[i0] * (1.0 - frac) + w.samples[i1] * frac;
  }
  return out;
}

}  // namespace synclab::audio
