// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "synclab/audio/waveform.hpp"

namespace synclab::audio {

// Hann-windowed magnitude STFT frame -> Slaney mel bands -> log(mel + 1e-6).
// Owns an FFT plan; use one instance per thread.
class MelAnalyzer {
 public:
  static constexpr double kLogOffset = 1e-6;

  MelAnalyzer(std::size_t n_fft, std::size_t n_mels, int rate_hz);
  ~MelAnalyzer();
  MelAnalyzer(const MelAnalyzer&) = delete;
  MelAnalyzer& operator=(const MelAnalyzer&) = delete;

  std::size_t n_fft() const { return n_fft_; }
  std::size_t n_mels() const { return n_mels_; }

  // Log-mel of the window starting at sample `start`; samples outside the
  // signal read as zero.
  void log_mel(std::span<const double> signal, long start, std::span<double> out);

  // Filterbank row b over the n_fft/2+1 magnitude bins.
  std::span<const double> filter(std::size_t band) const;

 private:
  struct Plan;
  std::size_t n_fft_;
  std::size_t n_mels_;
  std::size_t n_bins_;
  std::vector<double> window_;
  std::vector<double> filters_;
  std::vector<double> magnitude_;
  std::unique_ptr<Plan> plan_;
};

struct OnsetConfig {
  std::size_t n_fft = 1024;
  std::size_t hop = 256;
  std::size_t n_mels = 64;
};

// Spectral flux: sum over mel bands of the half-wave-rectified first
// difference of log-mel magnitude, divided by kFluxScale so that the peak
// picker's delta is expressed in a fixed, clip-independent unit. Length is
// floor((len - n_fft) / hop) + 1; the first step is 0.
EnvelopeSeries onset_envelope(const Waveform& w, const OnsetConfig& config = {});

struct PeakPickParams {
  int pre_max = 3;
  int post_max = 3;
  int pre_avg = 6;
  int post_avg = 6;
  double delta = 0.07;
  double wait_s = 0.03;
  // Refine each accepted step to the vertex of a parabola through it and its
  // neighbours (at most half a step either way).
  bool interpolate = true;
};

// Local-max picking: value is the (first) maximum over [n-pre_max, n+post_max],
// at least delta above the mean over [n-pre_avg, n+post_avg], and at least
// wait_s after the previously accepted peak.
OnsetPeaks pick_peaks(const EnvelopeSeries& env, const PeakPickParams& params = {});

// onset_envelope + pick_peaks at 16 kHz (resampling linearly if needed).
OnsetPeaks detect_onsets(const Waveform& w, const OnsetConfig& config = {},
                         const PeakPickParams& params = {});

}  // namespace synclab::audio
