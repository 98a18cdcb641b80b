// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "synclab/audio/waveform.hpp"

namespace synclab::audio {

// RIFF/WAVE PCM decoder (8/16/24-bit, any channel count, any rate). Channels
// are averaged to mono; the file's rate is kept. Non-PCM or malformed input
// throws FormatError naming the offending chunk.
Waveform decode_wav(std::span<const std::uint8_t> bytes);
Waveform load_wav(const std::filesystem::path& path);

// Interleaved PCM encoder. Samples are clamped to [-1, 1] and rounded.
std::vector<std::uint8_t> encode_wav(std::span<const double> interleaved, int channels,
                                     int rate_hz, int bits_per_sample = 16);
std::vector<std::uint8_t> encode_wav(const Waveform& w, int bits_per_sample = 16);
void save_wav(const std::filesystem::path& path, const Waveform& w, int bits_per_sample = 16);

// Round-trips samples through the integer PCM grid without touching disk.
Waveform quantize(const Waveform& w, int bits_per_sample = 16);

}  // namespace synclab::audio
