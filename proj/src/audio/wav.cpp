// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "synclab/audio/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "synclab/diffcore/sptn.hpp"
#include "synclab/error.hpp"

namespace synclab::audio {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t rd_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t rd_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

void wr(std::vector<std::uint8_t>& out, std::uint32_t v, int width) {
  for (int i = 0; i < width; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

double decode_sample(const std::uint8_t* p, int bits) {
  switch (bits) {
    case 8:
      return (static_cast<int>(p[0]) - 128) / 128.0;
    case 16: {
      const auto v = static_cast<std::int16_t>(p[0] | (p[1] << 8));
      return v / 32768.0;
    }
    case 24: {
      std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
      if (v & 0x800000) v -= 0x1000000;
      return v / 8388608.0;
    }
    default:
      throw FormatError("wav: chunk 'fmt ': unsupported bit depth " + std::to_string(bits));
  }
}

std::int32_t to_int(double s, int bits) {
  const double c = std::clamp(s, -1.0, 1.0);
  const double full = std::ldexp(1.0, bits - 1);
  const double v = std::round(c * full);
  return static_cast<std::int32_t>(std::clamp(v, -full, full - 1.0));
}

}  // namespace

Waveform decode_wav(std::span<const std::uint8_t> b) {
  if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0) {
    throw FormatError("wav: chunk 'RIFF': missing or truncated header");
  }
  if (std::memcmp(b.data() + 8, "WAVE", 4) != 0) throw FormatError("wav: chunk 'WAVE': bad form type");

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t at = 12;
  while (at + 8 <= b.size()) {
    const std::string id(reinterpret_cast<const char*>(b.data() + at), 4);
    const std::uint32_t size = rd_u32(b, at + 4);
    const std::size_t body = at + 8;
    if (id == "fmt ") {
      if (size < 16 || body + 16 > b.size()) throw FormatError("wav: chunk 'fmt ': truncated");
      std::uint16_t format = rd_u16(b, body);
      channels = rd_u16(b, body + 2);
      rate = rd_u32(b, body + 4);
      bits = rd_u16(b, body + 14);
      if (format == kFormatExtensible) {
        if (size < 40 || body + 40 > b.size()) throw FormatError("wav: chunk 'fmt ': truncated extensible header");
        format = rd_u16(b, body + 24);
      }
      if (format != kFormatPcm) {
        throw FormatError("wav: chunk 'fmt ': non-PCM format tag " + std::to_string(format));
      }
      if (channels == 0 || rate == 0) throw FormatError("wav: chunk 'fmt ': zero channels or rate");
      if (bits != 8 && bits != 16 && bits != 24) {
        throw FormatError("wav: chunk 'fmt ': unsupported bit depth " + std::to_string(bits));
      }
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw FormatError("wav: chunk 'data': appears before 'fmt '");
      if (body + size > b.size()) throw FormatError("wav: chunk 'data': truncated payload");
      const std::size_t stride = static_cast<std::size_t>(channels) * (bits / 8);
      const std::size_t frames = size / stride;
      Waveform w;
      w.rate_hz = static_cast<int>(rate);
      w.samples.resize(frames);
      for (std::size_t f = 0; f < frames; ++f) {
        double acc = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
          acc += decode_sample(b.data() + body + f * stride + c * (bits / 8), bits);
        }
        w.samples[f] = acc / channels;
      }
      return w;
    }
    at = body + size + (size & 1u);
  }
  throw FormatError(have_fmt ? "wav: chunk 'data': missing" : "wav: chunk 'fmt ': missing");
}

Waveform load_wav(const std::filesystem::path& path) { return decode_wav(sptn::read_bytes(path)); }

std::vector<std::uint8_t> encode_wav(std::span<const double> interleaved, int channels, int rate_hz,
                                     int bits) {
  if (bits != 8 && bits != 16 && bits != 24) {
    throw PreconditionError("encode_wav: unsupported bit depth " + std::to_string(bits));
  }
  if (channels <= 0 || rate_hz <= 0) throw PreconditionError("encode_wav: bad channels or rate");
  const std::uint32_t bytes_per = static_cast<std::uint32_t>(bits / 8);
  const auto data_size = static_cast<std::uint32_t>(interleaved.size() * bytes_per);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  wr(out, 36 + data_size, 4);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  wr(out, 16, 4);
  wr(out, kFormatPcm, 2);
  wr(out, static_cast<std::uint32_t>(channels), 2);
  wr(out, static_cast<std::uint32_t>(rate_hz), 4);
  wr(out, static_cast<std::uint32_t>(rate_hz) * channels * bytes_per, 4);
  wr(out, static_cast<std::uint32_t>(channels) * bytes_per, 2);
  wr(out, static_cast<std::uint32_t>(bits), 2);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  wr(out, data_size, 4);
  for (double s : interleaved) {
    const std::int32_t v = to_int(s, bits);
    if (bits == 8) {
      out.push_back(static_cast<std::uint8_t>(v + 128));
    } else {
      wr(out, static_cast<std::uint32_t>(v), static_cast<int>(bytes_per));
    }
  }
  if (data_size & 1u) out.push_back(0);
  return out;
}

std::vector<std::uint8_t> encode_wav(const Waveform& w, int bits) {
  return encode_wav(w.samples, 1, w.rate_hz, bits);
}

void save_wav(const std::filesystem::path& path, const Waveform& w, int bits) {
  sptn::write_bytes(path, encode_wav(w, bits));
}

Waveform quantize(const Waveform& w, int bits) {
  Waveform out{std::vector<double>(w.samples.size()), w.rate_hz};
  const double full = std::ldexp(1.0, bits - 1);
  for (std::size_t i = 0; i < w.samples.size(); ++i) out.samples[i] = to_int(w.samples[i], bits) / full;
  return out;
}

}  // namespace synclab::audio
