// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "synclab/diffcore/sptn.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "synclab/error.hpp"

namespace synclab::sptn {

namespace {

template <class T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  std::uint64_t bits = 0;
  if constexpr (std::is_same_v<T, double>) {
    bits = std::bit_cast<std::uint64_t>(value);
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

std::uint64_t get_le(std::span<const std::uint8_t> bytes, std::size_t& offset, std::size_t width) {
  if (offset + width > bytes.size()) throw FormatError("sptn: truncated blob");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes[offset + i]) << (8 * i);
  offset += width;
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode(const Tensor& t) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + 8 * t.rank() + 8 * t.numel());
  for (char c : {'S', 'P', 'T', 'N'}) out.push_back(static_cast<std::uint8_t>(c));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) put_le<std::uint64_t>(out, d);
  for (double v : t.data()) put_le<double>(out, v);
  return out;
}

Tensor decode(std::span<const std::uint8_t> bytes, std::size_t& offset) {
  if (offset + 4 > bytes.size() || std::memcmp(bytes.data() + offset, "SPTN", 4) != 0) {
    throw FormatError("sptn: bad magic");
  }
  offset += 4;
  const auto rank = static_cast<std::uint32_t>(get_le(bytes, offset, 4));
  if (rank == 0 || rank > 8) throw FormatError("sptn: unsupported rank " + std::to_string(rank));
  Shape shape(rank);
  for (auto& d : shape) d = get_le(bytes, offset, 8);
  const std::size_t n = shape_numel(shape);
  if (n == 0 || offset + 8 * n > bytes.size()) throw FormatError("sptn: payload size mismatch");
  std::vector<double> data(n);
  for (auto& v : data) v = std::bit_cast<double>(get_le(bytes, offset, 8));
  return Tensor(std::move(shape), std::move(data));
}

Tensor decode(std::span<const std::uint8_t> bytes) {
  std::size_t offset = 0;
  return decode(bytes, offset);
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

void write_file(const std::filesystem::path& path, const Tensor& t) { write_bytes(path, encode(t)); }

Tensor read_file(const std::filesystem::path& path) { return decode(read_bytes(path)); }

}  // namespace synclab::sptn
