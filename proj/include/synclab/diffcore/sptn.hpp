// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "synclab/diffcore/tensor.hpp"

// Flat little-endian tensor blob: "SPTN", u32 rank, rank x u64 dims, f64 payload.
namespace synclab::sptn {

std::vector<std::uint8_t> encode(const Tensor& t);
// Decodes one blob starting at `offset`; advances offset past it.
Tensor decode(std::span<const std::uint8_t> bytes, std::size_t& offset);
Tensor decode(std::span<const std::uint8_t> bytes);

void write_file(const std::filesystem::path& path, const Tensor& t);
Tensor read_file(const std::filesystem::path& path);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace synclab::sptn
