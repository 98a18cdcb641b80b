// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "synclab/model/checkpoint.hpp"

#include <cmath>
#include <cstring>

#include "synclab/diffcore/sptn.hpp"
#include "synclab/error.hpp"

namespace synclab::model {

namespace {
constexpr char kMagic[4] = {'S', 'L', 'C', 'K'};
constexpr int kFormatVersion = 1;
}  // namespace

void Checkpoint::validate() const {
  for (const auto& [name, t] : params) {
    for (double v : t.data()) {
      if (!std::isfinite(v)) throw NumericError("checkpoint: parameter '" + name + "' is not finite");
    }
  }
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  nlohmann::ordered_json header;
  header["format"] = kFormatVersion;
  header["config"] = to_json(ckpt.config);
  header["step"] = ckpt.train_step;
  header["seed"] = ckpt.seed;
  header["train"] = ckpt.train_info;
  auto names = nlohmann::ordered_json::array();
  for (const auto& [name, t] : ckpt.params) names.push_back(name);
  header["params"] = names;
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  std::uint64_t len = text.size();
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(len >> (8 * i)));
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& [name, t] : ckpt.params) {
    const auto blob = sptn::encode(t);
    out.insert(out.end(), blob.begin(), blob.end());
  }
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("checkpoint: bad magic");
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(bytes[4 + i]) << (8 * i);
  if (len > bytes.size() - 12) throw FormatError("checkpoint: truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + static_cast<long>(len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: header: ") + e.what());
  }
  if (header.value("format", 0) != kFormatVersion) throw FormatError("checkpoint: unsupported format version");
  Checkpoint ckpt;
  ckpt.config = model_config_from_json(header.at("config"));
  ckpt.train_step = header.at("step").get<std::uint64_t>();
  ckpt.seed = header.at("seed").get<std::uint64_t>();
  ckpt.train_info = nlohmann::ordered_json::parse(header.at("train").dump());
  std::size_t offset = 12 + len;
  for (const auto& name : header.at("params")) {
    const std::string n = name.get<std::string>();
    if (!ckpt.params.emplace(n, sptn::decode(bytes, offset)).second) {
      throw FormatError("checkpoint: duplicate parameter '" + n + "'");
    }
  }
  if (offset != bytes.size()) throw FormatError("checkpoint: trailing bytes");
  ckpt.validate();
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  sptn::write_bytes(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(sptn::read_bytes(path)); }

}  // namespace synclab::model
