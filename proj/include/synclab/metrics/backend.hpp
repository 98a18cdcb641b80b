// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>

#include "synclab/audio/waveform.hpp"
#include "synclab/synth/oracle_v2a.hpp"
#include "synclab/synth/world.hpp"

namespace synclab::metrics {

// Video-to-audio reconstruction. Implementations must be deterministic per
// input and safe to call concurrently.
class V2ABackend {
 public:
  virtual ~V2ABackend() = default;
  virtual audio::Waveform reconstruct(const synth::LatentSequence& video) const = 0;
  virtual std::string name() const = 0;
};

class OracleBackend final : public V2ABackend {
 public:
  explicit OracleBackend(synth::OracleV2AConfig config = {}) : config_(config) {}
  audio::Waveform reconstruct(const synth::LatentSequence& video) const override;
  std::string name() const override { return "oracle"; }

 private:
  synth::OracleV2AConfig config_;
};

// Runs `/bin/sh -c command` with the latents as an SPTN blob on stdin and
// reads a WAV file from stdout. Non-zero exit or undecodable output throws.
class ExternalBackend final : public V2ABackend {
 public:
  explicit ExternalBackend(std::string command) : command_(std::move(command)) {}
  audio::Waveform reconstruct(const synth::LatentSequence& video) const override;
  std::string name() const override { return "external:" + command_; }

 private:
  std::string command_;
};

// "oracle" or "external:<command>".
std::unique_ptr<V2ABackend> make_backend(const std::string& spec);

}  // namespace synclab::metrics
