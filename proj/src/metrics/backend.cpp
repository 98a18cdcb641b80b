// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "synclab/metrics/backend.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <vector>

#include "synclab/audio/wav.hpp"
#include "synclab/diffcore/sptn.hpp"
#include "synclab/error.hpp"

namespace synclab::metrics {

audio::Waveform OracleBackend::reconstruct(const synth::LatentSequence& video) const {
  return synth::oracle_v2a(video, config_);
}

namespace {

// Removes the temporary input file on scope exit.
struct TempFile {
  std::string path;
  TempFile() {
    const auto dir = std::filesystem::temp_directory_path() / "synclab_v2a_XXXXXX";
    std::string templ = dir.string();
    const int fd = mkstemp(templ.data());
    if (fd < 0) throw IoError("external backend: cannot create temp file");
    close(fd);
    path = templ;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

}  // namespace

audio::Waveform ExternalBackend::reconstruct(const synth::LatentSequence& video) const {
  TempFile input;
  sptn::write_file(input.path, video.latents);
  const std::string cmd = "(" + command_ + ") < " + shell_quote(input.path);
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) throw IoError("external backend: cannot start '" + command_ + "'");
  std::vector<std::uint8_t> out;
  std::uint8_t buf[1 << 14];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof(buf), pipe)) > 0) out.insert(out.end(), buf, buf + got);
  const int status = pclose(pipe);
  if (status != 0) {
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    throw Error("external backend '" + command_ + "' failed with status " + std::to_string(code));
  }
  return audio::decode_wav(out);
}

std::unique_ptr<V2ABackend> make_backend(const std::string& spec) {
  if (spec == "oracle") return std::make_unique<OracleBackend>();
  const std::string prefix = "external:";
  if (spec.rfind(prefix, 0) == 0 && spec.size() > prefix.size()) {
    return std::make_unique<ExternalBackend>(spec.substr(prefix.size()));
  }
  throw PreconditionError("unknown backend '" + spec + "' (expected oracle or external:<command>)");
}

}  // namespace synclab::metrics
