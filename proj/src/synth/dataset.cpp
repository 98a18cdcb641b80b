// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "synclab/synth/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "synclab/audio/wav.hpp"
#include "synclab/diffcore/sptn.hpp"
#include "synclab/error.hpp"
#include "synclab/parallel.hpp"

namespace synclab::synth {

namespace fs = std::filesystem;

namespace {

std::string clip_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "clip_%04zu", index);
  return buf;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

EventScript make_script(const DatasetParams& p, std::size_t index, const WorldConfig& world) {
  if (p.events_min < 0 || p.events_max < p.events_min) {
    throw PreconditionError("dataset: bad events-per-clip range");
  }
  Rng rng = Rng(p.seed).fork(index).fork(0);
  EventScript s;
  s.duration_s = p.duration_s;
  s.clip_class = static_cast<int>(rng.uniform_int(1, world.n_classes));
  const auto n_events = static_cast<std::size_t>(rng.uniform_int(p.events_min, p.events_max));
  const double lo = p.edge_margin_s, hi = p.duration_s - p.edge_margin_s;
  if (hi <= lo) throw PreconditionError("dataset: clip too short for its edge margin");

  // Rejection-sample well separated times; fall back to fewer events if the
  // clip cannot hold them all.
  std::vector<double> times;
  for (int attempt = 0; attempt < 200 && times.size() < n_events; ++attempt) {
    const double t = rng.uniform(lo, hi);
    bool ok = true;
    for (double u : times) ok = ok && std::abs(u - t) >= p.min_gap_s;
    if (ok) times.push_back(t);
  }
  std::sort(times.begin(), times.end());
  for (double t : times) {
    Event e;
    e.time_s = t;
    e.class_id = s.clip_class;
    e.motion_lead_s = rng.uniform(p.lead_min_s, p.lead_max_s);
    e.motion_lag_s = rng.uniform(p.lag_min_s, p.lag_max_s);
    e.amplitude = rng.uniform(p.amplitude_min, p.amplitude_max);
    s.events.push_back(e);
  }
  s.validate();
  return s;
}

Clip make_clip(const DatasetParams& p, std::size_t index, const WorldConfig& world) {
  Clip clip;
  clip.id = clip_id(index);
  clip.script = make_script(p, index, world);
  const Rng clip_rng = Rng(p.seed).fork(index);
  clip.audio = audio::quantize(gen_audio(clip.script, clip_rng.fork(1), world));
  clip.latents = gen_latents(clip.script, clip_rng.fork(2), world);
  clip.features = gen_audio_features(clip.audio, world);
  return clip;
}

Manifest gen_dataset(const DatasetParams& p, const fs::path& out_dir, const WorldConfig& world) {
  if (p.n_clips == 0) throw PreconditionError("gen_dataset: n_clips must be > 0");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw IoError("gen_dataset: cannot create output directory " + out_dir.string());
  }

  Manifest manifest;
  manifest.root = out_dir;
  manifest.rows.resize(p.n_clips);
  parallel_for(p.n_clips, [&](std::size_t i) {
    const Clip clip = make_clip(p, i, world);
    ManifestRow row{clip.id, clip.id + ".wav", clip.id + ".latents.sptn", clip.id + ".features.sptn",
                    clip.id + ".script.json"};
    audio::save_wav(out_dir / row.wav, clip.audio);
    sptn::write_file(out_dir / row.latents, clip.latents.latents);
    sptn::write_file(out_dir / row.features, clip.features.features);
    write_text(out_dir / row.script, clip.script.to_json() + "\n");
    manifest.rows[i] = std::move(row);
  });

  std::ostringstream lines;
  for (const ManifestRow& r : manifest.rows) {
    const nlohmann::ordered_json j{
        {"id", r.id}, {"wav", r.wav}, {"latents", r.latents}, {"features", r.features}, {"script", r.script}};
    lines << j.dump() << '\n';
  }
  write_text(out_dir / kManifestName, lines.str());
  return manifest;
}

Manifest Manifest::load(const fs::path& manifest_path) {
  fs::path path = manifest_path;
  if (fs::is_directory(path)) path /= kManifestName;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  Manifest m;
  m.root = path.parent_path();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      m.rows.push_back({j.at("id").get<std::string>(), j.at("wav").get<std::string>(),
                        j.at("latents").get<std::string>(), j.at("features").get<std::string>(),
                        j.at("script").get<std::string>()});
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError("manifest line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  if (m.rows.empty()) throw FormatError("manifest " + path.string() + " has no clips");
  return m;
}

Clip Manifest::load_clip(std::size_t index) const {
  const ManifestRow& r = rows.at(index);
  Clip clip;
  clip.id = r.id;
  clip.script = EventScript::from_json(read_text(root / r.script));
  clip.audio = audio::load_wav(root / r.wav);
  clip.latents = {sptn::read_file(root / r.latents), 24.0};
  clip.features = {sptn::read_file(root / r.features), 96.0};
  return clip;
}

std::vector<Clip> Manifest::load_all() const {
  std::vector<Clip> clips(rows.size());
  parallel_for(rows.size(), [&](std::size_t i) { clips[i] = load_clip(i); });
  return clips;
}

}  // namespace synclab::synth
