// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "synclab/harness/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include "synclab/audio/wav.hpp"
#include "synclab/harness/svg_plot.hpp"
#include "synclab/metrics/cyclesync.hpp"
#include "synclab/metrics/delay_sweep.hpp"
#include "synclab/metrics/report.hpp"
#include "synclab/parallel.hpp"
#include "synclab/sampler/sampler.hpp"
#include "synclab/synth/oracle_v2a.hpp"

namespace synclab::harness {

namespace fs = std::filesystem;
using metrics::fmt_fixed;
using metrics::write_text;
using nlohmann::ordered_json;

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"E1_delay_sweep", "E2_loss_ablation", "E3_asg_sweep",
                                              "E4_rope_ablation", "E5_offsync"};
  return names;
}

Variant variant_full() { return {"full", 1.0, true}; }
Variant variant_no_motion() { return {"no_motion_loss", 0.0, true}; }
Variant variant_no_rope() { return {"no_rope", 1.0, false}; }

double onset_mae(const std::vector<double>& peak_times, const synth::EventScript& script) {
  if (script.events.empty()) return 0.0;
  double total = 0.0;
  for (const auto& e : script.events) {
    double best = kMaeCapS;
    for (double t : peak_times) best = std::min(best, std::abs(t - e.time_s));
    total += best;
  }
  return total / static_cast<double>(script.events.size());
}

bool ExperimentResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::uint64_t sample_seed(const ExperimentConfig& c, std::size_t clip) {
  return c.seed * 1000 + 100 + clip;
}

sampler::SampleRequest make_request(const ExperimentConfig& c, const synth::Clip& clip, std::size_t index) {
  sampler::SampleRequest req;
  const auto z = clip.latents.latents.data();
  const std::size_t ch = clip.latents.channels();
  req.init_latent = Tensor({ch}, std::vector<double>(z.begin(), z.begin() + static_cast<long>(ch)));
  req.audio = clip.features.features;
  req.class_id = clip.script.clip_class;
  req.seed = sample_seed(c, index);
  req.guidance = c.guidance;
  req.frame_rate_hz = clip.latents.frame_rate_hz;
  return req;
}

model::ModelConfig variant_model(const ExperimentConfig& c, const Variant& v) {
  model::ModelConfig m = c.model;
  m.use_rope = v.use_rope;
  return m;
}

model::TrainParams variant_train(const ExperimentConfig& c, const Variant& v, std::uint64_t seed) {
  model::TrainParams p = c.train;
  p.lambda = v.lambda;
  p.seed = seed;
  return p;
}

metrics::CycleSyncParams cyclesync_params(const ExperimentConfig& c) {
  metrics::CycleSyncParams p;
  p.delta_s = c.metrics.delta_s;
  p.mode = c.metrics.mode;
  return p;
}

std::string mode_name(SampleMode m) { return m == SampleMode::kFull ? "full" : "offsync"; }

double mean_of(const std::vector<ClipEval>& rows, double ClipEval::*field) {
  double s = 0.0;
  for (const auto& r : rows) s += r.*field;
  return rows.empty() ? 0.0 : s / static_cast<double>(rows.size());
}

// Mean of per-seed means (each seed evaluates the same clips).
struct SeedAgg {
  double cyclesync = 0.0;
  double mae_s = 0.0;
  std::vector<double> per_seed_cyclesync;
  std::vector<double> per_seed_mae_s;
};

SeedAgg aggregate_seeds(Workspace& ws, const Variant& v, SampleMode mode, double w_audio) {
  SeedAgg a;
  for (std::uint64_t seed : ws.config().seeds) {
    const auto& rows = ws.evaluate(v, seed, mode, w_audio);
    a.per_seed_cyclesync.push_back(mean_of(rows, &ClipEval::cyclesync));
    a.per_seed_mae_s.push_back(mean_of(rows, &ClipEval::onset_mae_s));
  }
  for (double x : a.per_seed_cyclesync) a.cyclesync += x;
  for (double x : a.per_seed_mae_s) a.mae_s += x;
  a.cyclesync /= static_cast<double>(a.per_seed_cyclesync.size());
  a.mae_s /= static_cast<double>(a.per_seed_mae_s.size());
  return a;
}

// Per-clip rows shared by the model experiments.
struct EvalTable {
  std::string text = "group,seed,clip_id,cyclesync_x100,onset_mae_ms,n_peaks_ref,n_peaks_rec\n";

  void add(const std::string& group, std::uint64_t seed, const std::vector<ClipEval>& rows) {
    for (const auto& r : rows) {
      text += group + "," + std::to_string(seed) + "," + r.clip_id + "," + fmt_fixed(100.0 * r.cyclesync, 4) +
              "," + fmt_fixed(1000.0 * r.onset_mae_s, 4) + "," + std::to_string(r.n_peaks_ref) + "," +
              std::to_string(r.n_peaks_rec) + "\n";
    }
  }
};

struct GroupSummary {
  std::string group;
  SeedAgg agg;
};

std::string group_csv(const std::vector<GroupSummary>& groups) {
  std::string text = "group,seed,cyclesync_x100,onset_mae_ms\n";
  for (const auto& g : groups) {
    for (std::size_t i = 0; i < g.agg.per_seed_cyclesync.size(); ++i) {
      text += g.group + "," + std::to_string(i) + "," + fmt_fixed(100.0 * g.agg.per_seed_cyclesync[i], 4) + "," +
              fmt_fixed(1000.0 * g.agg.per_seed_mae_s[i], 4) + "\n";
    }
    text += g.group + ",mean," + fmt_fixed(100.0 * g.agg.cyclesync, 4) + "," + fmt_fixed(1000.0 * g.agg.mae_s, 4) +
            "\n";
  }
  return text;
}

ordered_json group_json(const std::vector<GroupSummary>& groups) {
  ordered_json j = ordered_json::object();
  for (const auto& g : groups) {
    const auto cs = metrics::aggregate_scores(g.agg.per_seed_cyclesync);
    const auto mae = metrics::aggregate_scores(g.agg.per_seed_mae_s);
    auto r6 = [](double v) { return std::round(v * 1e6) / 1e6; };
    j[g.group] = {{"cyclesync_x100", r6(100.0 * cs.mean)},
                  {"cyclesync_ci95_x100", r6(100.0 * cs.ci95)},
                  {"onset_mae_ms", r6(1000.0 * mae.mean)},
                  {"onset_mae_ci95_ms", r6(1000.0 * mae.ci95)},
                  {"n_seeds", cs.n}};
  }
  return j;
}

PlotSpec group_bar(const std::string& title, const std::string& y_label, const std::vector<GroupSummary>& groups,
                   bool mae) {
  PlotSpec p;
  p.title = title;
  p.x_label = "variant";
  p.y_label = y_label;
  p.kind = PlotKind::kBar;
  Series s;
  s.label = mae ? "onset MAE (ms)" : "CycleSync (x100)";
  for (std::size_t i = 0; i < groups.size(); ++i) {
    s.x.push_back(static_cast<double>(i));
    s.y.push_back(mae ? 1000.0 * groups[i].agg.mae_s : 100.0 * groups[i].agg.cyclesync);
    p.categories.push_back(groups[i].group);
  }
  p.series.push_back(s);
  return p;
}

std::string detail2(const std::string& a, double x, const std::string& b, double y, int digits = 3) {
  return a + " " + fmt_fixed(x, digits) + " vs " + b + " " + fmt_fixed(y, digits);
}

class Writer {
 public:
  Writer(Workspace& ws, std::string name) : ws_(ws), dir_(ws.dir() / name) {}

  fs::path text(const std::string& file, const std::string& content) {
    const fs::path p = dir_ / file;
    write_text(p, content);
    ws_.add_artifact(p);
    return p;
  }
  fs::path json(const std::string& file, const ordered_json& j) { return text(file, j.dump(2) + "\n"); }
  fs::path plot(const std::string& file, const PlotSpec& spec) {
    const fs::path p = dir_ / file;
    emit_plot(spec, p);
    ws_.add_artifact(p);
    return p;
  }

 private:
  Workspace& ws_;
  fs::path dir_;
};

void finish(Workspace& ws, ExperimentResult& r, const ordered_json& headline) {
  Writer w(ws, r.name);
  r.artifacts.push_back(w.json("headline.json", headline));
  r.artifacts.push_back(w.text("summary.md", summary_markdown(r, headline)));
}

// ---- E1 ----

ExperimentResult run_e1(Workspace& ws) {
  ExperimentResult r{"E1_delay_sweep", {}, {}};
  const auto& cfg = ws.config();
  Writer w(ws, r.name);
  metrics::SyncReport report;
  ws.stage("delay_sweep", [&] {
    metrics::DelaySweepParams p;
    p.delays_s = cfg.metrics.delays_s;
    p.cyclesync = cyclesync_params(cfg);
    p.av_align.fps = cfg.metrics.av_align_fps;
    report = metrics::delay_sweep(ws.train_clips(), ws.backend(), p);
  });
  r.artifacts.push_back(w.text("delay_sweep.csv", report.to_csv()));
  r.artifacts.push_back(w.json("aggregate.json", report.aggregate_json()));

  PlotSpec plot;
  plot.title = "Relative score vs audio-video delay";
  plot.x_label = "delay (s)";
  plot.y_label = "score relative to delay 0 (%)";
  std::string rel = "metric,delay_s,mean_x100,relative_pct\n";
  for (const char* m : {metrics::kMetricCycleSync, metrics::kMetricAvAlign}) {
    Series s;
    s.label = m;
    for (double d : cfg.metrics.delays_s) {
      const auto* a = report.find(m, d);
      if (!a) continue;
      s.x.push_back(d);
      s.y.push_back(100.0 + a->rel_change_pct);
      rel += std::string(m) + "," + fmt_fixed(d, 3) + "," + fmt_fixed(100.0 * a->mean, 4) + "," +
             fmt_fixed(100.0 + a->rel_change_pct, 4) + "\n";
    }
    plot.series.push_back(s);
  }
  r.artifacts.push_back(w.text("relative.csv", rel));
  r.artifacts.push_back(w.plot("delay_sweep.svg", plot));

  const auto* cs0 = report.find(metrics::kMetricCycleSync, 0.0);
  const auto* cs3 = report.find(metrics::kMetricCycleSync, 0.3);
  const auto* av3 = report.find(metrics::kMetricAvAlign, 0.3);
  ordered_json headline = report.aggregate_json();
  if (cs0 && cs3 && av3) {
    const double drop_cs = -cs3->rel_change_pct;
    const double drop_av = -av3->rel_change_pct;
    r.checks.push_back({"cyclesync_drop_at_0.3s_ge_30pct", drop_cs >= 30.0, "drop " + fmt_fixed(drop_cs, 2) + "%"});
    r.checks.push_back({"cyclesync_drop_exceeds_av_align", drop_cs > drop_av,
                        detail2("cyclesync drop %", drop_cs, "av_align drop %", drop_av, 2)});
    bool below = cs0->mean > 0.0;
    for (double d : cfg.metrics.delays_s) {
      const auto* a = report.find(metrics::kMetricCycleSync, d);
      if (d > 0.0 && a && !(a->mean < cs0->mean)) below = false;
    }
    r.checks.push_back({"cyclesync_every_delay_below_zero_delay", below,
                        "zero-delay mean " + fmt_fixed(100.0 * cs0->mean, 3)});
  } else {
    r.checks.push_back({"delay_grid_has_0_and_0.3s", false, "metrics.delays_s must contain 0 and 0.3"});
  }
  finish(ws, r, headline);
  return r;
}

// ---- E2 ----

ExperimentResult run_e2(Workspace& ws) {
  ExperimentResult r{"E2_loss_ablation", {}, {}};
  const auto& cfg = ws.config();
  Writer w(ws, r.name);
  const double wa = cfg.guidance.w_audio;
  const Variant full = variant_full(), plain = variant_no_motion();

  EvalTable table;
  bool loss_ok = true;
  std::string loss_detail;
  PlotSpec curves;
  curves.title = "Training loss (seed " + std::to_string(cfg.seeds.front()) + ", 50-step means)";
  curves.x_label = "step";
  curves.y_label = "loss";
  for (const Variant& v : {full, plain}) {
    for (std::uint64_t seed : cfg.seeds) {
      table.add(v.name, seed, ws.evaluate(v, seed, SampleMode::kFull, wa));
    }
  }
  // Loss windows from the CSVs written alongside the checkpoints.
  for (const Variant& v : {full, plain}) {
    for (std::uint64_t seed : cfg.seeds) {
      std::vector<model::LossRow> curve;
      {
        std::ifstream in(ws.loss_csv_path(v, seed));
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
          model::LossRow row;
          std::istringstream ss(line);
          char comma;
          ss >> row.step >> comma >> row.loss >> comma >> row.mse_term >> comma >> row.motion_term;
          curve.push_back(row);
        }
      }
      if (curve.empty()) continue;
      const auto [first, last] = model::loss_window_means(curve);
      if (!(last < 0.5 * first)) loss_ok = false;
      loss_detail += v.name + "/s" + std::to_string(seed) + " " + fmt_fixed(first, 4) + "->" + fmt_fixed(last, 4) + "; ";
      if (seed == cfg.seeds.front()) {
        Series s;
        s.label = v.name;
        const std::size_t win = 50;
        for (std::size_t i = 0; i + win <= curve.size(); i += win) {
          double m = 0.0;
          for (std::size_t k = i; k < i + win; ++k) m += curve[k].loss;
          s.x.push_back(static_cast<double>(curve[i + win - 1].step));
          s.y.push_back(m / static_cast<double>(win));
        }
        if (!s.x.empty()) curves.series.push_back(s);
      }
    }
  }

  std::vector<GroupSummary> groups{{"lambda1", aggregate_seeds(ws, full, SampleMode::kFull, wa)},
                                   {"lambda0", aggregate_seeds(ws, plain, SampleMode::kFull, wa)}};
  r.artifacts.push_back(w.text("clips.csv", table.text));
  r.artifacts.push_back(w.text("seeds.csv", group_csv(groups)));
  r.artifacts.push_back(w.plot("onset_mae.svg", group_bar("Onset timing MAE by loss", "MAE (ms)", groups, true)));
  r.artifacts.push_back(w.plot("cyclesync.svg", group_bar("CycleSync by loss", "CycleSync x100", groups, false)));
  if (!curves.series.empty()) r.artifacts.push_back(w.plot("loss_curves.svg", curves));

  r.checks.push_back({"mae_lambda1_le_lambda0", groups[0].agg.mae_s <= groups[1].agg.mae_s,
                      detail2("lambda1 ms", 1000.0 * groups[0].agg.mae_s, "lambda0 ms", 1000.0 * groups[1].agg.mae_s)});
  r.checks.push_back({"final_loss_below_half_initial", loss_ok, loss_detail});
  finish(ws, r, group_json(groups));
  return r;
}

// ---- E3 ----

ExperimentResult run_e3(Workspace& ws) {
  ExperimentResult r{"E3_asg_sweep", {}, {}};
  const auto& cfg = ws.config();
  Writer w(ws, r.name);
  const Variant full = variant_full();

  // w = 0 must reproduce sampling without the ASG term bit for bit.
  bool identity = true;
  ws.stage("asg_identity", [&] {
    const auto& ck = ws.checkpoint(full, cfg.seeds.front());
    const auto m = ck.model();
    const auto& clips = ws.eval_clips();
    const std::size_t n = std::min<std::size_t>(2, clips.size());
    for (std::size_t i = 0; i < n; ++i) {
      auto req = make_request(cfg, clips[i], i);
      req.guidance.w_audio = 0.0;
      const auto a = sampler::sample(m, req);
      req.always_eval_offsync = true;
      const auto b = sampler::sample(m, req);
      const auto da = a.latents.latents.data(), db = b.latents.latents.data();
      if (!std::equal(da.begin(), da.end(), db.begin(), db.end())) identity = false;
    }
  });

  EvalTable table;
  std::vector<GroupSummary> groups;
  for (double wa : cfg.asg_weights) {
    for (std::uint64_t seed : cfg.seeds) table.add("w" + fmt_fixed(wa, 2), seed, ws.evaluate(full, seed, SampleMode::kFull, wa));
    groups.push_back({"w" + fmt_fixed(wa, 2), aggregate_seeds(ws, full, SampleMode::kFull, wa)});
  }
  r.artifacts.push_back(w.text("clips.csv", table.text));
  r.artifacts.push_back(w.text("seeds.csv", group_csv(groups)));
  r.artifacts.push_back(w.plot("asg_sweep.svg", group_bar("CycleSync vs ASG weight", "CycleSync x100", groups, false)));

  r.checks.push_back({"w0_equals_no_asg_sampling", identity, identity ? "bit-identical" : "outputs differ"});
  const auto find = [&](double wa) -> const GroupSummary* {
    for (std::size_t i = 0; i < cfg.asg_weights.size(); ++i)
      if (cfg.asg_weights[i] == wa) return &groups[i];
    return nullptr;
  };
  const auto* g0 = find(0.0);
  const auto* g2 = find(2.0);
  if (g0 && g2) {
    r.checks.push_back({"asg_w2_ge_w0", g2->agg.cyclesync >= g0->agg.cyclesync,
                        detail2("w2", 100.0 * g2->agg.cyclesync, "w0", 100.0 * g0->agg.cyclesync)});
  } else {
    r.checks.push_back({"asg_w2_ge_w0", false, "asg_weights must contain 0 and 2"});
  }
  finish(ws, r, group_json(groups));
  return r;
}

// ---- E4 ----

ExperimentResult run_e4(Workspace& ws) {
  ExperimentResult r{"E4_rope_ablation", {}, {}};
  const auto& cfg = ws.config();
  Writer w(ws, r.name);
  const double wa = cfg.guidance.w_audio;
  EvalTable table;
  std::vector<GroupSummary> groups;
  for (const Variant& v : {variant_full(), variant_no_rope()}) {
    for (std::uint64_t seed : cfg.seeds) table.add(v.name, seed, ws.evaluate(v, seed, SampleMode::kFull, wa));
    groups.push_back({v.use_rope ? "rope" : "no_rope", aggregate_seeds(ws, v, SampleMode::kFull, wa)});
  }
  r.artifacts.push_back(w.text("clips.csv", table.text));
  r.artifacts.push_back(w.text("seeds.csv", group_csv(groups)));
  r.artifacts.push_back(w.plot("rope.svg", group_bar("CycleSync with and without Audio RoPE", "CycleSync x100", groups, false)));
  r.checks.push_back({"rope_ge_no_rope", groups[0].agg.cyclesync >= groups[1].agg.cyclesync,
                      detail2("rope", 100.0 * groups[0].agg.cyclesync, "no_rope", 100.0 * groups[1].agg.cyclesync)});
  finish(ws, r, group_json(groups));
  return r;
}

// ---- E5 ----

constexpr std::size_t kBlockProbeClips = 4;

synth::Clip probe_clip(const ExperimentConfig& cfg) {
  // Two events at fixed times on the eval stream's first clip class.
  synth::EventScript script;
  script.duration_s = cfg.dataset.duration_s;
  script.clip_class = 1;
  for (double t : {0.5, 1.25}) {
    synth::Event e;
    e.time_s = t;
    e.class_id = 1;
    script.events.push_back(e);
  }
  const Rng rng = Rng(cfg.dataset.seed + cfg.eval.seed_offset, 0x50524F4245ull);
  synth::Clip c;
  c.id = "probe";
  c.script = script;
  c.audio = audio::quantize(synth::gen_audio(script, rng.fork(1)));
  c.latents = synth::gen_latents(script, rng.fork(2));
  c.features = synth::gen_audio_features(c.audio);
  return c;
}

std::size_t peaks_near(const audio::OnsetPeaks& p, const synth::EventScript& s, double tol) {
  std::size_t hits = 0;
  for (const auto& e : s.events) {
    for (double t : p.times_s) {
      if (std::abs(t - e.time_s) <= tol) {
        ++hits;
        break;
      }
    }
  }
  return hits;
}

ExperimentResult run_e5(Workspace& ws) {
  ExperimentResult r{"E5_offsync", {}, {}};
  const auto& cfg = ws.config();
  Writer w(ws, r.name);
  const Variant full = variant_full();
  const double wa = cfg.guidance.w_audio;

  EvalTable table;
  for (std::uint64_t seed : cfg.seeds) {
    table.add("full", seed, ws.evaluate(full, seed, SampleMode::kFull, wa));
    table.add("offsync", seed, ws.evaluate(full, seed, SampleMode::kOffSync, wa));
  }
  std::vector<GroupSummary> groups{{"full", aggregate_seeds(ws, full, SampleMode::kFull, wa)},
                                   {"offsync", aggregate_seeds(ws, full, SampleMode::kOffSync, wa)}};
  r.artifacts.push_back(w.text("clips.csv", table.text));
  r.artifacts.push_back(w.text("seeds.csv", group_csv(groups)));
  r.artifacts.push_back(w.plot("offsync.svg", group_bar("Full vs off-sync sampling", "CycleSync x100", groups, false)));
  r.checks.push_back({"full_gt_offsync", groups[0].agg.cyclesync > groups[1].agg.cyclesync,
                      detail2("full", 100.0 * groups[0].agg.cyclesync, "offsync", 100.0 * groups[1].agg.cyclesync)});

  bool invariant = true;
  bool early_critical = false;
  std::string probe_detail;
  std::size_t hits_full = 0, hits_off = 0;
  ws.stage("offsync_probe", [&] {
    const auto m = ws.checkpoint(full, cfg.seeds.front()).model();
    const synth::Clip clip = probe_clip(cfg);
    auto req = make_request(cfg, clip, 0);
    req.guidance.w_audio = wa;

    // Audio substitution must not reach the off-sync sampler.
    const auto a = sampler::sample_offsync(m, req);
    auto other = req;
    Rng noise(cfg.seed, 0x5355425354ull);
    auto feats = other.audio.data();
    std::vector<double> swapped(feats.size());
    for (auto& x : swapped) x = noise.normal() * 3.0;
    other.audio = Tensor(req.audio.shape(), swapped);
    const auto b = sampler::sample_offsync(m, other);
    const auto da = a.latents.latents.data(), db = b.latents.latents.data();
    invariant = std::equal(da.begin(), da.end(), db.begin(), db.end());

    const auto s_full = sampler::sample(m, req);
    const synth::OracleV2AConfig oc;
    const double tol = 2.0 / clip.latents.frame_rate_hz;
    hits_full = peaks_near(synth::motion_peaks(s_full.latents, oc.picker), clip.script, tol);
    hits_off = peaks_near(synth::motion_peaks(a.latents, oc.picker), clip.script, tol);

    // Early blocks carry the input's appearance: skipping any audio block
    // should disturb the first generated frame less than skipping block 0.
    // Averaged over every seed and the first few eval clips.
    const auto& clips = ws.eval_clips();
    const std::size_t n_clips = std::min<std::size_t>(kBlockProbeClips, clips.size());
    std::vector<sampler::BlockProbeRow> rows;
    std::size_t n = 0;
    for (std::uint64_t seed : cfg.seeds) {
      const auto ms = ws.checkpoint(full, seed).model();
      std::vector<std::vector<sampler::BlockProbeRow>> per_clip(n_clips);
      parallel_for(n_clips, [&](std::size_t i) {
        auto rq = make_request(cfg, clips[i], i);
        rq.guidance.w_audio = wa;
        per_clip[i] = sampler::skip_block_sweep(ms, rq);
      });
      for (const auto& pc : per_clip) {
        if (rows.empty()) {
          rows = pc;
          for (auto& row : rows) row.divergence = row.first_frame_mse = 0.0;
        }
        for (std::size_t b = 0; b < pc.size(); ++b) {
          rows[b].divergence += pc[b].divergence;
          rows[b].first_frame_mse += pc[b].first_frame_mse;
        }
        ++n;
      }
    }
    for (auto& row : rows) {
      row.divergence /= static_cast<double>(n);
      row.first_frame_mse /= static_cast<double>(n);
    }
    early_critical = !rows.empty();
    for (const auto& row : rows) {
      if (row.audio_block && !(row.first_frame_mse < rows.front().first_frame_mse)) early_critical = false;
      probe_detail += "b" + std::to_string(row.block) + (row.audio_block ? "*" : "") + " " +
                      fmt_fixed(row.first_frame_mse, 6) + "; ";
    }
    probe_detail += "mean first-frame MSE over " + std::to_string(n) + " seed/clip pairs";
    r.artifacts.push_back(w.text("block_probe.csv", sampler::block_probe_csv(rows)));
    PlotSpec p;
    p.title = "Mean output divergence when a block is skipped";
    p.x_label = "block";
    p.y_label = "divergence (Frobenius)";
    p.kind = PlotKind::kBar;
    Series s;
    s.label = "divergence";
    for (const auto& row : rows) {
      s.x.push_back(static_cast<double>(row.block));
      s.y.push_back(row.divergence);
      p.categories.push_back("b" + std::to_string(row.block) + (row.audio_block ? "*" : ""));
    }
    p.series.push_back(s);
    r.artifacts.push_back(w.plot("block_probe.svg", p));
  });
  r.checks.push_back({"offsync_invariant_to_audio", invariant, invariant ? "bit-identical" : "outputs differ"});
  r.checks.push_back({"skip_audio_block_first_frame_lt_block0", early_critical, probe_detail});
  r.checks.push_back({"probe_events_hit_with_audio", hits_full == 2,
                      std::to_string(hits_full) + "/2 events within 2 frames (off-sync: " + std::to_string(hits_off) +
                          "/2)"});
  ordered_json headline = group_json(groups);
  headline["probe"] = {{"hits_full", hits_full}, {"hits_offsync", hits_off}};
  finish(ws, r, headline);
  return r;
}

}  // namespace

// ---- Workspace ----

Workspace::Workspace(ExperimentConfig config) : config_(std::move(config)), started_(utc_now()) {
  config_.validate();
  backend_ = metrics::make_backend(config_.backend);
}

Workspace::~Workspace() = default;

const std::vector<synth::Clip>& Workspace::train_clips() {
  if (train_clips_.empty()) {
    stage("synth", [&] {
      const fs::path data_dir = dir() / "dataset";
      const fs::path manifest = data_dir / synth::kManifestName;
      const fs::path stamp = data_dir / "params.json";
      nlohmann::json params = to_json(config_)["dataset"];
      bool fresh = false;
      if (fs::exists(manifest) && fs::exists(stamp)) {
        std::ifstream in(stamp);
        fresh = nlohmann::json::parse(in, nullptr, false) == params;
      }
      if (!fresh) {
        synth::gen_dataset(config_.dataset, data_dir);
        write_text(stamp, params.dump(2) + "\n");
      }
      train_clips_ = synth::Manifest::load(manifest).load_all();
    });
  }
  return train_clips_;
}

const std::vector<synth::Clip>& Workspace::eval_clips() {
  if (eval_clips_.empty()) {
    synth::DatasetParams p = config_.dataset;
    p.seed = config_.dataset.seed + config_.eval.seed_offset;
    p.n_clips = config_.eval.n_clips;
    eval_clips_.resize(p.n_clips);
    parallel_for(p.n_clips, [&](std::size_t i) { eval_clips_[i] = synth::make_clip(p, i); });
  }
  return eval_clips_;
}

std::string Workspace::checkpoint_key(const Variant& v, std::uint64_t seed) const {
  return v.name + "_seed" + std::to_string(seed);
}

fs::path Workspace::loss_csv_path(const Variant& v, std::uint64_t seed) const {
  return dir() / "checkpoints" / (checkpoint_key(v, seed) + "_loss.csv");
}

const model::Checkpoint& Workspace::checkpoint(const Variant& v, std::uint64_t seed) {
  const std::string key = checkpoint_key(v, seed);
  if (auto it = checkpoints_.find(key); it != checkpoints_.end()) return it->second;
  const model::ModelConfig mc = variant_model(config_, v);
  const model::TrainParams tp = variant_train(config_, v, seed);
  const fs::path path = dir() / "checkpoints" / (key + ".ck");
  if (fs::exists(path) && fs::exists(loss_csv_path(v, seed))) {
    model::Checkpoint ck = model::load_checkpoint(path);
    // Key order is not preserved through the checkpoint header.
    const bool same = nlohmann::json(model::to_json(ck.config)) == nlohmann::json(model::to_json(mc)) &&
                      nlohmann::json(ck.train_info) == nlohmann::json(model::to_json(tp));
    if (same) {
      log("reusing checkpoint " + path.string());
      return checkpoints_.emplace(key, std::move(ck)).first->second;
    }
  }
  const auto& clips = train_clips();
  model::TrainResult result;
  stage("train:" + key, [&] {
    log("training " + key + " (" + std::to_string(tp.steps) + " steps)");
    std::vector<model::TrainExample> data;
    data.reserve(clips.size());
    for (const auto& c : clips) data.push_back(model::make_example(c));
    result = model::train(mc, data, tp);
    write_text(loss_csv_path(v, seed), model::loss_csv(result.curve));
    model::save_checkpoint(path, result.checkpoint);
  });
  add_artifact(path);
  add_artifact(loss_csv_path(v, seed));
  return checkpoints_.emplace(key, std::move(result.checkpoint)).first->second;
}

const std::vector<ClipEval>& Workspace::evaluate(const Variant& v, std::uint64_t seed, SampleMode mode,
                                                 double w_audio) {
  const std::string key =
      checkpoint_key(v, seed) + "/" + mode_name(mode) + "/w" + fmt_fixed(w_audio, 6);
  if (auto it = evals_.find(key); it != evals_.end()) return it->second;
  const auto& ck = checkpoint(v, seed);
  const auto& clips = eval_clips();
  std::vector<ClipEval> rows(clips.size());
  stage("eval:" + key, [&] {
    const model::ToyModel m = ck.model();
    const auto csp = cyclesync_params(config_);
    const synth::OracleV2AConfig oc;
    parallel_for(clips.size(), [&](std::size_t i) {
      auto req = make_request(config_, clips[i], i);
      req.guidance.w_audio = w_audio;
      const auto out = mode == SampleMode::kFull ? sampler::sample(m, req) : sampler::sample_offsync(m, req);
      const auto cs = metrics::cyclesync_detail(clips[i].audio, out.latents, *backend_, csp);
      ClipEval& e = rows[i];
      e.clip_id = clips[i].id;
      e.cyclesync = cs.score;
      e.n_peaks_ref = cs.n_peaks_ref;
      e.n_peaks_rec = cs.n_peaks_rec;
      e.onset_mae_s = onset_mae(synth::motion_peaks(out.latents, oc.picker).times_s, clips[i].script);
    });
  });
  log("eval " + key + ": cyclesync " + fmt_fixed(mean_of(rows, &ClipEval::cyclesync), 4) + ", onset MAE " +
      fmt_fixed(1000.0 * mean_of(rows, &ClipEval::onset_mae_s), 2) + " ms");
  return evals_.emplace(key, std::move(rows)).first->second;
}

void Workspace::stage(const std::string& name, const std::function<void()>& fn) {
  const std::string begin = utc_now();
  try {
    fn();
  } catch (const StageError&) {
    stages_.push_back({{"stage", name}, {"status", "failed"}, {"started", begin}, {"ended", utc_now()}});
    write_manifest();
    throw;
  } catch (const std::exception& e) {
    stages_.push_back(
        {{"stage", name}, {"status", "failed"}, {"error", e.what()}, {"started", begin}, {"ended", utc_now()}});
    write_manifest();
    throw StageError(name, e.what());
  }
  stages_.push_back({{"stage", name}, {"status", "ok"}, {"started", begin}, {"ended", utc_now()}});
}

void Workspace::add_artifact(const fs::path& p) {
  const std::string s = p.lexically_relative(dir()).string();
  if (std::find(artifacts_.begin(), artifacts_.end(), s) == artifacts_.end()) artifacts_.push_back(s);
}

void Workspace::write_manifest() const {
  ordered_json j;
  j["config_hash"] = hex64(config_hash(config_));
  j["tool_version"] = kToolVersion;
  j["started"] = started_;
  j["ended"] = utc_now();
  j["config"] = to_json(config_);
  j["stages"] = stages_;
  j["artifacts"] = artifacts_;
  write_text(dir() / "run_manifest.json", j.dump(2) + "\n");
}

ExperimentResult run_experiment(const std::string& name, Workspace& ws) {
  ExperimentResult r;
  if (name == "E1_delay_sweep") {
    r = run_e1(ws);
  } else if (name == "E2_loss_ablation") {
    r = run_e2(ws);
  } else if (name == "E3_asg_sweep") {
    r = run_e3(ws);
  } else if (name == "E4_rope_ablation") {
    r = run_e4(ws);
  } else if (name == "E5_offsync") {
    r = run_e5(ws);
  } else {
    std::string valid;
    for (const auto& n : experiment_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw PreconditionError("unknown experiment '" + name + "'; valid names: " + valid);
  }
  ws.write_manifest();
  return r;
}

std::string summary_markdown(const ExperimentResult& r, const ordered_json& headline) {
  std::ostringstream out;
  out << "# " << r.name << "\n\n";
  out << "Result: " << (r.passed() ? "PASS" : "FAIL") << "\n\n";
  out << "| check | result | detail |\n|---|---|---|\n";
  for (const auto& c : r.checks) {
    out << "| " << c.name << " | " << (c.pass ? "pass" : "FAIL") << " | " << c.detail << " |\n";
  }
  out << "\n## Headline numbers\n\n```json\n" << headline.dump(2) << "\n```\n\n## Artifacts\n\n";
  for (const auto& a : r.artifacts) out << "- " << a.filename().string() << "\n";
  return out.str();
}

}  // namespace synclab::harness
