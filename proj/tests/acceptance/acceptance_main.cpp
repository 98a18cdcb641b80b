// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion, each with its wall time
// and budget. Criteria 6-8 run the real experiments with default settings
// (64 clips, 6-block model, 2000 steps, 5 seeds) in a fresh output directory.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "synclab/diffcore/gradcheck.hpp"
#include "synclab/diffcore/ops.hpp"
#include "synclab/harness/experiments.hpp"
#include "synclab/metrics/matching.hpp"
#include "synclab/metrics/report.hpp"
#include "synclab/model/audio_attention.hpp"
#include "synclab/model/loss.hpp"
#include "synclab/model/rope.hpp"
#include "synclab/sampler/guidance.hpp"
#include "synclab/sampler/sampler.hpp"

using namespace synclab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  // Failing only in a part listed with --known-failure.
  bool known = false;
};

Tensor randn(Rng& rng, Shape shape, double scale = 1.0) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = scale * rng.normal();
  return Tensor(std::move(shape), std::move(v));
}

bool same_bits(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2e", v);
  return buf;
}

Outcome c1_guidance() {
  Rng rng(1);
  double worst = 0.0;
  bool identity = true;
  for (int trial = 0; trial < 200; ++trial) {
    const Tensor f = randn(rng, {48, 8}), o = randn(rng, {48, 8}), n = randn(rng, {48, 8});
    const double wa = 4.0 * rng.uniform(), wt = 8.0 * rng.uniform();
    const Tensor g = sampler::guided_prediction(f, o, n, wa, wt);
    for (std::size_t i = 0; i < g.numel(); ++i) {
      const double ref = f.at(i) + wa * (f.at(i) - o.at(i)) + wt * (f.at(i) - n.at(i));
      worst = std::max(worst, std::abs(g.at(i) - ref));
    }
    identity = identity && same_bits(sampler::guided_prediction(f, o, n, 0.0, 0.0), f);
  }
  return {worst <= 1e-12 && identity,
          "max |err| " + sci(worst) + ", w=0 " + (identity ? "bit-identical" : "DIFFERS")};
}

Outcome c2_matching() {
  Rng rng(2);
  std::size_t agree = 0;
  const std::size_t trials = 1000;
  for (std::size_t t = 0; t < trials; ++t) {
    audio::OnsetPeaks a, b;
    for (auto* p : {&a, &b}) {
      const auto n = rng.uniform_int(0, 12);
      for (std::int64_t i = 0; i < n; ++i) p->times_s.push_back(0.01 * double(rng.uniform_int(0, 200)));
      std::sort(p->times_s.begin(), p->times_s.end());
    }
    const double delta = 0.01 * double(rng.uniform_int(0, 10));
    const auto m = metrics::match_peaks(a, b, delta);
    std::size_t ma = 0, mb = 0;
    for (double x : a.times_s) ma += std::any_of(b.times_s.begin(), b.times_s.end(), [&](double y) { return std::abs(x - y) <= delta; });
    for (double y : b.times_s) mb += std::any_of(a.times_s.begin(), a.times_s.end(), [&](double x) { return std::abs(x - y) <= delta; });
    agree += (m.matched_a == ma && m.matched_b == mb);
  }
  const auto hand = metrics::match_peaks({{0.10, 0.50, 0.90}}, {{0.11, 0.70}}, 0.05);
  const double f1 = metrics::cyclesync_score(hand, metrics::ScoreMode::kF1);
  return {agree == trials && f1 == 0.4,
          std::to_string(agree) + "/" + std::to_string(trials) + " agree with brute force, hand f1 " +
              metrics::fmt_fixed(f1, 2)};
}

model::ModelConfig tiny_model() {
  model::ModelConfig c;
  c.n_blocks = 2;
  c.d_model = 8;
  c.n_heads = 2;
  c.audio_blocks = {1};
  c.frames = 4;
  c.latent_channels = 4;
  c.audio_dim = 4;
  c.alpha = 2;
  c.class_vocab = 3;
  c.time_embed_dim = 4;
  return c;
}

Outcome c3_gradients() {
  const auto c = tiny_model();
  Rng rng(3);
  model::ParamMap p = model::init_params(c, rng);
  for (auto& [name, t] : p) t = randn(rng, t.shape(), 0.4);
  const std::size_t batch = 2;
  const Tensor x = randn(rng, {batch * c.frames, c.latent_channels});
  const Tensor gt = randn(rng, {batch * c.frames, c.latent_channels});
  const Tensor prev = randn(rng, {batch * c.frames, c.latent_channels});
  const std::vector<double> t{0.3, 0.7};
  model::Conditioning cond;
  cond.class_ids = {1, 2};
  cond.audio = randn(rng, {batch * c.audio_length(), c.audio_dim});

  const auto loss_with = [&](const std::string& key, const Tensor& value) {
    model::ParamMap q = p;
    q.at(key) = value;
    return model::motion_aware_loss(model::forward(c, q, x, t, cond), gt, prev);
  };
  double worst = finite_diff_check(
      [&](const Tensor& xx) { return model::motion_aware_loss(model::forward(c, p, xx, t, cond), gt, prev); }, x);
  std::string where = "input";
  double key_bias = 0.0;  // largest |analytic| or |fd| on the key-bias slices
  const std::size_t d = c.d_model;
  for (const auto& [name, value] : p) {
    const std::string key = name;
    double e = 0.0;
    if (key.ends_with("qkv.b")) {
      // Shifting every key by the same vector leaves each softmax unchanged,
      // so the key slice has an exactly zero gradient; a relative error is
      // meaningless there. Check it absolutely and the q/v slices relatively.
      const auto full = value.data();
      auto rebuild = [&, key](const Tensor& qv) {
        std::vector<double> b(full.begin(), full.end());
        for (std::size_t i = 0; i < d; ++i) {
          b[i] = qv.at(i);
          b[2 * d + i] = qv.at(d + i);
        }
        return Tensor({3 * d}, std::move(b));
      };
      std::vector<double> qv(2 * d);
      for (std::size_t i = 0; i < d; ++i) {
        qv[i] = full[i];
        qv[d + i] = full[2 * d + i];
      }
      e = finite_diff_check([&](const Tensor& leaf) { return loss_with(key, rebuild(leaf)); },
                            Tensor({2 * d}, qv));
      Tape tape;
      Tensor leaf = tape.watch(value);
      tape.backward(loss_with(key, leaf));
      const auto g = leaf.grad();
      std::vector<double> probe(full.begin(), full.end());
      for (std::size_t i = d; i < 2 * d; ++i) {
        const double orig = probe[i];
        probe[i] = orig + 1e-5;
        const double up = loss_with(key, Tensor({3 * d}, probe)).item();
        probe[i] = orig - 1e-5;
        const double down = loss_with(key, Tensor({3 * d}, probe)).item();
        probe[i] = orig;
        key_bias = std::max({key_bias, std::abs(g[i]), std::abs((up - down) / 2e-5)});
      }
    } else {
      e = finite_diff_check([&](const Tensor& leaf) { return loss_with(key, leaf); }, value);
    }
    if (e > worst) {
      worst = e;
      where = key;
    }
  }
  return {worst < 1e-4 && key_bias < 1e-9,
          "max relative error " + sci(worst) + " (" + where + ") over the input and " + std::to_string(p.size()) +
              " parameter tensors; key-bias gradients |g| <= " + sci(key_bias)};
}

Outcome c4_rope() {
  Rng rng(4);
  double norm_err = 0.0, shift_err = 0.0;
  const std::size_t d = 16, da = 8;
  const model::RotaryEmbedder rope({8, 0, 0}, 10000.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor x = randn(rng, {d});
    const Tensor y = model::rope_rotate(x, 100.0 * rng.uniform());
    double nx = 0.0, ny = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      nx += x.at(i) * x.at(i);
      ny += y.at(i) * y.at(i);
    }
    norm_err = std::max(norm_err, std::abs(std::sqrt(nx) - std::sqrt(ny)));

    const model::CrossAttentionWeights w{randn(rng, {d, d}), randn(rng, {da, d}), randn(rng, {da, d}), 2};
    const Tensor z = randn(rng, {d}), seg = randn(rng, {9, da});
    std::vector<double> pos(9), moved(9);
    const double s = 100.0 * rng.uniform() - 50.0, qp = 48.0 * rng.uniform();
    for (std::size_t i = 0; i < 9; ++i) {
      pos[i] = qp - 1.5 + 3.0 * double(i) / 8.0;
      moved[i] = pos[i] + s;
    }
    const Tensor a = model::audio_cross_attention(z, seg, pos, qp, w, &rope);
    const Tensor b = model::audio_cross_attention(z, seg, moved, qp + s, w, &rope);
    for (std::size_t i = 0; i < d; ++i) shift_err = std::max(shift_err, std::abs(a.at(i) - b.at(i)));
  }
  return {norm_err <= 1e-12 && shift_err <= 1e-9,
          "norm error " + sci(norm_err) + ", shift error " + sci(shift_err) + " over 100 draws"};
}

Outcome c5_offsync() {
  model::ModelConfig c;  // full-size default model
  Rng rng(5);
  model::ParamMap p = model::init_params(c, rng);
  for (auto& [name, t] : p) t = randn(rng, t.shape(), 0.05);  // live cross-attention heads
  const model::ToyModel m(c, p);

  const Tensor x = randn(rng, {2 * c.frames, c.latent_channels});
  const std::vector<double> t{0.2, 0.9};
  model::Conditioning off;
  off.class_ids = {1, 3};
  off.use_audio = false;
  off.audio = randn(rng, {2 * c.audio_length(), c.audio_dim});
  const Tensor base = m.forward(x, t, off);
  bool fwd_same = true;
  for (int k = 0; k < 3; ++k) {
    off.audio = randn(rng, {2 * c.audio_length(), c.audio_dim}, 1.0 + 3.0 * k);
    fwd_same = fwd_same && same_bits(base, m.forward(x, t, off));
  }
  off.audio.reset();
  fwd_same = fwd_same && same_bits(base, m.forward(x, t, off));

  sampler::SampleRequest req;
  req.init_latent = randn(rng, {c.latent_channels});
  req.audio = randn(rng, {c.audio_length(), c.audio_dim});
  req.guidance.steps = 10;
  const auto s0 = sampler::sample_offsync(m, req);
  bool samp_same = true;
  for (int k = 0; k < 3; ++k) {
    req.audio = randn(rng, {c.audio_length(), c.audio_dim}, 0.5 + k);
    samp_same = samp_same && same_bits(s0.latents.latents, sampler::sample_offsync(m, req).latents.latents);
  }
  return {fwd_same && samp_same, std::string("forward ") + (fwd_same ? "unchanged" : "CHANGED") +
                                     ", sample_offsync " + (samp_same ? "unchanged" : "CHANGED") +
                                     " under audio substitution"};
}

const harness::Check* find_check(const harness::ExperimentResult& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return &c;
  return nullptr;
}

Outcome from_checks(const harness::ExperimentResult& r, std::initializer_list<const char*> names) {
  Outcome o{true, ""};
  for (const char* n : names) {
    const auto* c = find_check(r, n);
    const bool ok = c && c->pass;
    o.pass = o.pass && ok;
    o.detail += (o.detail.empty() ? "" : "; ") + std::string(n) + " " + (ok ? "ok" : "FAIL") + (c ? " (" + c->detail + ")" : "");
  }
  return o;
}

std::map<std::string, std::string> csv_svg(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (ext != ".csv" && ext != ".svg") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), dir).string()] = ss.str();
  }
  return out;
}

// Runs the given experiments twice in fresh directories and compares every
// CSV and SVG byte for byte.
Outcome reproduce(harness::ExperimentConfig c, const fs::path& root, const std::vector<std::string>& names,
                  const std::string& label) {
  std::map<std::string, std::string> runs[2];
  for (int k = 0; k < 2; ++k) {
    c.out_dir = root / (label + "_" + std::to_string(k));
    fs::remove_all(c.out_dir);
    harness::Workspace ws(c);
    for (const auto& n : names) harness::run_experiment(n, ws);
    runs[k] = csv_svg(c.out_dir);
  }
  const bool same = !runs[0].empty() && runs[0] == runs[1];
  return {same, label + ": " + std::to_string(runs[0].size()) + " CSV/SVG files " + (same ? "identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synclab acceptance criteria"};
  std::string out = "acceptance_run";
  std::vector<int> only;
  std::vector<std::string> known_failures;
  app.add_option("--out", out, "scratch directory (wiped first)");
  app.add_option("--only", only, "run just these criteria");
  app.add_option("--known-failure", known_failures,
                 "sub-criteria (e.g. 7b) reported as FAIL without failing the run");
  CLI11_PARSE(app, argc, argv);

  const fs::path root = out;
  fs::remove_all(root);
  fs::create_directories(root);
  std::ofstream report(root / "acceptance.txt");

  auto wanted = [&](int n) { return only.empty() || std::find(only.begin(), only.end(), n) != only.end(); };
  bool all = true;
  auto line = [&](int n, const std::string& what, const Outcome& o, double secs, double budget) {
    const bool in_budget = secs < budget;
    const bool ok = o.pass && in_budget;
    all = all && (ok || (o.known && in_budget));
    char buf[96];
    std::snprintf(buf, sizeof(buf), " [%.1f s, budget %.0f s]", secs, budget);
    const std::string text = "criterion " + std::to_string(n) + ": " + (ok ? "PASS" : "FAIL") + "  " + what +
                             " - " + o.detail + buf + (o.pass && !ok ? " (over budget)" : "") +
                             (!ok && o.known && in_budget ? " (known failure, see README)" : "");
    std::printf("%s\n", text.c_str());
    std::fflush(stdout);
    report << text << "\n";
  };
  auto timed = [](const std::function<Outcome()>& fn, double& secs) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return o;
  };

  double secs = 0.0;
  if (wanted(1)) {
    const auto o = timed(c1_guidance, secs);
    line(1, "guidance algebra", o, secs, 1.0);
  }
  if (wanted(2)) {
    const auto o = timed(c2_matching, secs);
    line(2, "peak matching", o, secs, 5.0);
  }
  if (wanted(3)) {
    const auto o = timed(c3_gradients, secs);
    line(3, "gradient correctness", o, secs, 30.0);
  }
  if (wanted(4)) {
    const auto o = timed(c4_rope, secs);
    line(4, "RoPE properties", o, secs, 5.0);
  }
  if (wanted(5)) {
    const auto o = timed(c5_offsync, secs);
    line(5, "off-sync invariance", o, secs, 10.0);
  }

  harness::ExperimentConfig cfg;
  cfg.name = "acceptance";
  cfg.out_dir = root / "main";
  harness::Workspace ws(cfg);
  ws.set_log([](const std::string& m) { std::fprintf(stderr, "[acceptance] %s\n", m.c_str()); });

  if (wanted(6)) {
    const auto o = timed(
        [&] { return from_checks(harness::run_experiment("E1_delay_sweep", ws), {"cyclesync_drop_at_0.3s_ge_30pct", "cyclesync_drop_exceeds_av_align"}); },
        secs);
    line(6, "delay-sweep sensitivity", o, secs, 300.0);
  }

  harness::ExperimentResult e4;
  double e4_secs = 0.0;
  if (wanted(7)) {
    // E4's extra model (no RoPE) is trained here too; criterion 8 shares the budget.
    Outcome a, b, c_;
    const auto o = timed(
        [&] {
          c_ = from_checks(harness::run_experiment("E2_loss_ablation", ws), {"mae_lambda1_le_lambda0"});
          b = from_checks(harness::run_experiment("E3_asg_sweep", ws), {"asg_w2_ge_w0"});
          a = from_checks(harness::run_experiment("E5_offsync", ws), {"full_gt_offsync"});
          Outcome o{a.pass && b.pass && c_.pass, "(a) " + a.detail + "; (b) " + b.detail + "; (c) " + c_.detail};
          const auto listed = [&](const char* part) {
            return std::find(known_failures.begin(), known_failures.end(), part) != known_failures.end();
          };
          o.known = (a.pass || listed("7a")) && (b.pass || listed("7b")) && (c_.pass || listed("7c"));
          return o;
        },
        secs);
    timed([&] { e4 = harness::run_experiment("E4_rope_ablation", ws); return Outcome{true, ""}; }, e4_secs);
    line(7, "training efficacy over 5 seeds", o, secs + e4_secs, 3600.0);
  }
  if (wanted(8)) {
    if (e4.checks.empty()) {
      timed([&] { e4 = harness::run_experiment("E4_rope_ablation", ws); return Outcome{true, ""}; }, e4_secs);
    }
    line(8, "RoPE ablation over 5 seeds", from_checks(e4, {"rope_ge_no_rope"}), e4_secs, 3600.0);
  }
  ws.write_manifest();

  if (wanted(9)) {
    // E1 at full size twice, plus every model experiment on a reduced model
    // (training included) twice.
    harness::ExperimentConfig small;
    small.name = "repro";
    small.seeds = {0, 1};
    small.dataset.n_clips = 8;
    small.eval.n_clips = 3;
    small.model.n_blocks = 3;
    small.model.d_model = 16;
    small.model.audio_blocks = {1, 2};
    small.train.steps = 40;
    small.guidance.steps = 6;
    const auto o = timed(
        [&] {
          const Outcome e1 = reproduce(harness::ExperimentConfig{}, root, {"E1_delay_sweep"}, "e1");
          const Outcome rest = reproduce(small, root,
                                         {"E2_loss_ablation", "E3_asg_sweep", "E4_rope_ablation", "E5_offsync"},
                                         "models");
          return Outcome{e1.pass && rest.pass, e1.detail + "; " + rest.detail};
        },
        secs);
    line(9, "reproducibility", o, secs, 600.0);
  }

  std::printf("acceptance: %s\n", all ? "ALL PASS" : "FAILURES");
  report << "acceptance: " << (all ? "ALL PASS" : "FAILURES") << "\n";
  return all ? 0 : 1;
}
