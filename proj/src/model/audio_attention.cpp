// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "synclab/model/audio_attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "synclab/error.hpp"
#include "synclab/simd/kernels.hpp"

namespace synclab::model {

AudioSegment audio_segment(std::size_t l, std::size_t alpha, std::size_t delta, std::size_t l_audio) {
  if (alpha == 0) throw PreconditionError("audio_segment: alpha must be positive");
  if (l_audio == 0) throw PreconditionError("audio_segment: empty audio sequence");
  const auto a = static_cast<long>(alpha), d = static_cast<long>(delta), ll = static_cast<long>(l);
  long lo = a * (ll - d), hi = a * (ll + d);
  if (delta == 0) {
    lo = a * ll - a / 2;
    hi = a * ll + a / 2;
  }
  const long last = static_cast<long>(l_audio) - 1;
  const long begin = std::max(lo, 0L), end = std::min(hi, last);
  if (begin > end) {
    throw PreconditionError("audio_segment: frame " + std::to_string(l) + " has no audio features (L_audio=" +
                            std::to_string(l_audio) + ")");
  }
  AudioSegment seg;
  seg.begin = static_cast<std::size_t>(begin);
  seg.end = static_cast<std::size_t>(end);
  const double half = static_cast<double>(delta) + 0.5;
  const double step = hi > lo ? (2.0 * half) / static_cast<double>(hi - lo) : 0.0;
  for (long i = begin; i <= end; ++i) {
    seg.positions.push_back(hi > lo ? static_cast<double>(ll) - half + static_cast<double>(i - lo) * step
                                    : static_cast<double>(ll));
  }
  return seg;
}

Tensor audio_cross_attention(const Tensor& z, const Tensor& segment, std::span<const double> k_pos, double q_pos,
                             const CrossAttentionWeights& w, const RotaryEmbedder* rope) {
  const std::size_t d = w.wq.dim(1);
  const std::size_t da = w.wk.dim(0);
  if (z.rank() != 1 || z.dim(0) != w.wq.dim(0)) {
    throw DimensionError("audio_cross_attention: shape mismatch " + shape_str(z.shape()) + " vs " +
                         shape_str(w.wq.shape()));
  }
  if (segment.rank() != 2 || segment.dim(1) != da || segment.dim(0) == 0 || k_pos.size() != segment.dim(0)) {
    throw DimensionError("audio_cross_attention: segment " + shape_str(segment.shape()) + " does not match keys " +
                         shape_str(w.wk.shape()) + " / " + std::to_string(k_pos.size()) + " positions");
  }
  if (w.n_heads == 0 || d % w.n_heads != 0) throw DimensionError("audio_cross_attention: bad head count");
  const std::size_t n = segment.dim(0), dh = d / w.n_heads;
  if (rope != nullptr && rope->dim() != dh) throw DimensionError("audio_cross_attention: rope dim != head dim");

  auto project = [](std::span<const double> x, const Tensor& m, std::size_t rows_in) {
    const std::size_t out = m.dim(1);
    std::vector<double> y(out, 0.0);
    for (std::size_t r = 0; r < rows_in; ++r) {
      for (std::size_t c = 0; c < out; ++c) y[c] += x[r] * m.at(r, c);
    }
    return y;
  };
  std::vector<double> q = project(z.data(), w.wq, z.dim(0));
  std::vector<std::vector<double>> k(n), v(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = segment.data().subspan(i * da, da);
    k[i] = project(row, w.wk, da);
    v[i] = project(row, w.wv, da);
  }
  std::vector<double> out(d, 0.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (std::size_t h = 0; h < w.n_heads; ++h) {
    std::vector<double> qh(q.begin() + h * dh, q.begin() + (h + 1) * dh);
    if (rope != nullptr) rope->rotate(qh.data(), {q_pos, 0.0, 0.0});
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> kh(k[i].begin() + h * dh, k[i].begin() + (h + 1) * dh);
      if (rope != nullptr) rope->rotate(kh.data(), {k_pos[i], 0.0, 0.0});
      double acc = 0.0;
      for (std::size_t j = 0; j < dh; ++j) acc += qh[j] * kh[j];
      s[i] = acc * scale;
    }
    const double mx = *std::max_element(s.begin(), s.end());
    double total = 0.0;
    for (double& x : s) total += (x = std::exp(x - mx));
    for (std::size_t i = 0; i < n; ++i) {
      const double p = s[i] / total;
      for (std::size_t j = 0; j < dh; ++j) out[h * dh + j] += p * v[i][h * dh + j];
    }
  }
  return Tensor({d}, std::move(out));
}

namespace {

// cos/sin of every (pair, position) rotation the op needs, in the same
// arithmetic as rope_rotate_inplace so results match the reference bitwise.
struct RotationTable {
  std::size_t pairs = 0;
  std::vector<double> cs;  // [position][pair][cos, sin]

  void add(double pos, std::size_t dh, double base) {
    for (std::size_t k = 0; k < pairs; ++k) {
      const double theta = pos * std::pow(base, -2.0 * static_cast<double>(k) / static_cast<double>(dh));
      cs.push_back(pos == 0.0 ? 1.0 : std::cos(theta));
      cs.push_back(pos == 0.0 ? 0.0 : std::sin(theta));
    }
  }
  // sign = -1 applies the inverse rotation.
  void apply(double* x, std::size_t idx, double sign) const {
    const double* t = cs.data() + idx * 2 * pairs;
    for (std::size_t k = 0; k < pairs; ++k) {
      const double c = t[2 * k], s = sign * t[2 * k + 1];
      const double x0 = x[2 * k], x1 = x[2 * k + 1];
      x[2 * k] = x0 * c - x1 * s;
      x[2 * k + 1] = x0 * s + x1 * c;
    }
  }
};

struct Geometry {
  std::vector<AudioSegment> segs;
  std::vector<std::size_t> key_rot;  // first rotation index of frame l's keys
  std::size_t max_seg = 0;
  RotationTable rot;
};

Geometry make_geometry(const CrossAttentionLayout& lay, std::size_t dh) {
  Geometry g;
  g.rot.pairs = dh / 2;
  for (std::size_t l = 0; l < lay.frames; ++l) g.rot.add(static_cast<double>(l), dh, lay.rope_base);
  std::size_t next = lay.frames;
  for (std::size_t l = 0; l < lay.frames; ++l) {
    g.segs.push_back(audio_segment(l, lay.alpha, lay.delta, lay.l_audio));
    g.key_rot.push_back(next);
    for (double p : g.segs.back().positions) g.rot.add(p, dh, lay.rope_base);
    next += g.segs.back().size();
    g.max_seg = std::max(g.max_seg, g.segs.back().size());
  }
  return g;
}

}  // namespace

Tensor audio_cross_attention_op(const Tensor& q, const Tensor& kv, const CrossAttentionLayout& lay,
                                const std::vector<bool>& mask) {
  const std::size_t d = q.cols();
  if (q.rank() != 2 || q.dim(0) != lay.batch * lay.tokens || kv.rank() != 2 ||
      kv.dim(0) != lay.batch * lay.l_audio || kv.dim(1) != 2 * d) {
    throw DimensionError("audio_cross_attention_op: shape mismatch " + shape_str(q.shape()) + " vs " +
                         shape_str(kv.shape()));
  }
  if (lay.first_frame + lay.frames > lay.tokens) throw DimensionError("audio_cross_attention_op: frames exceed tokens");
  if (!mask.empty() && mask.size() != lay.batch) throw DimensionError("audio_cross_attention_op: mask size");
  if (lay.n_heads == 0 || d % (2 * lay.n_heads) != 0) throw DimensionError("audio_cross_attention_op: bad head count");
  const std::size_t dh = d / lay.n_heads, H = lay.n_heads;
  auto geo = std::make_shared<Geometry>(make_geometry(lay, dh));
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto& kern = simd::kernels();

  std::vector<double> out(q.numel(), 0.0);
  auto probs = std::make_shared<std::vector<double>>(lay.batch * lay.frames * H * geo->max_seg, 0.0);
  const double* qd = q.data().data();
  const double* kvd = kv.data().data();
  std::vector<double> qr(dh), kr(dh), s(geo->max_seg);

  for (std::size_t b = 0; b < lay.batch; ++b) {
    if (!mask.empty() && !mask[b]) continue;
    for (std::size_t l = 0; l < lay.frames; ++l) {
      const AudioSegment& seg = geo->segs[l];
      const std::size_t n = seg.size();
      const std::size_t row = b * lay.tokens + lay.first_frame + l;
      for (std::size_t h = 0; h < H; ++h) {
        std::copy_n(qd + row * d + h * dh, dh, qr.data());
        if (lay.use_rope) geo->rot.apply(qr.data(), l, 1.0);
        double mx = -INFINITY;
        for (std::size_t i = 0; i < n; ++i) {
          const double* k = kvd + (b * lay.l_audio + seg.begin + i) * 2 * d + h * dh;
          std::copy_n(k, dh, kr.data());
          if (lay.use_rope) geo->rot.apply(kr.data(), geo->key_rot[l] + i, 1.0);
          s[i] = kern.dot(qr.data(), kr.data(), dh) * scale;
          mx = std::max(mx, s[i]);
        }
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += (s[i] = std::exp(s[i] - mx));
        double* p = probs->data() + ((b * lay.frames + l) * H + h) * geo->max_seg;
        double* o = out.data() + row * d + h * dh;
        for (std::size_t i = 0; i < n; ++i) {
          p[i] = s[i] / total;
          kern.axpy(p[i], kvd + (b * lay.l_audio + seg.begin + i) * 2 * d + d + h * dh, o, dh);
        }
      }
    }
  }

  Tensor result(q.shape(), std::move(out));
  if (Tape* tape = recording_tape({&q, &kv}, "audio_cross_attention_op")) {
    tape->record(result, [nq = q.node(), nkv = kv.node(), lay, mask, geo, probs, d, dh, H,
                          scale](std::span<const double> g) {
      const auto& kern = simd::kernels();
      std::vector<double> dq(nq->data.size(), 0.0), dkv(nkv->data.size(), 0.0);
      std::vector<double> qr(dh), kr(dh), dqr(dh), dkr(dh), dp(geo->max_seg);
      const double* qd = nq->data.data();
      const double* kvd = nkv->data.data();
      for (std::size_t b = 0; b < lay.batch; ++b) {
        if (!mask.empty() && !mask[b]) continue;
        for (std::size_t l = 0; l < lay.frames; ++l) {
          const AudioSegment& seg = geo->segs[l];
          const std::size_t n = seg.size();
          const std::size_t row = b * lay.tokens + lay.first_frame + l;
          for (std::size_t h = 0; h < H; ++h) {
            const double* go = g.data() + row * d + h * dh;
            const double* p = probs->data() + ((b * lay.frames + l) * H + h) * geo->max_seg;
            double pdp = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
              const std::size_t arow = (b * lay.l_audio + seg.begin + i) * 2 * d;
              dp[i] = kern.dot(go, kvd + arow + d + h * dh, dh);
              pdp += p[i] * dp[i];
              kern.axpy(p[i], go, dkv.data() + arow + d + h * dh, dh);
            }
            std::copy_n(qd + row * d + h * dh, dh, qr.data());
            if (lay.use_rope) geo->rot.apply(qr.data(), l, 1.0);
            std::fill(dqr.begin(), dqr.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
              const double ds = p[i] * (dp[i] - pdp) * scale;
              const std::size_t arow = (b * lay.l_audio + seg.begin + i) * 2 * d;
              std::copy_n(kvd + arow + h * dh, dh, kr.data());
              if (lay.use_rope) geo->rot.apply(kr.data(), geo->key_rot[l] + i, 1.0);
              kern.axpy(ds, kr.data(), dqr.data(), dh);
              for (std::size_t j = 0; j < dh; ++j) dkr[j] = ds * qr[j];
              if (lay.use_rope) geo->rot.apply(dkr.data(), geo->key_rot[l] + i, -1.0);
              kern.axpy(1.0, dkr.data(), dkv.data() + arow + h * dh, dh);
            }
            if (lay.use_rope) geo->rot.apply(dqr.data(), l, -1.0);
            kern.axpy(1.0, dqr.data(), dq.data() + row * d + h * dh, dh);
          }
        }
      }
      if (nq->tape != nullptr) nq->accumulate_grad(dq);
      if (nkv->tape != nullptr) nkv->accumulate_grad(dkv);
    });
  }
  return result;
}

}  // namespace synclab::model
