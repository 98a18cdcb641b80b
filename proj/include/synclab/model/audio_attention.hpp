// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "synclab/diffcore/tensor.hpp"
#include "synclab/model/rope.hpp"

namespace synclab::model {

// Audio features attended by frame l: indices [alpha(l - delta), alpha(l + delta)]
// clipped to [0, L_audio - 1], each with a fractional frame position. The
// positions of the unclipped window run linearly over
// [l - delta - 0.5, l + delta + 0.5], centred on l. delta = 0 uses the
// alpha + 1 features spanning [alpha l - alpha/2, alpha l + alpha/2].
struct AudioSegment {
  std::size_t begin = 0;  // inclusive
  std::size_t end = 0;    // inclusive
  std::vector<double> positions;

  std::size_t size() const { return end - begin + 1; }
};

AudioSegment audio_segment(std::size_t l, std::size_t alpha, std::size_t delta, std::size_t l_audio);

// Projections of one cross-attention layer. wq: d x d, wk and wv: D_a x d.
struct CrossAttentionWeights {
  Tensor wq;
  Tensor wk;
  Tensor wv;
  std::size_t n_heads = 1;
};

// Reference single-query cross-attention, one head group at a time:
// q = z Wq rotated at (q_pos, 0, 0), k_i = a_i Wk rotated at (k_pos[i], 0, 0),
// out = softmax(q k^T / sqrt(d_head)) (a Wv). z: [d], segment: [n, D_a].
// rope == nullptr disables rotation. Unrecorded; used as an oracle and for
// inspection.
Tensor audio_cross_attention(const Tensor& z, const Tensor& segment, std::span<const double> k_pos, double q_pos,
                             const CrossAttentionWeights& w, const RotaryEmbedder* rope);

// Geometry of the batched op used inside the model.
struct CrossAttentionLayout {
  std::size_t batch = 1;
  std::size_t tokens = 1;       // per sample; frame l lives at token first_frame + l
  std::size_t first_frame = 1;
  std::size_t frames = 1;
  std::size_t l_audio = 1;
  std::size_t n_heads = 1;
  std::size_t alpha = 4;
  std::size_t delta = 1;
  bool use_rope = true;
  double rope_base = 10000.0;
};

// Batched, recorded cross-attention. q: [batch*tokens, d] (already
// projected), kv: [batch*l_audio, 2d] holding keys then values. Returns
// [batch*tokens, d]; rows of non-frame tokens and of samples whose mask entry
// is false are exactly zero. mask may be empty (all true).
Tensor audio_cross_attention_op(const Tensor& q, const Tensor& kv, const CrossAttentionLayout& layout,
                                const std::vector<bool>& mask = {});

}  // namespace synclab::model
