// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "synclab/diffcore/tensor.hpp"

namespace synclab::model {

// Joint multi-head self-attention over each sample's token sequence.
// qkv: [batch*tokens, 3d] with query, key and value blocks side by side.
// Returns the concatenated head outputs [batch*tokens, d]. Recorded.
Tensor self_attention_op(const Tensor& qkv, std::size_t batch, std::size_t n_heads);

}  // namespace synclab::model
