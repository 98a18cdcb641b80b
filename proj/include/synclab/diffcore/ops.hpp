// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

#include "synclab/diffcore/tensor.hpp"

// Differentiable tensor operations. Every op records itself on the inputs'
// tape when any input is recorded; otherwise it is a plain computation.
// Shape mismatches throw DimensionError naming the op and both shapes.
namespace synclab::ops {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor square(const Tensor& a);

// [m,k] x [k,n]
Tensor matmul(const Tensor& a, const Tensor& b);
// [m,k] x [n,k]^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);

// Broadcast a length-n vector over the rows of an [m,n] matrix.
Tensor add_row(const Tensor& a, const Tensor& row);
Tensor mul_row(const Tensor& a, const Tensor& row);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor mse(const Tensor& a, const Tensor& b);

Tensor concat_last(const Tensor& a, const Tensor& b);
Tensor concat_rows(const Tensor& a, const Tensor& b);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);
Tensor slice_last(const Tensor& a, std::size_t begin, std::size_t end);
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> rows);

// Max-shifted softmax along `axis` (negative counts from the back).
Tensor softmax(const Tensor& a, int axis = -1);

// Normalizes each row over the last axis; no affine parameters.
Tensor layer_norm(const Tensor& a, double eps = 1e-5);
// tanh approximation.
Tensor gelu(const Tensor& a);
Tensor silu(const Tensor& a);

}  // namespace synclab::ops
