// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "synclab/model/self_attention.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "synclab/error.hpp"
#include "synclab/simd/kernels.hpp"

namespace synclab::model {

Tensor self_attention_op(const Tensor& qkv, std::size_t batch, std::size_t n_heads) {
  if (qkv.rank() != 2 || batch == 0 || qkv.dim(0) % batch != 0 || qkv.dim(1) % 3 != 0 || n_heads == 0 ||
      (qkv.dim(1) / 3) % n_heads != 0) {
    throw DimensionError("self_attention_op: bad shape " + shape_str(qkv.shape()) + " for batch " +
                         std::to_string(batch) + ", heads " + std::to_string(n_heads));
  }
  const std::size_t n = qkv.dim(0) / batch, d = qkv.dim(1) / 3, dh = d / n_heads, ld = 3 * d;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto& kern = simd::kernels();
  const double* x = qkv.data().data();
  std::vector<double> out(batch * n * d, 0.0);
  auto probs = std::make_shared<std::vector<double>>(batch * n_heads * n * n, 0.0);

  for (std::size_t b = 0; b < batch; ++b) {
    const double* xb = x + b * n * ld;
    for (std::size_t h = 0; h < n_heads; ++h) {
      double* p = probs->data() + (b * n_heads + h) * n * n;
      kern.gemm_nt(n, n, dh, xb + h * dh, ld, xb + d + h * dh, ld, p, n);
      for (std::size_t i = 0; i < n; ++i) {
        double* r = p + i * n;
        double mx = -INFINITY;
        for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, r[j] *= scale);
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) total += (r[j] = std::exp(r[j] - mx));
        const double inv = 1.0 / total;
        for (std::size_t j = 0; j < n; ++j) r[j] *= inv;
      }
      kern.gemm_nn(n, dh, n, p, n, xb + 2 * d + h * dh, ld, out.data() + b * n * d + h * dh, d);
    }
  }

  Tensor result({batch * n, d}, std::move(out));
  if (Tape* tape = recording_tape({&qkv}, "self_attention_op")) {
    tape->record(result, [node = qkv.node(), probs, batch, n_heads, n, d, dh, ld, scale](std::span<const double> g) {
      const auto& kern = simd::kernels();
      std::vector<double> dx(node->data.size(), 0.0);
      std::vector<double> dp(n * n);
      const double* x = node->data.data();
      for (std::size_t b = 0; b < batch; ++b) {
        const double* xb = x + b * n * ld;
        double* dxb = dx.data() + b * n * ld;
        const double* gb = g.data() + b * n * d;
        for (std::size_t h = 0; h < n_heads; ++h) {
          const double* p = probs->data() + (b * n_heads + h) * n * n;
          // dV = P^T dO, dP = dO V^T
          kern.gemm_tn(n, dh, n, p, n, gb + h * dh, d, dxb + 2 * d + h * dh, ld);
          std::fill(dp.begin(), dp.end(), 0.0);
          kern.gemm_nt(n, n, dh, gb + h * dh, d, xb + 2 * d + h * dh, ld, dp.data(), n);
          for (std::size_t i = 0; i < n; ++i) {
            const double* pr = p + i * n;
            double* r = dp.data() + i * n;
            const double dot = kern.dot(pr, r, n);
            for (std::size_t j = 0; j < n; ++j) r[j] = pr[j] * (r[j] - dot) * scale;
          }
          // dQ = dS K, dK = dS^T Q
          kern.gemm_nn(n, dh, n, dp.data(), n, xb + d + h * dh, ld, dxb + h * dh, ld);
          kern.gemm_tn(n, dh, n, dp.data(), n, xb + h * dh, ld, dxb + d + h * dh, ld);
        }
      }
      node->accumulate_grad(dx);
    });
  }
  return result;
}

}  // namespace synclab::model
