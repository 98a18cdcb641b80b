// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

// The AVX2 kernels must agree with the scalar reference to rounding.

#include <doctest.h>

#include <cmath>
#include <vector>

#include "synclab/diffcore/rng.hpp"
#include "synclab/simd/kernels.hpp"

using namespace synclab;
using namespace synclab::simd;

namespace {

std::vector<double> rand_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

// Elementwise tolerance scaled by the magnitude of the summed terms.
bool close(const std::vector<double>& a, const std::vector<double>& b, double scale) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > 1e-13 * scale) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("dispatch picks a usable table") {
  const auto& k = kernels();
  CHECK(isa_available(k.isa));
  CHECK(kernels_for(Isa::kScalar).isa == Isa::kScalar);
  CHECK(isa_name(Isa::kScalar) == "scalar");
}

TEST_CASE("dot and axpy: avx2 vs scalar") {
  if (!isa_available(Isa::kAvx2)) return;
  Rng rng(1);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 8u, 15u, 16u, 17u, 63u, 100u, 1031u}) {
    CAPTURE(n);
    const auto x = rand_vec(rng, n), y = rand_vec(rng, n);
    const double s = scalar::dot(x.data(), y.data(), n);
    const double v = avx2::dot(x.data(), y.data(), n);
    CHECK(std::abs(s - v) <= 1e-13 * (1.0 + static_cast<double>(n)));

    auto ys = y, yv = y;
    scalar::axpy(0.37, x.data(), ys.data(), n);
    avx2::axpy(0.37, x.data(), yv.data(), n);
    CHECK(close(ys, yv, 4.0));
  }
}

TEST_CASE("gemm variants: avx2 vs scalar on ragged shapes and strides") {
  if (!isa_available(Isa::kAvx2)) return;
  Rng rng(2);
  const std::size_t dims[] = {1, 2, 3, 4, 5, 7, 8, 9, 16, 17, 33};
  for (std::size_t m : dims) {
    for (std::size_t n : dims) {
      for (std::size_t k : {1u, 4u, 6u, 13u, 32u}) {
        CAPTURE(m);
        CAPTURE(n);
        CAPTURE(k);
        const std::size_t pad = 3;
        // nn: A m x k, B k x n
        {
          const std::size_t lda = k + pad, ldb = n + pad, ldc = n + pad;
          const auto a = rand_vec(rng, m * lda), b = rand_vec(rng, k * ldb), c0 = rand_vec(rng, m * ldc);
          auto cs = c0, cv = c0;
          scalar::gemm_nn(m, n, k, a.data(), lda, b.data(), ldb, cs.data(), ldc);
          avx2::gemm_nn(m, n, k, a.data(), lda, b.data(), ldb, cv.data(), ldc);
          CHECK(close(cs, cv, 4.0 * static_cast<double>(k)));
          // Padding columns are untouched.
          for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = n; c < ldc; ++c) CHECK(cv[r * ldc + c] == c0[r * ldc + c]);
        }
        // nt: A m x k, B n x k
        {
          const std::size_t lda = k + pad, ldb = k + pad, ldc = n + pad;
          const auto a = rand_vec(rng, m * lda), b = rand_vec(rng, n * ldb), c0 = rand_vec(rng, m * ldc);
          auto cs = c0, cv = c0;
          scalar::gemm_nt(m, n, k, a.data(), lda, b.data(), ldb, cs.data(), ldc);
          avx2::gemm_nt(m, n, k, a.data(), lda, b.data(), ldb, cv.data(), ldc);
          CHECK(close(cs, cv, 4.0 * static_cast<double>(k)));
        }
        // tn: A k x m, B k x n
        {
          const std::size_t lda = m + pad, ldb = n + pad, ldc = n + pad;
          const auto a = rand_vec(rng, k * lda), b = rand_vec(rng, k * ldb), c0 = rand_vec(rng, m * ldc);
          auto cs = c0, cv = c0;
          scalar::gemm_tn(m, n, k, a.data(), lda, b.data(), ldb, cs.data(), ldc);
          avx2::gemm_tn(m, n, k, a.data(), lda, b.data(), ldb, cv.data(), ldc);
          CHECK(close(cs, cv, 4.0 * static_cast<double>(k)));
        }
      }
    }
  }
}

TEST_CASE("scalar gemm matches a naive triple loop") {
  Rng rng(3);
  const std::size_t m = 5, n = 6, k = 7;
  const auto a = rand_vec(rng, m * k), b = rand_vec(rng, k * n);
  std::vector<double> c(m * n, 1.0);
  scalar::gemm_nn(m, n, k, a.data(), k, b.data(), n, c.data(), n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 1.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      CHECK(c[i * n + j] == doctest::Approx(s).epsilon(1e-14));
    }
  }
}
