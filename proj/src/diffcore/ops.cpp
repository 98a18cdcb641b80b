// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "synclab/diffcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "synclab/error.hpp"
#include "synclab/simd/kernels.hpp"

namespace synclab::ops {

namespace {

using NodePtr = std::shared_ptr<detail::TensorNode>;

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                       shape_str(b.shape()));
}

void require_same(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) mismatch(op, a, b);
}

void require_matrix(const char* op, const Tensor& a) {
  if (a.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_str(a.shape()));
  }
}

void accumulate(const NodePtr& node, std::span<const double> g) { node->accumulate_grad(g); }

bool wants_grad(const NodePtr& node) { return node->tape != nullptr; }

template <class F>
Tensor elementwise(const char* op, const Tensor& a, const Tensor& b, F f) {
  require_same(op, a, b);
  std::vector<double> out(a.numel());
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i], y[i]);
  return Tensor(a.shape(), std::move(out));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  Tensor out = elementwise("add", a, b, [](double x, double y) { return x + y; });
  if (Tape* tape = recording_tape({&a, &b}, "add")) {
    tape->record(out, [na = a.node(), nb = b.node()](std::span<const double> g) {
      accumulate(na, g);
      accumulate(nb, g);
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  Tensor out = elementwise("sub", a, b, [](double x, double y) { return x - y; });
  if (Tape* tape = recording_tape({&a, &b}, "sub")) {
    tape->record(out, [na = a.node(), nb = b.node()](std::span<const double> g) {
      accumulate(na, g);
      if (wants_grad(nb)) {
        std::vector<double> neg(g.begin(), g.end());
        for (double& v : neg) v = -v;
        accumulate(nb, neg);
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  Tensor out = elementwise("mul", a, b, [](double x, double y) { return x * y; });
  if (Tape* tape = recording_tape({&a, &b}, "mul")) {
    tape->record(out, [na = a.node(), nb = b.node()](std::span<const double> g) {
      std::vector<double> tmp(g.size());
      if (wants_grad(na)) {
        for (std::size_t i = 0; i < g.size(); ++i) tmp[i] = g[i] * nb->data[i];
        accumulate(na, tmp);
      }
      if (wants_grad(nb)) {
        for (std::size_t i = 0; i < g.size(); ++i) tmp[i] = g[i] * na->data[i];
        accumulate(nb, tmp);
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v *= s;
  Tensor result(a.shape(), std::move(out));
  if (Tape* tape = recording_tape({&a}, "scale")) {
    tape->record(result, [na = a.node(), s](std::span<const double> g) {
      std::vector<double> tmp(g.begin(), g.end());
      for (double& v : tmp) v *= s;
      accumulate(na, tmp);
    });
  }
  return result;
}

Tensor add_scalar(const Tensor& a, double s) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v += s;
  Tensor result(a.shape(), std::move(out));
  if (Tape* tape = recording_tape({&a}, "add_scalar")) {
    tape->record(result, [na = a.node()](std::span<const double> g) { accumulate(na, g); });
  }
  return result;
}

Tensor square(const Tensor& a) {
  std::vector<double> out(a.numel());
  auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * x[i];
  Tensor result(a.shape(), std::move(out));
  if (Tape* tape = recording_tape({&a}, "square")) {
    tape->record(result, [na = a.node()](std::span<const double> g) {
      std::vector<double> tmp(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) tmp[i] = 2.0 * na->data[i] * g[i];
      accumulate(na, tmp);
    });
  }
  return result;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix("matmul", a);
  require_matrix("matmul", b);
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) mismatch("matmul", a, b);
  const auto& kern = simd::kernels();
  std::vector<double> out(m * n, 0.0);
  kern.gemm_nn(m, n, k, a.data().data(), k, b.data().data(), n, out.data(), n);
  Tensor result({m, n}, std::move(out));
  if (Tape* tape = recording_tape({&a, &b}, "matmul")) {
    tape->record(result, [na = a.node(), nb = b.node(), m, n, k](std::span<const double> g) {
      const auto& kern = simd::kernels();
      if (wants_grad(na)) {
        std::vector<double> da(m * k, 0.0);
        kern.gemm_nt(m, k, n, g.data(), n, nb->data.data(), n, da.data(), k);
        accumulate(na, da);
      }
      if (wants_grad(nb)) {
        std::vector<double> db(k * n, 0.0);
        kern.gemm_tn(k, n, m, na->data.data(), k, g.data(), n, db.data(), n);
        accumulate(nb, db);
      }
    });
  }
  return result;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_matrix("matmul_nt", a);
  require_matrix("matmul_nt", b);
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k) mismatch("matmul_nt", a, b);
  const auto& kern = simd::kernels();
  std::vector<double> out(m * n, 0.0);
  kern.gemm_nt(m, n, k, a.data().data(), k, b.data().data(), k, out.data(), n);
  Tensor result({m, n}, std::move(out));
  if (Tape* tape = recording_tape({&a, &b}, "matmul_nt")) {
    tape->record(result, [na = a.node(), nb = b.node(), m, n, k](std::span<const double> g) {
      const auto& kern = simd::kernels();
      if (wants_grad(na)) {
        std::vector<double> da(m * k, 0.0);
        kern.gemm_nn(m, k, n, g.data(), n, nb->data.data(), k, da.data(), k);
        accumulate(na, da);
      }
      if (wants_grad(nb)) {
        std::vector<double> db(n * k, 0.0);
        kern.gemm_tn(n, k, m, g.data(), n, na->data.data(), k, db.data(), k);
        accumulate(nb, db);
      }
    });
  }
  return result;
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  require_matrix("add_row", a);
  const std::size_t m = a.dim(0), n = a.dim(1);
  if (row.numel() != n) mismatch("add_row", a, row);
  std::vector<double> out(a.data().begin(), a.data().end());
  auto r = row.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += r[j];
  Tensor result(a.shape(), std::move(out));
  if (Tape* tape = recording_tape({&a, &row}, "add_row")) {
    tape->record(result, [na = a.node(), nr = row.node(), m, n](std::span<const double> g) {
      accumulate(na, g);
      if (wants_grad(nr)) {
        std::vector<double> dr(n, 0.0);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) dr[j] += g[i * n + j];
        accumulate(nr, dr);
      }
    });
  }
  return result;
}

Tensor mul_row(const Tensor& a, const Tensor& row) {
  require_matrix("mul_row", a);
  const std::size_t m = a.dim(0), n = a.dim(1);
  if (row.numel() != n) mismatch("mul_row", a, row);
  std::vector<double> out(a.data().begin(), a.data().end());
  auto r = row.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] *= r[j];
  Tensor result(a.shape(), std::move(out));
  if (Tape* tape = recording_tape({&a, &row}, "mul_row")) {
    tape->record(result, [na = a.node(), nr = row.node(), m, n](std::span<const double> g) {
      if (wants_grad(na)) {
        std::vector<double> da(m * n);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) da[i * n + j] = g[i * n + j] * nr->data[j];
        accumulate(na, da);
      }
      if (wants_grad(nr)) {
        std::vector<double> dr(n, 0.0);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) dr[j] += g[i * n + j] * na->data[i * n + j];
        accumulate(nr, dr);
      }
    });
  }
  return result;
}

Tensor sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  Tensor result = Tensor::scalar(acc);
  if (Tape* tape = recording_tape({&a}, "sum")) {
    tape->record(result, [na = a.node()](std::span<const double> g) {
      std::vector<double> da(na->data.size(), g[0]);
      accumulate(na, da);
    });
  }
  return result;
}

Tensor mean(const Tensor& a) {
  const double n = static_cast<double>(a.numel());
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  Tensor result = Tensor::scalar(acc / n);
  if (Tape* tape = recording_tape({&a}, "mean")) {
    tape->record(result, [na = a.node(), n](std::span<const double> g) {
      std::vector<double> da(na->data.size(), g[0] / n);
      accumulate(na, da);
    });
  }
  return result;
}

Tensor mse(const Tensor& a, const Tensor& b) { return mean(square(sub(a, b))); }

Tensor concat_last(const Tensor& a, const Tensor& b) {
  if (a.rank() != b.rank()) mismatch("concat_last", a, b);
  for (std::size_t i = 0; i + 1 < a.rank(); ++i) {
    if (a.dim(i) != b.dim(i)) mismatch("concat_last", a, b);
  }
  const std::size_t ca = a.shape().back(), cb = b.shape().back();
  const std::size_t outer = a.numel() / ca;
  std::vector<double> out(outer * (ca + cb));
  for (std::size_t r = 0; r < outer; ++r) {
    std::copy_n(a.data().begin() + r * ca, ca, out.begin() + r * (ca + cb));
    std::copy_n(b.data().begin() + r * cb, cb, out.begin() + r * (ca + cb) + ca);
  }
  Shape shape = a.shape();
  shape.back() = ca + cb;
  Tensor result(shape, std::move(out));
  if (Tape* tape = recording_tape({&a, &b}, "concat_last")) {
    tape->record(result, [na = a.node(), nb = b.node(), outer, ca, cb](std::span<const double> g) {
      std::vector<double> da(outer * ca), db(outer * cb);
      for (std::size_t r = 0; r < outer; ++r) {
        std::copy_n(g.begin() + r * (ca + cb), ca, da.begin() + r * ca);
        std::copy_n(g.begin() + r * (ca + cb) + ca, cb, db.begin() + r * cb);
      }
      accumulate(na, da);
      accumulate(nb, db);
    });
  }
  return result;
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  require_matrix("concat_rows", a);
  require_matrix("concat_rows", b);
  if (a.dim(1) != b.dim(1)) mismatch("concat_rows", a, b);
  std::vector<double> out;
  out.reserve(a.numel() + b.numel());
  out.insert(out.end(), a.data().begin(), a.data().end());
  out.insert(out.end(), b.data().begin(), b.data().end());
  Tensor result({a.dim(0) + b.dim(0), a.dim(1)}, std::move(out));
  if (Tape* tape = recording_tape({&a, &b}, "concat_rows")) {
    const std::size_t na_n = a.numel();
    tape->record(result, [na = a.node(), nb = b.node(), na_n](std::span<const double> g) {
      accumulate(na, g.subspan(0, na_n));
      accumulate(nb, g.subspan(na_n));
    });
  }
  return result;
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  require_matrix("slice_rows", a);
  if (begin >= end || end > a.dim(0)) {
    throw DimensionError("slice_rows: range [" + std::to_string(begin) + "," +
                         std::to_string(end) + ") invalid for " + shape_str(a.shape()));
  }
  const std::size_t n = a.dim(1);
  std::vector<double> out(a.data().begin() + begin * n, a.data().begin() + end * n);
  Tensor result({end - begin, n}, std::move(out));
  if (Tape* tape = recording_tape({&a}, "slice_rows")) {
    tape->record(result, [na = a.node(), begin, n](std::span<const double> g) {
      std::vector<double> da(na->data.size(), 0.0);
      std::copy(g.begin(), g.end(), da.begin() + begin * n);
      accumulate(na, da);
    });
  }
  return result;
}

Tensor slice_last(const Tensor& a, std::size_t begin, std::size_t end) {
  const std::size_t c = a.shape().back();
  if (begin >= end || end > c) {
    throw DimensionError("slice_last: range [" + std::to_string(begin) + "," +
                         std::to_string(end) + ") invalid for " + shape_str(a.shape()));
  }
  const std::size_t outer = a.numel() / c, w = end - begin;
  std::vector<double> out(outer * w);
  for (std::size_t r = 0; r < outer; ++r) {
    std::copy_n(a.data().begin() + r * c + begin, w, out.begin() + r * w);
  }
  Shape shape = a.shape();
  shape.back() = w;
  Tensor result(shape, std::move(out));
  if (Tape* tape = recording_tape({&a}, "slice_last")) {
    tape->record(result, [na = a.node(), outer, c, begin, w](std::span<const double> g) {
      std::vector<double> da(na->data.size(), 0.0);
      for (std::size_t r = 0; r < outer; ++r) {
        std::copy_n(g.begin() + r * w, w, da.begin() + r * c + begin);
      }
      accumulate(na, da);
    });
  }
  return result;
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> rows) {
  require_matrix("gather_rows", table);
  const std::size_t v = table.dim(0), d = table.dim(1);
  if (rows.empty()) throw DimensionError("gather_rows: empty index list");
  std::vector<double> out(rows.size() * d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= v) {
      throw DimensionError("gather_rows: index " + std::to_string(rows[i]) + " out of range for " +
                           shape_str(table.shape()));
    }
    std::copy_n(table.data().begin() + rows[i] * d, d, out.begin() + i * d);
  }
  Tensor result({rows.size(), d}, std::move(out));
  if (Tape* tape = recording_tape({&table}, "gather_rows")) {
    std::vector<std::size_t> idx(rows.begin(), rows.end());
    tape->record(result, [nt = table.node(), idx = std::move(idx), d](std::span<const double> g) {
      std::vector<double> dt(nt->data.size(), 0.0);
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < d; ++j) dt[idx[i] * d + j] += g[i * d + j];
      accumulate(nt, dt);
    });
  }
  return result;
}

Tensor softmax(const Tensor& a, int axis) {
  const int rank = static_cast<int>(a.rank());
  const int ax = axis < 0 ? axis + rank : axis;
  if (ax < 0 || ax >= rank) {
    throw DimensionError("softmax: axis " + std::to_string(axis) + " invalid for " +
                         shape_str(a.shape()));
  }
  std::size_t outer = 1, inner = 1;
  for (int i = 0; i < ax; ++i) outer *= a.dim(i);
  for (int i = ax + 1; i < rank; ++i) inner *= a.dim(i);
  const std::size_t len = a.dim(ax);
  std::vector<double> out(a.numel());
  auto x = a.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      double mx = x[base];
      for (std::size_t i = 1; i < len; ++i) mx = std::max(mx, x[base + i * inner]);
      double z = 0.0;
      for (std::size_t i = 0; i < len; ++i) {
        const double e = std::exp(x[base + i * inner] - mx);
        out[base + i * inner] = e;
        z += e;
      }
      for (std::size_t i = 0; i < len; ++i) out[base + i * inner] /= z;
    }
  }
  Tensor result(a.shape(), std::move(out));
  if (Tape* tape = recording_tape({&a}, "softmax")) {
    tape->record(result, [na = a.node(), nr = std::weak_ptr(result.node()), outer, inner,
                          len](std::span<const double> g) {
      const auto r = nr.lock();
      std::vector<double> da(g.size());
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
          const std::size_t base = o * len * inner + in;
          double dotp = 0.0;
          for (std::size_t i = 0; i < len; ++i) dotp += g[base + i * inner] * r->data[base + i * inner];
          for (std::size_t i = 0; i < len; ++i) {
            const std::size_t k = base + i * inner;
            da[k] = r->data[k] * (g[k] - dotp);
          }
        }
      }
      accumulate(na, da);
    });
  }
  return result;
}

Tensor layer_norm(const Tensor& a, double eps) {
  const std::size_t n = a.shape().back();
  const std::size_t rows = a.numel() / n;
  std::vector<double> out(a.numel());
  std::vector<double> inv_std(rows);
  auto x = a.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += xr[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = (xr[j] - mu) * is;
  }
  Tensor result(a.shape(), std::move(out));
  if (Tape* tape = recording_tape({&a}, "layer_norm")) {
    tape->record(result, [na = a.node(), nr = std::weak_ptr(result.node()),
                          inv_std = std::move(inv_std), rows, n](std::span<const double> g) {
      const auto r = nr.lock();
      std::vector<double> da(g.size());
      const double dn = static_cast<double>(n);
      for (std::size_t i = 0; i < rows; ++i) {
        const double* gi = g.data() + i * n;
        const double* yi = r->data.data() + i * n;
        double mg = 0.0, mgy = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          mg += gi[j];
          mgy += gi[j] * yi[j];
        }
        mg /= dn;
        mgy /= dn;
        for (std::size_t j = 0; j < n; ++j) da[i * n + j] = inv_std[i] * (gi[j] - mg - yi[j] * mgy);
      }
      accumulate(na, da);
    });
  }
  return result;
}

Tensor gelu(const Tensor& a) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
  std::vector<double> out(a.numel());
  auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = x[i];
    out[i] = 0.5 * v * (1.0 + std::tanh(kC * (v + 0.044715 * v * v * v)));
  }
  Tensor result(a.shape(), std::move(out));
  if (Tape* tape = recording_tape({&a}, "gelu")) {
    tape->record(result, [na = a.node()](std::span<const double> g) {
      std::vector<double> da(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double v = na->data[i];
        const double u = kC * (v + 0.044715 * v * v * v);
        const double th = std::tanh(u);
        const double du = kC * (1.0 + 3.0 * 0.044715 * v * v);
        da[i] = g[i] * (0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * du);
      }
      accumulate(na, da);
    });
  }
  return result;
}

Tensor silu(const Tensor& a) {
  std::vector<double> out(a.numel());
  auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] / (1.0 + std::exp(-x[i]));
  Tensor result(a.shape(), std::move(out));
  if (Tape* tape = recording_tape({&a}, "silu")) {
    tape->record(result, [na = a.node()](std::span<const double> g) {
      std::vector<double> da(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double v = na->data[i];
        const double s = 1.0 / (1.0 + std::exp(-v));
        da[i] = g[i] * (s + v * s * (1.0 - s));
      }
      accumulate(na, da);
    });
  }
  return result;
}

}  // namespace synclab::ops
