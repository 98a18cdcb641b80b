// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "synclab/diffcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "synclab/error.hpp"

namespace synclab {

namespace {

double eval(const ScalarFn& f, const Tensor& x) {
  const double v = f(x).item();
  if (!std::isfinite(v)) throw NumericError("finite_diff_check: f returned a non-finite value");
  return v;
}

}  // namespace

double finite_diff_check(const ScalarFn& f, const Tensor& x, double eps) {
  if (!(eps > 0.0)) throw PreconditionError("finite_diff_check: eps must be > 0");
  Tape tape;
  Tensor leaf = tape.watch(x);
  Tensor loss = f(leaf);
  if (!std::isfinite(loss.item())) {
    throw NumericError("finite_diff_check: f returned a non-finite value");
  }
  if (!loss.recorded()) {
    // f ignores its input entirely; analytic gradient is zero.
    return 0.0;
  }
  tape.backward(loss);
  const std::vector<double> analytic = leaf.grad();

  double worst = 0.0;
  std::vector<double> probe(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double up = eval(f, Tensor(x.shape(), probe));
    probe[i] = orig - eps;
    const double down = eval(f, Tensor(x.shape(), probe));
    probe[i] = orig;
    const double fd = (up - down) / (2.0 * eps);
    const double denom = std::max({std::abs(analytic[i]), std::abs(fd), 1e-8});
    worst = std::max(worst, std::abs(analytic[i] - fd) / denom);
  }
  return worst;
}

}  // namespace synclab
