// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#include "synclab/diffcore/tensor.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

#include "synclab/error.hpp"

namespace synclab {

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

namespace detail {

void TensorNode::accumulate_grad(std::span<const double> g) {
  if (tape == nullptr) return;
  if (grad.empty()) {
    grad.assign(g.begin(), g.end());
    return;
  }
  for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
}

}  // namespace detail

namespace {

void validate_shape(const Shape& shape, std::size_t n) {
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor: zero-sized dimension in shape " + shape_str(shape));
  }
  if (shape_numel(shape) != n) {
    throw DimensionError("tensor: shape " + shape_str(shape) + " does not match " +
                         std::to_string(n) + " values");
  }
}

}  // namespace

Tensor::Tensor() : node_(std::make_shared<detail::TensorNode>()) {
  node_->shape = {1};
  node_->data = {0.0};
}

Tensor::Tensor(Shape shape) : node_(std::make_shared<detail::TensorNode>()) {
  const std::size_t n = shape_numel(shape);
  validate_shape(shape, n);
  node_->shape = std::move(shape);
  node_->data.assign(n, 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : node_(std::make_shared<detail::TensorNode>()) {
  validate_shape(shape, data.size());
  node_->shape = std::move(shape);
  node_->data = std::move(data);
}

Tensor Tensor::zeros(Shape shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(Shape shape, double value) {
  Tensor t(std::move(shape));
  for (double& v : t.node_->data) v = value;
  return t;
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= rank()) {
    throw DimensionError("tensor: axis " + std::to_string(axis) + " out of range for shape " +
                         shape_str(shape()));
  }
  return node_->shape[axis];
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw DimensionError("tensor: rows() on non-matrix " + shape_str(shape()));
  return node_->shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() == 1) return node_->shape[0];
  if (rank() != 2) throw DimensionError("tensor: cols() on rank>2 " + shape_str(shape()));
  return node_->shape[1];
}

std::span<double> Tensor::mutable_data() {
  if (recorded()) throw PreconditionError("tensor: mutable_data() on a recorded tensor");
  return node_->data;
}

double Tensor::item() const {
  if (numel() != 1) throw DimensionError("tensor: item() on non-scalar " + shape_str(shape()));
  return node_->data[0];
}

std::optional<std::uint64_t> Tensor::tape_id() const {
  if (node_->tape == nullptr) return std::nullopt;
  return node_->tape_id;
}

std::vector<double> Tensor::grad() const {
  if (node_->grad.empty()) return std::vector<double>(numel(), 0.0);
  return node_->grad;
}

Tensor Tensor::detach() const { return Tensor(node_->shape, node_->data); }

namespace {
std::atomic<std::uint64_t> g_next_tape_id{1};
}

Tape::Tape() : id_(g_next_tape_id.fetch_add(1)) {}

Tensor Tape::watch(const Tensor& x) {
  Tensor leaf = x.detach();
  leaf.node_->tape = this;
  leaf.node_->tape_id = next_node_++;
  leaves_.push_back(leaf.node_);
  return leaf;
}

void Tape::record(const Tensor& out, BackwardFn backward) {
  out.node_->tape = this;
  out.node_->tape_id = next_node_++;
  entries_.push_back({out.node_, std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
  if (loss.node_->tape != this) throw PreconditionError("backward: loss is not recorded on this tape");
  if (loss.numel() != 1) {
    throw DimensionError("backward: loss must be scalar, got " + shape_str(loss.shape()));
  }
  if (backward_done_) throw PreconditionError("backward: already ran; call reset() first");
  backward_done_ = true;
  loss.node_->grad.assign(1, 1.0);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->out->grad.empty()) continue;
    it->backward(it->out->grad);
  }
}

void Tape::reset() {
  for (auto& e : entries_) e.out->grad.clear();
  for (auto& leaf : leaves_) leaf->grad.clear();
  backward_done_ = false;
}

Tape* recording_tape(std::initializer_list<const Tensor*> inputs, const char* op) {
  Tape* tape = nullptr;
  for (const Tensor* t : inputs) {
    if (t->tape() == nullptr) continue;
    if (tape != nullptr && tape != t->tape()) {
      throw PreconditionError(std::string(op) + ": inputs recorded on different tapes");
    }
    tape = t->tape();
  }
  return tape;
}

}  // namespace synclab
