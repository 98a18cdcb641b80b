// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace synclab {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

class Tape;

namespace detail {

struct TensorNode {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;
  Tape* tape = nullptr;
  std::uint64_t tape_id = 0;

  void accumulate_grad(std::span<const double> g);
};

}  // namespace detail

// Dense row-major float64 array. Copies share storage; treat values as
// immutable once they have been handed to an op.
class Tensor {
 public:
  Tensor();
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->data.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return node_->data; }
  // Only valid before the tensor has been shared with an op or recorded.
  std::span<double> mutable_data();

  double item() const;
  double at(std::size_t i) const { return node_->data[i]; }
  double at(std::size_t r, std::size_t c) const { return node_->data[r * cols() + c]; }

  bool recorded() const { return node_->tape != nullptr; }
  std::optional<std::uint64_t> tape_id() const;
  Tape* tape() const { return node_->tape; }

  bool has_grad() const { return !node_->grad.empty(); }
  // Zero-filled span when no gradient reached this tensor.
  std::vector<double> grad() const;

  // Unrecorded deep copy.
  Tensor detach() const;

  const std::shared_ptr<detail::TensorNode>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::TensorNode> node_;

  friend class Tape;
};

// Reverse-mode recording scope. Confined to one thread; independent tapes
// may run concurrently.
class Tape {
 public:
  using BackwardFn = std::function<void(std::span<const double> out_grad)>;

  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Returns a recorded leaf holding a copy of x's values.
  Tensor watch(const Tensor& x);

  // Accumulates d(loss)/d(leaf) into every recorded tensor reachable from
  // loss. Throws if loss is not a recorded scalar or backward already ran.
  void backward(const Tensor& loss);

  // Clears gradients so backward can run again on the same graph.
  void reset();

  std::size_t size() const { return entries_.size(); }
  std::uint64_t id() const { return id_; }

  // Op-author hook: registers out as produced by an op over recorded inputs.
  void record(const Tensor& out, BackwardFn backward);

 private:
  struct Entry {
    std::shared_ptr<detail::TensorNode> out;
    BackwardFn backward;
  };
  std::vector<Entry> entries_;
  std::vector<std::shared_ptr<detail::TensorNode>> leaves_;
  std::uint64_t id_;
  std::uint64_t next_node_ = 0;
  bool backward_done_ = false;
};

// The tape shared by the recorded inputs, or nullptr when none is recorded.
// Inputs recorded on different tapes are an error.
Tape* recording_tape(std::initializer_list<const Tensor*> inputs, const char* op);

}  // namespace synclab
