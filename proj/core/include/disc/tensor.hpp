// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major tensors with a dynamic reverse-mode tape.
//
// A tensor is a handle to a graph node. Ops on tensors that require
// gradients record their inputs and a backward closure; `backward(loss)`
// walks the recorded graph in reverse topological order. The graph is
// rebuilt on every forward pass and freed when the last handle goes away.
//
// The element type is a template parameter. Production code uses
// `Tensor` (32-bit); the 64-bit instantiation exists so finite-difference
// checks can run the exact same kernels without single-precision noise.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace disc {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until backward touches the node
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads `self.grad`, accumulates into `inputs[i]->grad`.
  std::function<void(Node& self)> backward;
};

}  // namespace detail

template <typename T>
class BasicTensor {
 public:
  using value_type = T;
  using NodePtr = std::shared_ptr<detail::Node<T>>;

  BasicTensor() = default;
  explicit BasicTensor(NodePtr node) : node_(std::move(node)) {}

  static BasicTensor zeros(Shape shape, bool requires_grad = false);
  static BasicTensor full(Shape shape, T value, bool requires_grad = false);
  static BasicTensor from(Shape shape, std::vector<T> values,
                          bool requires_grad = false);
  static BasicTensor scalar(T value) { return from({1}, {value}); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t numel() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }
  const char* op() const { return node_->op; }

  std::span<const T> data() const { return node_->value; }
  /// Direct write access. Only meaningful for leaves (parameters, inputs);
  /// mutating an interior node invalidates its recorded backward.
  std::span<T> mutable_data() { return node_->value; }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->grad; }

  T item() const;
  T operator[](std::size_t i) const { return node_->value[i]; }
  /// Element (r, c) of a rank-2 tensor.
  T at(std::size_t r, std::size_t c) const {
    return node_->value[r * node_->shape[1] + c];
  }

  /// Same values, cut from the graph.
  BasicTensor detach() const;
  /// Fresh leaf copy with its own storage.
  BasicTensor clone(bool requires_grad) const;

  const NodePtr& node() const { return node_; }
  const std::vector<NodePtr>& inputs() const { return node_->inputs; }

 private:
  NodePtr node_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

/// Reverse-mode sweep from a scalar loss. Gradients of every node reached
/// are reset first, so repeated calls on one graph give identical results.
/// Interior gradients are released after use; leaves keep theirs.
template <typename T>
void backward(const BasicTensor<T>& loss);

/// Nodes reachable from `root` in topological order (inputs first).
template <typename T>
std::vector<detail::Node<T>*> topological_order(const BasicTensor<T>& root);

namespace detail {

/// Builds an op result. If any input requires grad the result records
/// `inputs` and `backward`; otherwise both are dropped. Throws NumericError
/// when `values` contains a non-finite entry.
template <typename T>
BasicTensor<T> make_result(const char* op, Shape shape, std::vector<T> values,
                           std::vector<BasicTensor<T>> inputs,
                           std::function<void(Node<T>&)> backward);

/// Grad buffer of `node`, allocated zeroed on first use.
template <typename T>
std::vector<T>& grad_of(Node<T>& node);

}  // namespace detail

}  // namespace disc
