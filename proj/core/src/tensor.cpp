// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0

#include "disc/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

#include "disc/error.hpp"

namespace disc {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must have rank >= 1");
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor dimension must be positive: " + shape_str(shape));
  }
}

template <typename T>
void check_finite(const char* op, const std::vector<T>& values) {
  for (T v : values) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("non-finite value produced by ") + op);
    }
  }
}

}  // namespace

template <typename T>
BasicTensor<T> BasicTensor<T>::full(Shape shape, T value, bool requires_grad) {
  check_shape(shape);
  auto node = std::make_shared<detail::Node<T>>();
  node->value.assign(shape_numel(shape), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return BasicTensor(std::move(node));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::from(Shape shape, std::vector<T> values, bool requires_grad) {
  check_shape(shape);
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("shape " + shape_str(shape) + " does not match " +
                         std::to_string(values.size()) + " values");
  }
  check_finite("input", values);
  auto node = std::make_shared<detail::Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return BasicTensor(std::move(node));
}

template <typename T>
T BasicTensor<T>::item() const {
  if (numel() != 1) throw UsageError("item() on a tensor of shape " + shape_str(shape()));
  return node_->value[0];
}

template <typename T>
BasicTensor<T> BasicTensor<T>::detach() const {
  auto node = std::make_shared<detail::Node<T>>();
  node->shape = node_->shape;
  node->value = node_->value;
  return BasicTensor(std::move(node));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::clone(bool requires_grad) const {
  BasicTensor out = detach();
  out.node_->requires_grad = requires_grad;
  return out;
}

template <typename T>
std::vector<detail::Node<T>*> topological_order(const BasicTensor<T>& root) {
  std::vector<detail::Node<T>*> order;
  std::unordered_set<const detail::Node<T>*> seen;
  // Iterative post-order DFS; input order is fixed, so the result is too.
  std::vector<std::pair<detail::Node<T>*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node<T>* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

template <typename T>
void backward(const BasicTensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw UsageError("backward() needs a scalar loss");
  }
  if (!std::isfinite(loss.item())) throw NumericError("backward() on a non-finite loss");
  if (!loss.requires_grad()) return;
  auto order = topological_order(loss);
  for (auto* node : order) node->grad.assign(node->value.size(), T(0));
  order.back()->grad[0] = T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node<T>* node = *it;
    if (node->backward) {
      node->backward(*node);
      node->grad.clear();
      node->grad.shrink_to_fit();
    }
  }
}

namespace detail {

template <typename T>
BasicTensor<T> make_result(const char* op, Shape shape, std::vector<T> values,
                           std::vector<BasicTensor<T>> inputs,
                           std::function<void(Node<T>&)> backward_fn) {
  check_finite(op, values);
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->op = op;
  bool any = false;
  for (const auto& in : inputs) any = any || in.requires_grad();
  if (any) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (const auto& in : inputs) node->inputs.push_back(in.node());
    node->backward = std::move(backward_fn);
  }
  return BasicTensor<T>(std::move(node));
}

template <typename T>
std::vector<T>& grad_of(Node<T>& node) {
  if (node.grad.size() != node.value.size()) node.grad.assign(node.value.size(), T(0));
  return node.grad;
}

}  // namespace detail

#define DISC_INSTANTIATE(T)                                                        \
  template class BasicTensor<T>;                                                   \
  template void backward<T>(const BasicTensor<T>&);                                \
  template std::vector<detail::Node<T>*> topological_order<T>(const BasicTensor<T>&); \
  template BasicTensor<T> detail::make_result<T>(const char*, Shape, std::vector<T>, \
                                                 std::vector<BasicTensor<T>>,      \
                                                 std::function<void(detail::Node<T>&)>); \
  template std::vector<T>& detail::grad_of<T>(detail::Node<T>&);

DISC_INSTANTIATE(float)
DISC_INSTANTIATE(double)

#undef DISC_INSTANTIATE

}  // namespace disc
