// Copyright 2026 The infer-bev Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef INFER_AUTODIFF_TENSOR_HPP
#define INFER_AUTODIFF_TENSOR_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

/**
 * \file
 * \brief Reverse-mode differentiable tensors recorded on an explicit tape.
 *
 * A Tensor is a handle to a Node. Leaves (parameters, constants) live outside
 * any tape. Every op result that depends on a gradient-requiring input is
 * appended to the tape in creation order, so reverse tape order is a valid
 * reverse topological order and Tape::backward visits each node once.
 */

namespace infer::ad {

using Shape = std::vector<std::size_t>;

[[nodiscard]] inline std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (const auto d : shape) {
    n *= d;
  }
  return n;
}

[[nodiscard]] inline std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    s += (i ? "x" : "") + std::to_string(shape[i]);
  }
  return s + "]";
}

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  ///< empty until a gradient reaches this node
  bool requires_grad = false;
  std::uint64_t id = 0;
  std::function<void()> backward;

  T* grad_buffer() {
    if (grad.empty()) {
      grad.assign(value.size(), T{0});
    }
    return grad.data();
  }
};

template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  /// Leaf without gradient.
  static Tensor constant(Shape shape, std::vector<T> values) {
    if (infer::ad::numel(shape) != values.size()) {
      throw ShapeError("Tensor::constant: " + shape_string(shape) + " needs " + std::to_string(infer::ad::numel(shape)) +
                       " values, got " + std::to_string(values.size()));
    }
    auto n = std::make_shared<Node<T>>();
    n->shape = std::move(shape);
    n->value = std::move(values);
    return Tensor{std::move(n)};
  }

  static Tensor zeros(Shape shape) {
    const auto count = infer::ad::numel(shape);
    return constant(std::move(shape), std::vector<T>(count, T{0}));
  }

  /// Leaf that accumulates gradients.
  static Tensor parameter(Shape shape, std::vector<T> values) {
    Tensor t = constant(std::move(shape), std::move(values));
    t.node_->requires_grad = true;
    return t;
  }

  [[nodiscard]] bool defined() const { return static_cast<bool>(node_); }
  [[nodiscard]] const Shape& shape() const { return node_->shape; }
  [[nodiscard]] std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  [[nodiscard]] std::size_t numel() const { return node_->value.size(); }
  [[nodiscard]] std::span<const T> value() const { return node_->value; }
  [[nodiscard]] std::span<T> mutable_value() { return node_->value; }
  [[nodiscard]] T item() const { return node_->value.at(0); }
  [[nodiscard]] bool requires_grad() const { return node_ && node_->requires_grad; }
  [[nodiscard]] bool has_grad() const { return !node_->grad.empty(); }

  /// Gradient; zeros when nothing was accumulated yet.
  [[nodiscard]] std::span<const T> grad() const {
    node_->grad_buffer();
    return node_->grad;
  }
  [[nodiscard]] std::span<T> mutable_grad() { return {node_->grad_buffer(), node_->value.size()}; }

  void zero_grad() {
    if (!node_->grad.empty()) {
      std::fill(node_->grad.begin(), node_->grad.end(), T{0});
    }
  }

  [[nodiscard]] Node<T>* node() const { return node_.get(); }
  [[nodiscard]] const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Copy of the value with no history.
template <typename T>
[[nodiscard]] Tensor<T> detach(const Tensor<T>& t) {
  return Tensor<T>::constant(t.shape(), std::vector<T>(t.value().begin(), t.value().end()));
}

template <typename T>
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  ~Tape() { clear(); }

  [[nodiscard]] bool recording() const { return recording_; }
  void set_recording(bool on) { recording_ = on; }

  /// True when an op over `inputs` must be recorded.
  [[nodiscard]] bool needs_record(std::initializer_list<const Tensor<T>*> inputs) const {
    if (!recording_) {
      return false;
    }
    return std::any_of(inputs.begin(), inputs.end(),
                       [](const Tensor<T>* t) { return t != nullptr && t->defined() && t->requires_grad(); });
  }

  /// Wraps an op result. When `backward` is non-null the node joins the tape.
  Tensor<T> emit(Shape shape, std::vector<T> value, std::function<void(Node<T>&)> backward) {
    auto n = std::make_shared<Node<T>>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    if (backward) {
      n->requires_grad = true;
      n->id = next_id_++;
      Node<T>* self = n.get();
      n->backward = [self, fn = std::move(backward)]() { fn(*self); };
      nodes_.push_back(n);
    }
    return Tensor<T>{std::move(n)};
  }

  /// Seeds d(loss)/d(loss) = 1 and propagates to every recorded node once, newest first.
  void backward(const Tensor<T>& loss) {
    if (loss.numel() != 1) {
      throw ShapeError("Tape::backward: loss must be a scalar, got " + shape_string(loss.shape()));
    }
    loss.node()->grad_buffer()[0] += T{1};
    visits_ = 0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      Node<T>& n = **it;
      if (n.grad.empty() || !n.backward) {
        continue;
      }
      n.backward();
      ++visits_;
    }
  }

  /// Drops the recorded graph. Tensors that outlive the tape keep their values only.
  void clear() {
    for (auto& n : nodes_) {
      n->backward = nullptr;
    }
    nodes_.clear();
  }

  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] std::size_t last_visit_count() const { return visits_; }

 private:
  bool recording_;
  std::uint64_t next_id_ = 1;
  std::size_t visits_ = 0;
  std::vector<std::shared_ptr<Node<T>>> nodes_;
};

}  // namespace infer::ad

#endif
