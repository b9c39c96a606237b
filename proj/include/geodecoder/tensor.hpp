// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace geodecoder::nn {

using Shape = std::vector<int>;

std::size_t numel(const Shape& s);
std::string shape_str(const Shape& s);

template <typename T>
class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
template <typename T>
struct Tensor {
  Tape<T>* tape = nullptr;
  int id = -1;

  const Shape& shape() const;
  int rank() const { return static_cast<int>(shape().size()); }
  /// Negative indices count from the back.
  int dim(int i) const;
  std::size_t size() const;
  const T* data() const;
  /// Null until some gradient has flowed into this node.
  const T* grad() const;
  bool requires_grad() const;
  T item() const;
  std::vector<T> values() const;
};

// Reverse-mode tape. Nodes are appended in evaluation order, so the record
// is topologically sorted by construction.
template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor<T> constant(Shape shape, std::vector<T> values);
  Tensor<T> variable(Shape shape, std::vector<T> values);
  /// Leaf over caller-owned storage. Gradients accumulate into `grad` when it is non-null.
  Tensor<T> external(Shape shape, const T* data, T* grad);

  /// New zero-filled node; ops fill its value and attach a backward rule.
  Tensor<T> make(Shape shape, bool requires_grad);
  void set_backward(const Tensor<T>& t, std::function<void()> fn);

  const Shape& shape(int id) const { return nodes_[id].shape; }
  const T* data(int id) const { return nodes_[id].ext ? nodes_[id].ext : nodes_[id].value.data(); }
  T* mutable_data(int id);
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  /// Gradient buffer, zero-allocated on first use. Only valid for nodes that require grad.
  T* grad(int id);
  const T* grad_if_any(int id) const;

  /// Throws std::invalid_argument unless `loss` is a scalar on this tape.
  void backward(const Tensor<T>& loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;
    const T* ext = nullptr;
    T* ext_grad = nullptr;
    bool requires_grad = false;
    std::function<void()> backward;
  };
  std::vector<Node> nodes_;
};

extern template struct Tensor<float>;
extern template struct Tensor<double>;
extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace geodecoder::nn
