// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#include "geodecoder/tensor.hpp"

#include <stdexcept>

namespace geodecoder::nn {

std::size_t numel(const Shape& s) {
  std::size_t n = 1;
  for (int d : s) {
    if (d < 0) throw std::invalid_argument("negative dimension in shape " + shape_str(s));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

template <typename T>
const Shape& Tensor<T>::shape() const {
  return tape->shape(id);
}

template <typename T>
int Tensor<T>::dim(int i) const {
  const int r = rank();
  const int k = i < 0 ? r + i : i;
  if (k < 0 || k >= r) throw std::out_of_range("dim " + std::to_string(i) + " of shape " + shape_str(shape()));
  return shape()[static_cast<std::size_t>(k)];
}

template <typename T>
std::size_t Tensor<T>::size() const {
  return numel(shape());
}

template <typename T>
const T* Tensor<T>::data() const {
  return tape->data(id);
}

template <typename T>
const T* Tensor<T>::grad() const {
  return tape->grad_if_any(id);
}

template <typename T>
bool Tensor<T>::requires_grad() const {
  return tape->requires_grad(id);
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) throw std::invalid_argument("item() on tensor of shape " + shape_str(shape()));
  return data()[0];
}

template <typename T>
std::vector<T> Tensor<T>::values() const {
  return std::vector<T>(data(), data() + size());
}

template <typename T>
Tensor<T> Tape<T>::constant(Shape shape, std::vector<T> values) {
  if (values.size() != numel(shape))
    throw std::invalid_argument("constant: " + std::to_string(values.size()) + " values for shape " + shape_str(shape));
  Node n;
  n.shape = std::move(shape);
  n.value = std::move(values);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Tensor<T> Tape<T>::variable(Shape shape, std::vector<T> values) {
  Tensor<T> t = constant(std::move(shape), std::move(values));
  nodes_.back().requires_grad = true;
  return t;
}

template <typename T>
Tensor<T> Tape<T>::external(Shape shape, const T* data, T* grad) {
  Node n;
  n.shape = std::move(shape);
  n.ext = data;
  n.ext_grad = grad;
  n.requires_grad = grad != nullptr;
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Tensor<T> Tape<T>::make(Shape shape, bool requires_grad) {
  Node n;
  n.value.assign(numel(shape), T(0));
  n.shape = std::move(shape);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
void Tape<T>::set_backward(const Tensor<T>& t, std::function<void()> fn) {
  if (nodes_[t.id].requires_grad) nodes_[t.id].backward = std::move(fn);
}

template <typename T>
T* Tape<T>::mutable_data(int id) {
  Node& n = nodes_[id];
  if (n.ext) throw std::logic_error("mutable_data on an external leaf");
  return n.value.data();
}

template <typename T>
T* Tape<T>::grad(int id) {
  Node& n = nodes_[id];
  if (n.ext_grad) return n.ext_grad;
  if (n.grad.empty()) n.grad.assign(numel(n.shape), T(0));
  return n.grad.data();
}

template <typename T>
const T* Tape<T>::grad_if_any(int id) const {
  const Node& n = nodes_[id];
  if (n.ext_grad) return n.ext_grad;
  return n.grad.empty() ? nullptr : n.grad.data();
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (loss.tape != this) throw std::invalid_argument("backward: loss lives on another tape");
  if (numel(nodes_[loss.id].shape) != 1)
    throw std::invalid_argument("backward: loss must be scalar, got shape " + shape_str(nodes_[loss.id].shape));
  if (!nodes_[loss.id].requires_grad) return;
  grad(loss.id)[0] += T(1);
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.backward || grad_if_any(i) == nullptr) continue;
    n.backward();
  }
}

template struct Tensor<float>;
template struct Tensor<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace geodecoder::nn
