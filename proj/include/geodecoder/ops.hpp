// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "geodecoder/tensor.hpp"

namespace geodecoder::nn {

// Boolean mask over the trailing dimensions of a tensor; true = keep.
struct Mask {
  Shape shape;
  std::vector<std::uint8_t> allow;

  bool at(int q, int k) const { return allow[static_cast<std::size_t>(q) * shape.back() + k] != 0; }
};

inline constexpr double kLayerNormEps = 1e-5;

/// A[.., m, k] x B[.., k, n] with broadcast batch dimensions.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
/// Swaps the last two dimensions.
template <typename T>
Tensor<T> transpose(const Tensor<T>& x);
template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
/// x[.., n] + bias[n]
template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& x, double s);
/// x . w + b for x[.., in], w[in, out], b[out].
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);

/// Tanh approximation.
template <typename T>
Tensor<T> gelu(const Tensor<T>& x);

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, double eps = kLayerNormEps);

/// Softmax over the last dimension of x / temperature with masked entries forced to 0.
/// The mask covers the trailing dimensions and repeats over the leading ones.
/// Throws std::invalid_argument on a fully masked row.
template <typename T>
Tensor<T> softmax_masked(const Tensor<T>& x, const Mask& mask, double temperature = 1.0);

/// Inverted dropout with a counter-based keep mask derived from `key`. rate 0 is the identity.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, std::uint64_t key);

/// Rows of table[V, d] selected by ids. Throws std::out_of_range on id >= V.
template <typename T>
Tensor<T> embedding(const Tensor<T>& table, const std::vector<int>& ids);

/// Rows [begin, end) of the first dimension.
template <typename T>
Tensor<T> slice_rows(const Tensor<T>& x, int begin, int end);
/// Concatenation along the first dimension.
template <typename T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts);

/// [T, H*dh] -> [H, T, dh]
template <typename T>
Tensor<T> split_heads(const Tensor<T>& x, int heads);
/// [H, T, dh] -> [T, H*dh]
template <typename T>
Tensor<T> merge_heads(const Tensor<T>& x);

template <typename T>
Tensor<T> sum(const Tensor<T>& x);
template <typename T>
Tensor<T> mean(const Tensor<T>& x);

/// Mean token cross-entropy of logits[n, V] against targets; entries equal to `ignore` are skipped.
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, const std::vector<int>& targets, int ignore = 0);

}  // namespace geodecoder::nn
