// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#include "geodecoder/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "geodecoder/rng.hpp"

namespace geodecoder::nn {

namespace {

template <typename T>
void check_same_tape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.tape != b.tape) throw std::invalid_argument(std::string(op) + ": operands live on different tapes");
}

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  check_same_tape(a, b, op);
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

// C[m,n] += A[m,k] B[k,n]
template <typename T>
void gemm_nn(int m, int n, int k, const T* __restrict a, const T* __restrict b, T* __restrict c) {
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<std::size_t>(i) * n;
    const T* arow = a + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const T av = arow[p];
      const T* brow = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m,n] += A[k,m]^T B[k,n]
template <typename T>
void gemm_tn(int m, int n, int k, const T* __restrict a, const T* __restrict b, T* __restrict c) {
  for (int p = 0; p < k; ++p) {
    const T* arow = a + static_cast<std::size_t>(p) * m;
    const T* brow = b + static_cast<std::size_t>(p) * n;
    for (int i = 0; i < m; ++i) {
      const T av = arow[i];
      T* crow = c + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m,n] += A[m,k] B[n,k]^T, via an explicit transpose of B so the inner loop stays contiguous.
template <typename T>
void gemm_nt(int m, int n, int k, const T* a, const T* b, T* c) {
  std::vector<T> bt(static_cast<std::size_t>(k) * n);
  for (int j = 0; j < n; ++j)
    for (int p = 0; p < k; ++p) bt[static_cast<std::size_t>(p) * n + j] = b[static_cast<std::size_t>(j) * k + p];
  gemm_nn(m, n, k, a, bt.data(), c);
}

bool any_grad(std::initializer_list<bool> xs) {
  for (bool x : xs)
    if (x) return true;
  return false;
}

}  // namespace

// ---- matmul ------------------------------------------------------------------

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_tape(a, b, "matmul");
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() < 2 || sb.size() < 2 || sa.back() != sb[sb.size() - 2])
    throw std::invalid_argument("matmul: shape mismatch " + shape_str(sa) + " x " + shape_str(sb));
  const int m = sa[sa.size() - 2];
  const int k = sa.back();
  const int n = sb.back();
  const Shape ba(sa.begin(), sa.end() - 2);
  const Shape bb(sb.begin(), sb.end() - 2);
  const std::size_t rank = std::max(ba.size(), bb.size());
  Shape batch(rank);
  std::vector<std::size_t> stride_a(rank, 0), stride_b(rank, 0);
  {
    std::size_t sta = static_cast<std::size_t>(m) * k;
    std::size_t stb = static_cast<std::size_t>(k) * n;
    for (std::size_t r = 0; r < rank; ++r) {
      const std::size_t i = rank - 1 - r;
      const int da = r < ba.size() ? ba[ba.size() - 1 - r] : 1;
      const int db = r < bb.size() ? bb[bb.size() - 1 - r] : 1;
      if (da != db && da != 1 && db != 1)
        throw std::invalid_argument("matmul: batch dimensions do not broadcast " + shape_str(sa) + " x " + shape_str(sb));
      batch[i] = std::max(da, db);
      stride_a[i] = da == 1 ? 0 : sta;
      stride_b[i] = db == 1 ? 0 : stb;
      sta *= static_cast<std::size_t>(da);
      stb *= static_cast<std::size_t>(db);
    }
  }
  Shape out_shape = batch;
  out_shape.push_back(m);
  out_shape.push_back(n);
  const std::size_t nbatch = numel(batch);
  std::vector<std::size_t> off_a(nbatch), off_b(nbatch);
  for (std::size_t t = 0; t < nbatch; ++t) {
    std::size_t rem = t, oa = 0, ob = 0;
    for (std::size_t r = rank; r-- > 0;) {
      const std::size_t idx = rem % static_cast<std::size_t>(batch[r]);
      rem /= static_cast<std::size_t>(batch[r]);
      oa += idx * stride_a[r];
      ob += idx * stride_b[r];
    }
    off_a[t] = oa;
    off_b[t] = ob;
  }

  Tape<T>* tape = a.tape;
  Tensor<T> out = tape->make(out_shape, any_grad({a.requires_grad(), b.requires_grad()}));
  T* c = tape->mutable_data(out.id);
  const std::size_t mn = static_cast<std::size_t>(m) * n;
  for (std::size_t t = 0; t < nbatch; ++t) gemm_nn(m, n, k, a.data() + off_a[t], b.data() + off_b[t], c + t * mn);

  tape->set_backward(out, [tape, a, b, out, m, n, k, nbatch, mn, off_a, off_b] {
    const T* dc = tape->grad(out.id);
    if (a.requires_grad()) {
      T* da = tape->grad(a.id);
      for (std::size_t t = 0; t < nbatch; ++t) gemm_nt(m, k, n, dc + t * mn, b.data() + off_b[t], da + off_a[t]);
    }
    if (b.requires_grad()) {
      T* db = tape->grad(b.id);
      for (std::size_t t = 0; t < nbatch; ++t) gemm_tn(k, n, m, a.data() + off_a[t], dc + t * mn, db + off_b[t]);
    }
  });
  return out;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x) {
  const Shape& s = x.shape();
  if (s.size() < 2) throw std::invalid_argument("transpose: need rank >= 2, got " + shape_str(s));
  const int m = s[s.size() - 2];
  const int n = s.back();
  Shape os = s;
  std::swap(os[os.size() - 1], os[os.size() - 2]);
  const std::size_t nb = numel(s) / (static_cast<std::size_t>(m) * n);
  Tape<T>* tape = x.tape;
  Tensor<T> out = tape->make(os, x.requires_grad());
  T* y = tape->mutable_data(out.id);
  const T* xd = x.data();
  const std::size_t mn = static_cast<std::size_t>(m) * n;
  for (std::size_t t = 0; t < nb; ++t)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) y[t * mn + static_cast<std::size_t>(j) * m + i] = xd[t * mn + static_cast<std::size_t>(i) * n + j];
  tape->set_backward(out, [tape, x, out, m, n, nb, mn] {
    const T* dy = tape->grad(out.id);
    T* dx = tape->grad(x.id);
    for (std::size_t t = 0; t < nb; ++t)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) dx[t * mn + static_cast<std::size_t>(i) * n + j] += dy[t * mn + static_cast<std::size_t>(j) * m + i];
  });
  return out;
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (numel(shape) != x.size())
    throw std::invalid_argument("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape) + " changes the element count");
  Tape<T>* tape = x.tape;
  Tensor<T> out = tape->make(std::move(shape), x.requires_grad());
  std::copy(x.data(), x.data() + x.size(), tape->mutable_data(out.id));
  tape->set_backward(out, [tape, x, out] {
    const T* dy = tape->grad(out.id);
    T* dx = tape->grad(x.id);
    for (std::size_t i = 0, n = x.size(); i < n; ++i) dx[i] += dy[i];
  });
  return out;
}

// ---- elementwise ---------------------------------------------------------------

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "add");
  Tape<T>* tape = a.tape;
  Tensor<T> out = tape->make(a.shape(), any_grad({a.requires_grad(), b.requires_grad()}));
  T* y = tape->mutable_data(out.id);
  const T* ad = a.data();
  const T* bd = b.data();
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) y[i] = ad[i] + bd[i];
  tape->set_backward(out, [tape, a, b, out, n] {
    const T* dy = tape->grad(out.id);
    if (a.requires_grad()) {
      T* da = tape->grad(a.id);
      for (std::size_t i = 0; i < n; ++i) da[i] += dy[i];
    }
    if (b.requires_grad()) {
      T* db = tape->grad(b.id);
      for (std::size_t i = 0; i < n; ++i) db[i] += dy[i];
    }
  });
  return out;
}

template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias) {
  check_same_tape(x, bias, "add_bias");
  if (bias.rank() != 1 || x.rank() < 1 || x.dim(-1) != bias.dim(0))
    throw std::invalid_argument("add_bias: shape mismatch " + shape_str(x.shape()) + " + " + shape_str(bias.shape()));
  const int n = bias.dim(0);
  const std::size_t rows = x.size() / static_cast<std::size_t>(n);
  Tape<T>* tape = x.tape;
  Tensor<T> out = tape->make(x.shape(), any_grad({x.requires_grad(), bias.requires_grad()}));
  T* y = tape->mutable_data(out.id);
  const T* xd = x.data();
  const T* bd = bias.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (int j = 0; j < n; ++j) y[r * n + j] = xd[r * n + j] + bd[j];
  tape->set_backward(out, [tape, x, bias, out, n, rows] {
    const T* dy = tape->grad(out.id);
    if (x.requires_grad()) {
      T* dx = tape->grad(x.id);
      for (std::size_t i = 0; i < rows * n; ++i) dx[i] += dy[i];
    }
    if (bias.requires_grad()) {
      T* db = tape->grad(bias.id);
      for (std::size_t r = 0; r < rows; ++r)
        for (int j = 0; j < n; ++j) db[j] += dy[r * n + j];
    }
  });
  return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "mul");
  Tape<T>* tape = a.tape;
  Tensor<T> out = tape->make(a.shape(), any_grad({a.requires_grad(), b.requires_grad()}));
  T* y = tape->mutable_data(out.id);
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) y[i] = a.data()[i] * b.data()[i];
  tape->set_backward(out, [tape, a, b, out, n] {
    const T* dy = tape->grad(out.id);
    if (a.requires_grad()) {
      T* da = tape->grad(a.id);
      for (std::size_t i = 0; i < n; ++i) da[i] += dy[i] * b.data()[i];
    }
    if (b.requires_grad()) {
      T* db = tape->grad(b.id);
      for (std::size_t i = 0; i < n; ++i) db[i] += dy[i] * a.data()[i];
    }
  });
  return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, double s) {
  Tape<T>* tape = x.tape;
  Tensor<T> out = tape->make(x.shape(), x.requires_grad());
  T* y = tape->mutable_data(out.id);
  const T sv = static_cast<T>(s);
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) y[i] = x.data()[i] * sv;
  tape->set_backward(out, [tape, x, out, n, sv] {
    const T* dy = tape->grad(out.id);
    T* dx = tape->grad(x.id);
    for (std::size_t i = 0; i < n; ++i) dx[i] += dy[i] * sv;
  });
  return out;
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  return add_bias(matmul(x, w), b);
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2 / pi)
  constexpr double kA = 0.044715;
  Tape<T>* tape = x.tape;
  Tensor<T> out = tape->make(x.shape(), x.requires_grad());
  T* y = tape->mutable_data(out.id);
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    const T v = x.data()[i];
    y[i] = T(0.5) * v * (T(1) + std::tanh(T(kC) * (v + T(kA) * v * v * v)));
  }
  tape->set_backward(out, [tape, x, out, n] {
    const T* dy = tape->grad(out.id);
    T* dx = tape->grad(x.id);
    for (std::size_t i = 0; i < n; ++i) {
      const T v = x.data()[i];
      const T t = std::tanh(T(kC) * (v + T(kA) * v * v * v));
      const T d = T(0.5) * (T(1) + t) + T(0.5) * v * (T(1) - t * t) * T(kC) * (T(1) + T(3 * kA) * v * v);
      dx[i] += dy[i] * d;
    }
  });
  return out;
}

// ---- normalization and attention -------------------------------------------------

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, double eps) {
  check_same_tape(x, gamma, "layer_norm");
  check_same_tape(x, beta, "layer_norm");
  if (x.rank() < 1 || gamma.rank() != 1 || beta.rank() != 1 || gamma.dim(0) != x.dim(-1) || beta.dim(0) != x.dim(-1))
    throw std::invalid_argument("layer_norm: shape mismatch x " + shape_str(x.shape()) + ", gamma " +
                                shape_str(gamma.shape()) + ", beta " + shape_str(beta.shape()));
  const int d = x.dim(-1);
  const std::size_t rows = x.size() / static_cast<std::size_t>(d);
  Tape<T>* tape = x.tape;
  Tensor<T> out = tape->make(x.shape(), any_grad({x.requires_grad(), gamma.requires_grad(), beta.requires_grad()}));
  T* y = tape->mutable_data(out.id);
  std::vector<T> xhat(x.size());
  std::vector<T> rstd(rows);
  const T* xd = x.data();
  const T* g = gamma.data();
  const T* bt = beta.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = xd + r * d;
    T mu = 0;
    for (int j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<T>(d);
    T var = 0;
    for (int j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<T>(d);
    const T rs = T(1) / std::sqrt(var + static_cast<T>(eps));
    rstd[r] = rs;
    for (int j = 0; j < d; ++j) {
      const T h = (row[j] - mu) * rs;
      xhat[r * d + j] = h;
      y[r * d + j] = g[j] * h + bt[j];
    }
  }
  tape->set_backward(out, [tape, x, gamma, beta, out, d, rows, xhat = std::move(xhat), rstd = std::move(rstd)] {
    const T* dy = tape->grad(out.id);
    const T* g = gamma.data();
    if (gamma.requires_grad()) {
      T* dg = tape->grad(gamma.id);
      for (std::size_t r = 0; r < rows; ++r)
        for (int j = 0; j < d; ++j) dg[j] += dy[r * d + j] * xhat[r * d + j];
    }
    if (beta.requires_grad()) {
      T* db = tape->grad(beta.id);
      for (std::size_t r = 0; r < rows; ++r)
        for (int j = 0; j < d; ++j) db[j] += dy[r * d + j];
    }
    if (x.requires_grad()) {
      T* dx = tape->grad(x.id);
      for (std::size_t r = 0; r < rows; ++r) {
        T m1 = 0, m2 = 0;
        for (int j = 0; j < d; ++j) {
          const T dh = dy[r * d + j] * g[j];
          m1 += dh;
          m2 += dh * xhat[r * d + j];
        }
        m1 /= static_cast<T>(d);
        m2 /= static_cast<T>(d);
        for (int j = 0; j < d; ++j) {
          const T dh = dy[r * d + j] * g[j];
          dx[r * d + j] += rstd[r] * (dh - m1 - xhat[r * d + j] * m2);
        }
      }
    }
  });
  return out;
}

template <typename T>
Tensor<T> softmax_masked(const Tensor<T>& x, const Mask& mask, double temperature) {
  if (!(temperature > 0)) throw std::invalid_argument("softmax_masked: temperature must be positive");
  if (x.rank() < 1) throw std::invalid_argument("softmax_masked: scalar input");
  const int n = x.dim(-1);
  const Shape& xs = x.shape();
  if (mask.shape.empty() || mask.shape.size() > xs.size() ||
      !std::equal(mask.shape.begin(), mask.shape.end(), xs.end() - static_cast<std::ptrdiff_t>(mask.shape.size())) ||
      mask.allow.size() != numel(mask.shape))
    throw std::invalid_argument("softmax_masked: mask shape " + shape_str(mask.shape) + " does not cover " + shape_str(xs));
  const std::size_t rows = x.size() / static_cast<std::size_t>(n);
  const std::size_t mask_rows = mask.allow.size() / static_cast<std::size_t>(n);
  const T inv_t = static_cast<T>(1.0 / temperature);
  Tape<T>* tape = x.tape;
  Tensor<T> out = tape->make(xs, x.requires_grad());
  T* y = tape->mutable_data(out.id);
  const T* xd = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const std::uint8_t* keep = mask.allow.data() + (r % mask_rows) * n;
    const T* row = xd + r * n;
    T* yr = y + r * n;
    T mx = -std::numeric_limits<T>::infinity();
    for (int j = 0; j < n; ++j)
      if (keep[j]) mx = std::max(mx, row[j] * inv_t);
    if (mx == -std::numeric_limits<T>::infinity()) {
      throw std::invalid_argument("softmax_masked: row " + std::to_string(r) + " is fully masked");
    }
    T s = 0;
    for (int j = 0; j < n; ++j) {
      yr[j] = keep[j] ? std::exp(row[j] * inv_t - mx) : T(0);
      s += yr[j];
    }
    const T inv = T(1) / s;
    for (int j = 0; j < n; ++j) yr[j] *= inv;
  }
  tape->set_backward(out, [tape, x, out, n, rows, inv_t] {
    const T* dy = tape->grad(out.id);
    const T* yd = out.data();
    T* dx = tape->grad(x.id);
    for (std::size_t r = 0; r < rows; ++r) {
      const T* yr = yd + r * n;
      const T* g = dy + r * n;
      T dot = 0;
      for (int j = 0; j < n; ++j) dot += g[j] * yr[j];
      for (int j = 0; j < n; ++j) dx[r * n + j] += yr[j] * (g[j] - dot) * inv_t;
    }
  });
  return out;
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, std::uint64_t key) {
  if (rate < 0 || rate >= 1) throw std::invalid_argument("dropout: rate must lie in [0, 1)");
  if (rate == 0) return x;
  const std::size_t n = x.size();
  std::vector<T> keep(n);
  const T s = static_cast<T>(1.0 / (1.0 - rate));
  for (std::size_t i = 0; i < n; ++i) keep[i] = to_unit(mix64(hash_combine(key, i))) >= rate ? s : T(0);
  Tape<T>* tape = x.tape;
  Tensor<T> out = tape->make(x.shape(), x.requires_grad());
  T* y = tape->mutable_data(out.id);
  for (std::size_t i = 0; i < n; ++i) y[i] = x.data()[i] * keep[i];
  tape->set_backward(out, [tape, x, out, n, keep = std::move(keep)] {
    const T* dy = tape->grad(out.id);
    T* dx = tape->grad(x.id);
    for (std::size_t i = 0; i < n; ++i) dx[i] += dy[i] * keep[i];
  });
  return out;
}

template <typename T>
Tensor<T> embedding(const Tensor<T>& table, const std::vector<int>& ids) {
  if (table.rank() != 2) throw std::invalid_argument("embedding: table must be 2-D, got " + shape_str(table.shape()));
  const int v = table.dim(0);
  const int d = table.dim(1);
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] < 0 || ids[i] >= v)
      throw std::out_of_range("embedding: id " + std::to_string(ids[i]) + " at position " + std::to_string(i) +
                              " outside table of " + std::to_string(v) + " rows");
  Tape<T>* tape = table.tape;
  Tensor<T> out = tape->make({static_cast<int>(ids.size()), d}, table.requires_grad());
  T* y = tape->mutable_data(out.id);
  for (std::size_t i = 0; i < ids.size(); ++i)
    std::copy_n(table.data() + static_cast<std::size_t>(ids[i]) * d, d, y + i * d);
  tape->set_backward(out, [tape, table, out, ids, d] {
    const T* dy = tape->grad(out.id);
    T* dt = tape->grad(table.id);
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (int j = 0; j < d; ++j) dt[static_cast<std::size_t>(ids[i]) * d + j] += dy[i * d + j];
  });
  return out;
}

// ---- layout ---------------------------------------------------------------------------

template <typename T>
Tensor<T> slice_rows(const Tensor<T>& x, int begin, int end) {
  if (x.rank() < 1 || begin < 0 || end < begin || end > x.dim(0))
    throw std::invalid_argument("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(end) + ") of " +
                                shape_str(x.shape()));
  const std::size_t row = x.size() / static_cast<std::size_t>(std::max(1, x.dim(0)));
  Shape os = x.shape();
  os[0] = end - begin;
  Tape<T>* tape = x.tape;
  Tensor<T> out = tape->make(os, x.requires_grad());
  std::copy(x.data() + begin * row, x.data() + end * row, tape->mutable_data(out.id));
  tape->set_backward(out, [tape, x, out, begin, end, row] {
    const T* dy = tape->grad(out.id);
    T* dx = tape->grad(x.id) + begin * row;
    for (std::size_t i = 0; i < static_cast<std::size_t>(end - begin) * row; ++i) dx[i] += dy[i];
  });
  return out;
}

template <typename T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  Shape os = parts.front().shape();
  if (os.empty()) throw std::invalid_argument("concat_rows: scalar input");
  bool rg = false;
  int rows = 0;
  for (const auto& p : parts) {
    check_same_tape(parts.front(), p, "concat_rows");
    const Shape& s = p.shape();
    if (s.size() != os.size() || !std::equal(s.begin() + 1, s.end(), os.begin() + 1))
      throw std::invalid_argument("concat_rows: " + shape_str(s) + " does not match " + shape_str(os));
    rows += s[0];
    rg = rg || p.requires_grad();
  }
  os[0] = rows;
  Tape<T>* tape = parts.front().tape;
  Tensor<T> out = tape->make(os, rg);
  T* y = tape->mutable_data(out.id);
  std::size_t off = 0;
  for (const auto& p : parts) {
    std::copy(p.data(), p.data() + p.size(), y + off);
    off += p.size();
  }
  tape->set_backward(out, [tape, parts, out] {
    const T* dy = tape->grad(out.id);
    std::size_t o = 0;
    for (const auto& p : parts) {
      const std::size_t n = p.size();
      if (p.requires_grad()) {
        T* dp = tape->grad(p.id);
        for (std::size_t i = 0; i < n; ++i) dp[i] += dy[o + i];
      }
      o += n;
    }
  });
  return out;
}

template <typename T>
Tensor<T> split_heads(const Tensor<T>& x, int heads) {
  if (x.rank() != 2 || heads <= 0 || x.dim(1) % heads != 0)
    throw std::invalid_argument("split_heads: cannot split " + shape_str(x.shape()) + " into " + std::to_string(heads) + " heads");
  const int t = x.dim(0);
  const int dh = x.dim(1) / heads;
  const int d = x.dim(1);
  Tape<T>* tape = x.tape;
  Tensor<T> out = tape->make({heads, t, dh}, x.requires_grad());
  T* y = tape->mutable_data(out.id);
  for (int h = 0; h < heads; ++h)
    for (int i = 0; i < t; ++i)
      std::copy_n(x.data() + static_cast<std::size_t>(i) * d + h * dh, dh, y + (static_cast<std::size_t>(h) * t + i) * dh);
  tape->set_backward(out, [tape, x, out, heads, t, dh, d] {
    const T* dy = tape->grad(out.id);
    T* dx = tape->grad(x.id);
    for (int h = 0; h < heads; ++h)
      for (int i = 0; i < t; ++i)
        for (int j = 0; j < dh; ++j)
          dx[static_cast<std::size_t>(i) * d + h * dh + j] += dy[(static_cast<std::size_t>(h) * t + i) * dh + j];
  });
  return out;
}

template <typename T>
Tensor<T> merge_heads(const Tensor<T>& x) {
  if (x.rank() != 3) throw std::invalid_argument("merge_heads: expected [H, T, dh], got " + shape_str(x.shape()));
  const int heads = x.dim(0);
  const int t = x.dim(1);
  const int dh = x.dim(2);
  const int d = heads * dh;
  Tape<T>* tape = x.tape;
  Tensor<T> out = tape->make({t, d}, x.requires_grad());
  T* y = tape->mutable_data(out.id);
  for (int h = 0; h < heads; ++h)
    for (int i = 0; i < t; ++i)
      std::copy_n(x.data() + (static_cast<std::size_t>(h) * t + i) * dh, dh, y + static_cast<std::size_t>(i) * d + h * dh);
  tape->set_backward(out, [tape, x, out, heads, t, dh, d] {
    const T* dy = tape->grad(out.id);
    T* dx = tape->grad(x.id);
    for (int h = 0; h < heads; ++h)
      for (int i = 0; i < t; ++i)
        for (int j = 0; j < dh; ++j)
          dx[(static_cast<std::size_t>(h) * t + i) * dh + j] += dy[static_cast<std::size_t>(i) * d + h * dh + j];
  });
  return out;
}

// ---- reductions and loss ------------------------------------------------------------------

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  Tape<T>* tape = x.tape;
  Tensor<T> out = tape->make({}, x.requires_grad());
  T s = 0;
  for (std::size_t i = 0, n = x.size(); i < n; ++i) s += x.data()[i];
  tape->mutable_data(out.id)[0] = s;
  tape->set_backward(out, [tape, x, out] {
    const T g = tape->grad(out.id)[0];
    T* dx = tape->grad(x.id);
    for (std::size_t i = 0, n = x.size(); i < n; ++i) dx[i] += g;
  });
  return out;
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  if (x.size() == 0) throw std::invalid_argument("mean: empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, const std::vector<int>& targets, int ignore) {
  if (logits.rank() != 2 || static_cast<std::size_t>(logits.dim(0)) != targets.size())
    throw std::invalid_argument("cross_entropy: logits " + shape_str(logits.shape()) + " vs " +
                                std::to_string(targets.size()) + " targets");
  const int n = logits.dim(0);
  const int v = logits.dim(1);
  int counted = 0;
  for (int i = 0; i < n; ++i) {
    const int t = targets[static_cast<std::size_t>(i)];
    if (t < 0 || t >= v)
      throw std::out_of_range("cross_entropy: target id " + std::to_string(t) + " at position " + std::to_string(i) +
                              " outside vocabulary of " + std::to_string(v));
    if (t != ignore) ++counted;
  }
  Tape<T>* tape = logits.tape;
  Tensor<T> out = tape->make({}, logits.requires_grad() && counted > 0);
  std::vector<T> probs(logits.size());
  T total = 0;
  const T* x = logits.data();
  for (int i = 0; i < n; ++i) {
    const T* row = x + static_cast<std::size_t>(i) * v;
    T* p = probs.data() + static_cast<std::size_t>(i) * v;
    const T mx = *std::max_element(row, row + v);
    T s = 0;
    for (int j = 0; j < v; ++j) {
      p[j] = std::exp(row[j] - mx);
      s += p[j];
    }
    for (int j = 0; j < v; ++j) p[j] /= s;
    const int t = targets[static_cast<std::size_t>(i)];
    if (t != ignore) total += -(row[t] - mx - std::log(s));
  }
  tape->mutable_data(out.id)[0] = counted > 0 ? total / static_cast<T>(counted) : T(0);
  tape->set_backward(out, [tape, logits, out, targets, ignore, n, v, counted, probs = std::move(probs)] {
    const T g = tape->grad(out.id)[0] / static_cast<T>(counted);
    T* dx = tape->grad(logits.id);
    for (int i = 0; i < n; ++i) {
      const int t = targets[static_cast<std::size_t>(i)];
      if (t == ignore) continue;
      const T* p = probs.data() + static_cast<std::size_t>(i) * v;
      T* d = dx + static_cast<std::size_t>(i) * v;
      for (int j = 0; j < v; ++j) d[j] += g * p[j];
      d[t] -= g;
    }
  });
  return out;
}

#define GEODECODER_INSTANTIATE_OPS(T)                                                                  \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                       \
  template Tensor<T> transpose(const Tensor<T>&);                                                      \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                                 \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                          \
  template Tensor<T> add_bias(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                          \
  template Tensor<T> scale(const Tensor<T>&, double);                                                  \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                     \
  template Tensor<T> gelu(const Tensor<T>&);                                                           \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, double);         \
  template Tensor<T> softmax_masked(const Tensor<T>&, const Mask&, double);                            \
  template Tensor<T> dropout(const Tensor<T>&, double, std::uint64_t);                                 \
  template Tensor<T> embedding(const Tensor<T>&, const std::vector<int>&);                             \
  template Tensor<T> slice_rows(const Tensor<T>&, int, int);                                           \
  template Tensor<T> concat_rows(const std::vector<Tensor<T>>&);                                       \
  template Tensor<T> split_heads(const Tensor<T>&, int);                                               \
  template Tensor<T> merge_heads(const Tensor<T>&);                                                    \
  template Tensor<T> sum(const Tensor<T>&);                                                            \
  template Tensor<T> mean(const Tensor<T>&);                                                           \
  template Tensor<T> cross_entropy(const Tensor<T>&, const std::vector<int>&, int);

GEODECODER_INSTANTIATE_OPS(float)
GEODECODER_INSTANTIATE_OPS(double)

#undef GEODECODER_INSTANTIATE_OPS

}  // namespace geodecoder::nn
