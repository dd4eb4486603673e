#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace cdckg {

using Rng = std::mt19937_64;

// Dense row-major tensor. Rank is whatever the shape says; most of the code
// uses rank 1..3. Scalar type is float (training speed) or double (tests,
// determinism checks).
template <typename T>
struct Tensor {
  std::vector<int64_t> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int64_t> s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(numel_of(shape)), T(0));
  }
  Tensor(std::vector<int64_t> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<int64_t>(data.size()) != numel_of(shape))
      throw std::invalid_argument("tensor: data length does not match shape");
  }

  static int64_t numel_of(const std::vector<int64_t>& s) {
    int64_t n = 1;
    for (int64_t e : s) {
      if (e < 0) throw std::invalid_argument("tensor: negative extent");
      n *= e;
    }
    return n;
  }

  static Tensor zeros(std::vector<int64_t> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<int64_t> s, T v) {
    Tensor t(std::move(s));
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }
  static Tensor uniform(std::vector<int64_t> s, T lo, T hi, Rng& rng) {
    Tensor t(std::move(s));
    std::uniform_real_distribution<double> dist(static_cast<double>(lo), static_cast<double>(hi));
    for (auto& v : t.data) v = static_cast<T>(dist(rng));
    return t;
  }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int64_t dim(int i) const { return shape[static_cast<size_t>(i)]; }

  T& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
  const T& operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

  T& at(int64_t i, int64_t j) {
    assert(rank() == 2);
    return data[static_cast<size_t>(i * shape[1] + j)];
  }
  const T& at(int64_t i, int64_t j) const {
    assert(rank() == 2);
    return data[static_cast<size_t>(i * shape[1] + j)];
  }
  T& at(int64_t i, int64_t j, int64_t k) {
    assert(rank() == 3);
    return data[static_cast<size_t>((i * shape[1] + j) * shape[2] + k)];
  }
  const T& at(int64_t i, int64_t j, int64_t k) const {
    assert(rank() == 3);
    return data[static_cast<size_t>((i * shape[1] + j) * shape[2] + k)];
  }

  Tensor reshaped(std::vector<int64_t> s) const {
    if (numel_of(s) != numel()) throw std::invalid_argument("tensor: reshape element count mismatch");
    return Tensor(std::move(s), data);
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  bool all_finite() const {
    for (T v : data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }

  std::string shape_str() const {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape[i]);
    }
    return s + "]";
  }
};

// C := alpha*op(A)*op(B) + beta*C with row-major operands.
// The double path is a fixed-order loop nest: each output element accumulates
// over the reduction index in ascending order, independent of the number of
// rows in the call. Batched and one-row evaluations therefore agree bitwise,
// which the evaluator's batch-vs-single invariant relies on.
void matmul_f32(int64_t m, int64_t n, int64_t k, bool ta, bool tb, float alpha, const float* a,
                const float* b, float beta, float* c);

template <typename T>
void matmul(const Tensor<T>& a, bool ta, const Tensor<T>& b, bool tb, Tensor<T>& out,
            T alpha = T(1), T beta = T(0)) {
  if (a.rank() != 2 || b.rank() != 2) throw std::invalid_argument("matmul: rank-2 operands required");
  const int64_t m = ta ? a.dim(1) : a.dim(0);
  const int64_t ka = ta ? a.dim(0) : a.dim(1);
  const int64_t kb = tb ? b.dim(1) : b.dim(0);
  const int64_t n = tb ? b.dim(0) : b.dim(1);
  if (ka != kb) throw std::invalid_argument("matmul: inner extents differ");
  if (out.shape != std::vector<int64_t>{m, n}) out = Tensor<T>({m, n});

  if constexpr (std::is_same_v<T, float>) {
    matmul_f32(m, n, ka, ta, tb, alpha, a.data.data(), b.data.data(), beta, out.data.data());
    return;
  } else {
    const T* A = a.data.data();
    const T* B = b.data.data();
    T* C = out.data.data();
    const int64_t lda = a.dim(1), ldb = b.dim(1);
    if (beta == T(0))
      std::fill(out.data.begin(), out.data.end(), T(0));
    else if (beta != T(1))
      for (auto& v : out.data) v *= beta;
    for (int64_t i = 0; i < m; ++i) {
      for (int64_t l = 0; l < ka; ++l) {
        const T av = alpha * (ta ? A[l * lda + i] : A[i * lda + l]);
        if (av == T(0)) continue;
        T* crow = C + i * n;
        if (!tb) {
          const T* brow = B + l * ldb;
          for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        } else {
          for (int64_t j = 0; j < n; ++j) crow[j] += av * B[j * ldb + l];
        }
      }
    }
  }
}

}  // namespace cdckg
