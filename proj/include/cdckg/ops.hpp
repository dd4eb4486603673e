#pragma once

#include "cdckg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cdckg::ops {

// Numerically stable logistic, kept strictly inside (0,1): deep saturation
// clamps one ulp short of the endpoints instead of rounding onto them.
template <typename T>
inline T sigmoid_scalar(T x) {
  T s;
  if (x >= T(0)) {
    const T e = std::exp(-x);
    s = T(1) / (T(1) + e);
  } else {
    const T e = std::exp(x);
    s = e / (T(1) + e);
  }
  constexpr T kHi = T(1) - std::numeric_limits<T>::epsilon();
  constexpr T kLo = std::numeric_limits<T>::min();
  return std::clamp(s, kLo, kHi);
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> out = x;
  for (auto& v : out.data) v = v > T(0) ? v : T(0);
  return out;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  Tensor<T> out = x;
  for (auto& v : out.data) v = sigmoid_scalar(v);
  return out;
}

template <typename T>
Tensor<T> tanh_map(const Tensor<T>& x) {
  Tensor<T> out = x;
  for (auto& v : out.data) v = std::tanh(v);
  return out;
}

// Output width of the stride-3 row convolution for an input of k columns.
inline int64_t conv_stride3_width(int64_t k) {
  if (k < 3) throw std::invalid_argument("conv_stride3: k < 3");
  return (k - 3) / 3 + 1;
}

// The stride-3 windows never overlap, so gathering them is a permutation of
// the input (and scattering gradients back is its exact inverse): window j of
// row b covers columns 3j..3j+2 of all three rows.
// {B,3,k} -> {B*w, 9}, window rows ordered (b, j), entries (row, d).
template <typename T>
Tensor<T> conv_stride3_gather(const Tensor<T>& m) {
  if (m.rank() != 3 || m.dim(1) != 3) throw std::invalid_argument("conv_stride3: input must be {B,3,k}");
  const int64_t B = m.dim(0), k = m.dim(2), w = conv_stride3_width(k);
  Tensor<T> out({B * w, 9});
  for (int64_t b = 0; b < B; ++b) {
    const T* mb = m.data.data() + b * 3 * k;
    for (int64_t j = 0; j < w; ++j) {
      T* win = out.data.data() + (b * w + j) * 9;
      const T* col = mb + 3 * j;
      for (int row = 0; row < 3; ++row)
        for (int d = 0; d < 3; ++d) win[row * 3 + d] = col[row * k + d];
    }
  }
  return out;
}

// inverse of conv_stride3_gather, accumulating into {B,3,k}
template <typename T>
void conv_stride3_scatter_add(const Tensor<T>& windows, Tensor<T>& m) {
  const int64_t B = m.dim(0), k = m.dim(2), w = conv_stride3_width(k);
  for (int64_t b = 0; b < B; ++b) {
    T* mb = m.data.data() + b * 3 * k;
    for (int64_t j = 0; j < w; ++j) {
      const T* win = windows.data.data() + (b * w + j) * 9;
      T* col = mb + 3 * j;
      for (int row = 0; row < 3; ++row)
        for (int d = 0; d < 3; ++d) col[row * k + d] += win[row * 3 + d];
    }
  }
}

// Stride-3, no-padding convolution of n_k 3x3 kernels over a batch of 3xk
// matrices: m {B,3,k}, kernels {n_k,3,3}, bias {n_k} -> {B,n_k,w}.
template <typename T>
Tensor<T> conv_stride3_batch(const Tensor<T>& m, const Tensor<T>& kernels, const Tensor<T>& bias) {
  if (kernels.rank() != 3 || kernels.dim(1) != 3 || kernels.dim(2) != 3)
    throw std::invalid_argument("conv_stride3: kernels must be {n_k,3,3}");
  const int64_t B = m.dim(0), k = m.dim(2), nk = kernels.dim(0);
  if (bias.numel() != nk) throw std::invalid_argument("conv_stride3: bias length != n_k");
  const int64_t w = conv_stride3_width(k);
  Tensor<T> windows = conv_stride3_gather(m);
  Tensor<T> prod;  // {B*w, nk}
  matmul(windows, false, kernels.reshaped({nk, 9}), true, prod);
  Tensor<T> out({B, nk, w});
  for (int64_t b = 0; b < B; ++b)
    for (int64_t j = 0; j < w; ++j) {
      const T* row = prod.data.data() + (b * w + j) * nk;
      for (int64_t c = 0; c < nk; ++c) out.data[static_cast<size_t>((b * nk + c) * w + j)] = row[c] + bias[c];
    }
  return out;
}

// Spec-shaped variant: one 3xk matrix in, {n_k,w} out.
template <typename T>
Tensor<T> conv_stride3(const Tensor<T>& m, const Tensor<T>& kernels, const Tensor<T>& bias) {
  if (m.rank() != 2 || m.dim(0) != 3) throw std::invalid_argument("conv_stride3: input must be 3xk");
  Tensor<T> batched = conv_stride3_batch(m.reshaped({1, 3, m.dim(1)}), kernels, bias);
  return batched.reshaped({batched.dim(1), batched.dim(2)});
}

// Fused scoring-pipeline stage: ReLU(conv) flattened position-major, i.e.
// f[b][j*n_k + c] for window j of kernel c. One GEMM over the gathered
// windows; the gather is kept for the backward pass via *windows_out.
template <typename T>
Tensor<T> conv_relu_flat(const Tensor<T>& m, const Tensor<T>& kernels, const Tensor<T>& bias,
                         Tensor<T>* windows_out = nullptr) {
  const int64_t B = m.dim(0), k = m.dim(2), nk = kernels.dim(0);
  if (bias.numel() != nk) throw std::invalid_argument("conv_relu_flat: bias length != n_k");
  const int64_t w = conv_stride3_width(k);
  Tensor<T> windows = conv_stride3_gather(m);
  Tensor<T> prod;
  matmul(windows, false, kernels.reshaped({nk, 9}), true, prod);  // {B*w, nk}
  for (int64_t r = 0; r < B * w; ++r) {
    T* row = prod.data.data() + r * nk;
    for (int64_t c = 0; c < nk; ++c) {
      const T v = row[c] + bias[c];
      row[c] = v > T(0) ? v : T(0);
    }
  }
  if (windows_out) *windows_out = std::move(windows);
  return prod.reshaped({B, w * nk});
}

// x: {B,m} (or {m} treated as one row), W: {m,n}, b: {n} -> {B,n}.
template <typename T>
Tensor<T> affine(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  const Tensor<T>* xp = &x;
  Tensor<T> tmp;
  if (x.rank() == 1) {
    tmp = x.reshaped({1, x.numel()});
    xp = &tmp;
  }
  if (xp->dim(1) != w.dim(0)) throw std::invalid_argument("affine: x columns != W rows");
  if (b.numel() != w.dim(1)) throw std::invalid_argument("affine: bias length != W columns");
  Tensor<T> out;
  matmul(*xp, false, w, false, out);
  const int64_t n = out.dim(1);
  for (int64_t i = 0; i < out.dim(0); ++i) {
    T* row = out.data.data() + i * n;
    for (int64_t j = 0; j < n; ++j) row[j] += b[j];
  }
  return out;
}

// y = ReLU(x*W + b); the output doubles as the backward mask.
template <typename T>
Tensor<T> affine_relu(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  Tensor<T> out = affine(x, w, b);
  for (auto& v : out.data) v = v > T(0) ? v : T(0);
  return out;
}

enum class RunMode { kTrain, kEval };

// Inverted dropout: eval mode and p=0 are the identity; train mode zeroes each
// element with probability p and scales survivors by 1/(1-p). The mask (already
// scaled) is written to *mask_out when requested.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, RunMode mode, Rng& rng,
                  Tensor<T>* mask_out = nullptr) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: rate must be in [0,1)");
  if (mode == RunMode::kEval || p == 0.0) {
    if (mask_out) *mask_out = Tensor<T>::full(x.shape, T(1));
    return x;
  }
  Tensor<T> out = x;
  Tensor<T> mask(x.shape);
  const T scale = T(1.0 / (1.0 - p));
  // one draw seeds a splitmix64 stream for this mask; threshold compare on the
  // raw 64-bit values keeps mask generation off the training-profile hot list
  const uint64_t threshold = static_cast<uint64_t>(p * 18446744073709551616.0);  // p * 2^64
  uint64_t state = rng();
  auto next = [&state]() {
    state += 0x9E3779B97F4A7C15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  };
  for (int64_t i = 0; i < x.numel(); ++i) {
    const T m = next() < threshold ? T(0) : scale;
    mask[i] = m;
    out[i] *= m;
  }
  if (mask_out) *mask_out = std::move(mask);
  return out;
}

// Row-wise softmax with max-shift; rows sum to 1.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x) {
  if (x.rank() != 2) throw std::invalid_argument("softmax_rows: rank-2 input required");
  Tensor<T> out = x;
  const int64_t r = x.dim(0), c = x.dim(1);
  for (int64_t i = 0; i < r; ++i) {
    T* row = out.data.data() + i * c;
    T mx = row[0];
    for (int64_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    T sum = T(0);
    for (int64_t j = 0; j < c; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    for (int64_t j = 0; j < c; ++j) row[j] /= sum;
  }
  return out;
}

inline int64_t pooled_width(int64_t n, int64_t window) {
  return (n + window - 1) / window;  // last partial window kept
}

// Non-overlapping max pooling along each row; the last partial window is kept.
// {R,C} -> {R,ceil(C/window)}. Argmax positions go to *arg_out when given.
template <typename T>
Tensor<T> max_pool_cols(const Tensor<T>& x, int64_t window, std::vector<int64_t>* arg_out = nullptr) {
  if (x.rank() != 2) throw std::invalid_argument("max_pool_cols: rank-2 input required");
  if (window < 1) throw std::invalid_argument("max_pool_cols: window must be >= 1");
  const int64_t r = x.dim(0), c = x.dim(1), p = pooled_width(c, window);
  Tensor<T> out({r, p});
  if (arg_out) arg_out->assign(static_cast<size_t>(r * p), 0);
  for (int64_t i = 0; i < r; ++i) {
    for (int64_t q = 0; q < p; ++q) {
      const int64_t lo = q * window, hi = std::min(c, lo + window);
      int64_t best = lo;
      for (int64_t j = lo + 1; j < hi; ++j)
        if (x.at(i, j) > x.at(i, best)) best = j;
      out.at(i, q) = x.at(i, best);
      if (arg_out) (*arg_out)[static_cast<size_t>(i * p + q)] = best;
    }
  }
  return out;
}

// 1-D convenience form over a vector.
template <typename T>
Tensor<T> max_pool_1d(const Tensor<T>& x, int64_t window) {
  Tensor<T> m = max_pool_cols(x.reshaped({1, x.numel()}), window);
  return m.reshaped({m.numel()});
}

// Mean of each row: {R,C} -> {R}.
template <typename T>
Tensor<T> mean_pool_rows(const Tensor<T>& x) {
  if (x.rank() != 2) throw std::invalid_argument("mean_pool_rows: rank-2 input required");
  const int64_t r = x.dim(0), c = x.dim(1);
  Tensor<T> out({r});
  for (int64_t i = 0; i < r; ++i) {
    T sum = T(0);
    for (int64_t j = 0; j < c; ++j) sum += x.at(i, j);
    out[i] = sum / T(c);
  }
  return out;
}

template <typename T>
T l1_distance(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.numel() != b.numel()) throw std::invalid_argument("l1_distance: size mismatch");
  T sum = T(0);
  for (int64_t i = 0; i < a.numel(); ++i) sum += std::abs(a[i] - b[i]);
  return sum;
}

// Full-width convolution sliding over rows: x {R,C}, filters {F,w,C},
// bias {F} -> {F,R-w+1}.
template <typename T>
Tensor<T> conv_rows(const Tensor<T>& x, const Tensor<T>& filters, const Tensor<T>& bias) {
  if (x.rank() != 2 || filters.rank() != 3) throw std::invalid_argument("conv_rows: bad ranks");
  const int64_t R = x.dim(0), C = x.dim(1), F = filters.dim(0), w = filters.dim(1);
  if (filters.dim(2) != C) throw std::invalid_argument("conv_rows: filter width != input columns");
  if (R < w) throw std::invalid_argument("conv_rows: fewer rows than filter height");
  if (bias.numel() != F) throw std::invalid_argument("conv_rows: bias length != filter count");
  const int64_t P = R - w + 1;
  Tensor<T> out({F, P});
  for (int64_t f = 0; f < F; ++f) {
    const T* ft = filters.data.data() + f * w * C;
    for (int64_t p = 0; p < P; ++p) {
      T acc = bias[f];
      const T* xw = x.data.data() + p * C;
      for (int64_t i = 0; i < w * C; ++i) acc += ft[i] * xw[i];
      out.at(f, p) = acc;
    }
  }
  return out;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x) {
  if (x.rank() != 2) throw std::invalid_argument("transpose: rank-2 input required");
  const int64_t r = x.dim(0), c = x.dim(1);
  Tensor<T> out({c, r});
  for (int64_t i = 0; i < r; ++i)
    for (int64_t j = 0; j < c; ++j) out.at(j, i) = x.at(i, j);
  return out;
}

}  // namespace cdckg::ops
