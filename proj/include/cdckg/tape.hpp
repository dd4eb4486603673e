#pragma once

#include "cdckg/ops.hpp"
#include "cdckg/tensor.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace cdckg {

// Reverse-mode tape over Tensor<T>. A forward pass records one node per
// operation in creation (= topological) order; backward() replays the closures
// in reverse and flushes leaf gradients into the registered sinks. One tape
// serves one training step; tapes are independent and not thread-shared.
template <typename T>
class Tape {
 public:
  explicit Tape(ops::RunMode mode, Rng* rng = nullptr) : mode_(mode), rng_(rng) {}

  ops::RunMode mode() const { return mode_; }

  const Tensor<T>& val(int id) const {
    const Node& n = nodes_[static_cast<size_t>(id)];
    return n.ext ? *n.ext : n.val;
  }

  Tensor<T>& grad(int id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.grad_alloc) {
      n.grad = Tensor<T>(val(id).shape);
      n.grad_alloc = true;
    }
    return n.grad;
  }

  bool has_grad(int id) const { return nodes_[static_cast<size_t>(id)].grad_alloc; }

  // --- leaves ---

  int constant(Tensor<T> v) { return push(std::move(v), nullptr); }

  // Differentiable leaf over externally owned storage; backward adds into *sink.
  int param(const Tensor<T>* v, Tensor<T>* sink) {
    int id = push_ext(v);
    nodes_.back().back = [this, id, sink]() {
      if (!sink) return;
      const Tensor<T>& g = grad(id);
      for (int64_t i = 0; i < g.numel(); ++i) sink->data[static_cast<size_t>(i)] += g[i];
    };
    return id;
  }

  // Row gather from an embedding table: {B, cols} output. Backward scatter-adds
  // the output gradient rows into *sink without materializing a full table grad.
  int lookup_rows(const Tensor<T>* table, Tensor<T>* sink, std::vector<int64_t> ids) {
    const int64_t cols = table->dim(1);
    const int64_t B = static_cast<int64_t>(ids.size());
    Tensor<T> out({B, cols});
    for (int64_t b = 0; b < B; ++b) {
      const T* src = table->data.data() + ids[static_cast<size_t>(b)] * cols;
      std::copy(src, src + cols, out.data.data() + b * cols);
    }
    int id = push(std::move(out), nullptr);
    nodes_.back().back = [this, id, sink, ids = std::move(ids), cols]() {
      if (!sink) return;
      const Tensor<T>& g = grad(id);
      for (size_t b = 0; b < ids.size(); ++b) {
        T* dst = sink->data.data() + ids[b] * cols;
        const T* src = g.data.data() + static_cast<int64_t>(b) * cols;
        for (int64_t j = 0; j < cols; ++j) dst[j] += src[j];
      }
    };
    return id;
  }

  // --- ops ---

  // {B,k} x3 -> {B,3,k}, rows ordered head, relation, tail.
  int stack3(int h, int r, int t) {
    const Tensor<T>&vh = val(h), &vr = val(r), &vt = val(t);
    const int64_t B = vh.dim(0), k = vh.dim(1);
    Tensor<T> out({B, 3, k});
    for (int64_t b = 0; b < B; ++b) {
      std::copy_n(vh.data.data() + b * k, k, out.data.data() + (b * 3 + 0) * k);
      std::copy_n(vr.data.data() + b * k, k, out.data.data() + (b * 3 + 1) * k);
      std::copy_n(vt.data.data() + b * k, k, out.data.data() + (b * 3 + 2) * k);
    }
    int id = push(std::move(out), nullptr);
    nodes_.back().back = [this, id, h, r, t, B, k]() {
      const Tensor<T>& g = grad(id);
      int in[3] = {h, r, t};
      for (int row = 0; row < 3; ++row) {
        Tensor<T>& gi = grad(in[row]);
        for (int64_t b = 0; b < B; ++b) {
          const T* src = g.data.data() + (b * 3 + row) * k;
          T* dst = gi.data.data() + b * k;
          for (int64_t j = 0; j < k; ++j) dst[j] += src[j];
        }
      }
    };
    return id;
  }

  int conv_stride3(int m, int kern, int bias) {
    int id = push(ops::conv_stride3_batch(val(m), val(kern), val(bias)), nullptr);
    nodes_.back().back = [this, id, m, kern, bias]() {
      const Tensor<T>& g = grad(id);
      const Tensor<T>&mv = val(m), &kv = val(kern);
      Tensor<T>&gm = grad(m), &gk = grad(kern), &gb = grad(bias);
      const int64_t B = mv.dim(0), k = mv.dim(2), nk = kv.dim(0), w = g.dim(2);
      for (int64_t b = 0; b < B; ++b) {
        const T* mb = mv.data.data() + b * 3 * k;
        T* gmb = gm.data.data() + b * 3 * k;
        for (int64_t c = 0; c < nk; ++c) {
          const T* kc = kv.data.data() + c * 9;
          T* gkc = gk.data.data() + c * 9;
          const T* go = g.data.data() + (b * nk + c) * w;
          for (int64_t j = 0; j < w; ++j) {
            const T gj = go[j];
            if (gj == T(0)) continue;
            gb[c] += gj;
            const T* col = mb + 3 * j;
            T* gcol = gmb + 3 * j;
            for (int row = 0; row < 3; ++row)
              for (int d = 0; d < 3; ++d) {
                gkc[row * 3 + d] += gj * col[row * k + d];
                gcol[row * k + d] += gj * kc[row * 3 + d];
              }
          }
        }
      }
    };
    return id;
  }

  // ReLU(conv) flattened position-major: {B,3,k} -> {B, w*n_k}. The fused
  // backward reuses the output as the ReLU mask and runs both gradient
  // contractions as GEMMs over the gathered windows.
  int conv_relu_flat(int m, int kern, int bias) {
    Tensor<T> windows;
    int id = push(ops::conv_relu_flat(val(m), val(kern), val(bias), &windows), nullptr);
    nodes_.back().back = [this, id, m, kern, bias, windows = std::move(windows)]() {
      const Tensor<T>&g = grad(id), &y = val(id), &kv = val(kern);
      const Tensor<T>& mv = val(m);
      const int64_t B = mv.dim(0), k = mv.dim(2), nk = kv.dim(0);
      const int64_t w = ops::conv_stride3_width(k);
      // mask the upstream gradient by the ReLU activity
      Tensor<T> gm({B * w, nk});
      Tensor<T>& gb = grad(bias);
      for (int64_t r = 0; r < B * w; ++r) {
        const T* grow = g.data.data() + r * nk;
        const T* yrow = y.data.data() + r * nk;
        T* out = gm.data.data() + r * nk;
        for (int64_t c = 0; c < nk; ++c) {
          const T gv = yrow[c] > T(0) ? grow[c] : T(0);
          out[c] = gv;
          gb[c] += gv;
        }
      }
      Tensor<T> gkern = grad(kern).reshaped({nk, 9});
      cdckg::matmul(gm, true, windows, false, gkern, T(1), T(1));  // {nk,9}
      grad(kern) = gkern.reshaped({nk, 3, 3});
      Tensor<T> gwin;
      cdckg::matmul(gm, false, kv.reshaped({nk, 9}), false, gwin);  // {B*w, 9}
      ops::conv_stride3_scatter_add(gwin, grad(m));
    };
    return id;
  }

  // y = ReLU(x*W + b) with the output reused as the backward mask.
  int affine_relu(int x, int w, int b) {
    int id = push(ops::affine_relu(val(x), val(w), val(b)), nullptr);
    nodes_.back().back = [this, id, x, w, b]() {
      const Tensor<T>&g = grad(id), &y = val(id);
      const Tensor<T>&xv = val(x), &wv = val(w);
      Tensor<T> gm = g;
      Tensor<T>& gb = grad(b);
      const int64_t B = g.dim(0), n = g.dim(1);
      for (int64_t i = 0; i < B; ++i) {
        T* row = gm.data.data() + i * n;
        const T* yrow = y.data.data() + i * n;
        for (int64_t j = 0; j < n; ++j) {
          if (yrow[j] <= T(0)) row[j] = T(0);
          gb[j] += row[j];
        }
      }
      cdckg::matmul(gm, false, wv, true, grad(x), T(1), T(1));
      cdckg::matmul(xv, true, gm, false, grad(w), T(1), T(1));
    };
    return id;
  }

  int reshape(int x, std::vector<int64_t> s) {
    int id = push(val(x).reshaped(s), nullptr);
    nodes_.back().back = [this, id, x]() {
      const Tensor<T>& g = grad(id);
      Tensor<T>& gx = grad(x);
      for (int64_t i = 0; i < g.numel(); ++i) gx[i] += g[i];
    };
    return id;
  }

  // Identity in eval mode or at rate 0 (no node recorded).
  int dropout(int x, double p) {
    if (mode_ == ops::RunMode::kEval || p == 0.0) return x;
    if (!rng_) throw std::logic_error("dropout: tape has no rng in train mode");
    Tensor<T> mask;
    Tensor<T> out = ops::dropout(val(x), p, ops::RunMode::kTrain, *rng_, &mask);
    int id = push(std::move(out), nullptr);
    nodes_.back().back = [this, id, x, mask = std::move(mask)]() {
      const Tensor<T>& g = grad(id);
      Tensor<T>& gx = grad(x);
      for (int64_t i = 0; i < g.numel(); ++i) gx[i] += g[i] * mask[i];
    };
    return id;
  }

  int relu(int x) {
    int id = push(ops::relu(val(x)), nullptr);
    nodes_.back().back = [this, id, x]() {
      const Tensor<T>& g = grad(id);
      const Tensor<T>& xv = val(x);
      Tensor<T>& gx = grad(x);
      for (int64_t i = 0; i < g.numel(); ++i)
        if (xv[i] > T(0)) gx[i] += g[i];
    };
    return id;
  }

  int tanh_map(int x) {
    int id = push(ops::tanh_map(val(x)), nullptr);
    nodes_.back().back = [this, id, x]() {
      const Tensor<T>&g = grad(id), &y = val(id);
      Tensor<T>& gx = grad(x);
      for (int64_t i = 0; i < g.numel(); ++i) gx[i] += g[i] * (T(1) - y[i] * y[i]);
    };
    return id;
  }

  int sigmoid(int x) {
    int id = push(ops::sigmoid(val(x)), nullptr);
    nodes_.back().back = [this, id, x]() {
      const Tensor<T>&g = grad(id), &y = val(id);
      Tensor<T>& gx = grad(x);
      for (int64_t i = 0; i < g.numel(); ++i) gx[i] += g[i] * y[i] * (T(1) - y[i]);
    };
    return id;
  }

  int matmul(int a, int b, bool ta = false, bool tb = false) {
    Tensor<T> out;
    cdckg::matmul(val(a), ta, val(b), tb, out);
    int id = push(std::move(out), nullptr);
    nodes_.back().back = [this, id, a, b, ta, tb]() {
      const Tensor<T>& g = grad(id);
      const Tensor<T>&av = val(a), &bv = val(b);
      Tensor<T>&ga = grad(a), &gb = grad(b);
      if (!ta && !tb) {
        cdckg::matmul(g, false, bv, true, ga, T(1), T(1));
        cdckg::matmul(av, true, g, false, gb, T(1), T(1));
      } else if (!ta && tb) {
        cdckg::matmul(g, false, bv, false, ga, T(1), T(1));
        cdckg::matmul(g, true, av, false, gb, T(1), T(1));
      } else if (ta && !tb) {
        cdckg::matmul(bv, false, g, true, ga, T(1), T(1));
        cdckg::matmul(av, false, g, false, gb, T(1), T(1));
      } else {
        cdckg::matmul(bv, true, g, true, ga, T(1), T(1));
        cdckg::matmul(g, true, av, true, gb, T(1), T(1));
      }
    };
    return id;
  }

  // y = x*W + b broadcast over rows; x {B,m}, W {m,n}, b {n}.
  int affine(int x, int w, int b) {
    int id = push(ops::affine(val(x), val(w), val(b)), nullptr);
    nodes_.back().back = [this, id, x, w, b]() {
      const Tensor<T>& g = grad(id);
      const Tensor<T>&xv = val(x), &wv = val(w);
      cdckg::matmul(g, false, wv, true, grad(x), T(1), T(1));
      cdckg::matmul(xv, true, g, false, grad(w), T(1), T(1));
      Tensor<T>& gb = grad(b);
      const int64_t B = g.dim(0), n = g.dim(1);
      for (int64_t i = 0; i < B; ++i) {
        const T* row = g.data.data() + i * n;
        for (int64_t j = 0; j < n; ++j) gb[j] += row[j];
      }
    };
    return id;
  }

  int softmax_rows(int x) {
    int id = push(ops::softmax_rows(val(x)), nullptr);
    nodes_.back().back = [this, id, x]() {
      const Tensor<T>&g = grad(id), &y = val(id);
      Tensor<T>& gx = grad(x);
      const int64_t r = y.dim(0), c = y.dim(1);
      for (int64_t i = 0; i < r; ++i) {
        const T* yr = y.data.data() + i * c;
        const T* gr = g.data.data() + i * c;
        T dot = T(0);
        for (int64_t j = 0; j < c; ++j) dot += gr[j] * yr[j];
        T* gxr = gx.data.data() + i * c;
        for (int64_t j = 0; j < c; ++j) gxr[j] += yr[j] * (gr[j] - dot);
      }
    };
    return id;
  }

  int transpose(int x) {
    int id = push(ops::transpose(val(x)), nullptr);
    nodes_.back().back = [this, id, x]() {
      const Tensor<T>& g = grad(id);
      Tensor<T>& gx = grad(x);
      const int64_t r = g.dim(0), c = g.dim(1);
      for (int64_t i = 0; i < r; ++i)
        for (int64_t j = 0; j < c; ++j) gx.at(j, i) += g.at(i, j);
    };
    return id;
  }

  int conv_rows(int x, int filt, int bias) {
    int id = push(ops::conv_rows(val(x), val(filt), val(bias)), nullptr);
    nodes_.back().back = [this, id, x, filt, bias]() {
      const Tensor<T>& g = grad(id);
      const Tensor<T>&xv = val(x), &fv = val(filt);
      Tensor<T>&gx = grad(x), &gf = grad(filt), &gb = grad(bias);
      const int64_t C = xv.dim(1), F = fv.dim(0), w = fv.dim(1), P = g.dim(1);
      for (int64_t f = 0; f < F; ++f) {
        const T* ft = fv.data.data() + f * w * C;
        T* gft = gf.data.data() + f * w * C;
        for (int64_t p = 0; p < P; ++p) {
          const T gp = g.at(f, p);
          if (gp == T(0)) continue;
          gb[f] += gp;
          const T* xw = xv.data.data() + p * C;
          T* gxw = gx.data.data() + p * C;
          for (int64_t i = 0; i < w * C; ++i) {
            gft[i] += gp * xw[i];
            gxw[i] += gp * ft[i];
          }
        }
      }
    };
    return id;
  }

  int max_pool_cols(int x, int64_t window) {
    std::vector<int64_t> arg;
    int id = push(ops::max_pool_cols(val(x), window, &arg), nullptr);
    nodes_.back().back = [this, id, x, arg = std::move(arg)]() {
      const Tensor<T>& g = grad(id);
      Tensor<T>& gx = grad(x);
      const int64_t r = g.dim(0), p = g.dim(1);
      for (int64_t i = 0; i < r; ++i)
        for (int64_t q = 0; q < p; ++q) gx.at(i, arg[static_cast<size_t>(i * p + q)]) += g.at(i, q);
    };
    return id;
  }

  int mean_pool_rows(int x) {
    int id = push(ops::mean_pool_rows(val(x)), nullptr);
    nodes_.back().back = [this, id, x]() {
      const Tensor<T>& g = grad(id);
      Tensor<T>& gx = grad(x);
      const int64_t r = gx.dim(0), c = gx.dim(1);
      for (int64_t i = 0; i < r; ++i) {
        const T gi = g[i] / T(c);
        for (int64_t j = 0; j < c; ++j) gx.at(i, j) += gi;
      }
    };
    return id;
  }

  // alpha*x + beta*y elementwise, matching shapes.
  int lincomb(T alpha, int x, T beta, int y) {
    const Tensor<T>&xv = val(x), &yv = val(y);
    Tensor<T> out = xv;
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = alpha * xv[i] + beta * yv[i];
    int id = push(std::move(out), nullptr);
    nodes_.back().back = [this, id, x, y, alpha, beta]() {
      const Tensor<T>& g = grad(id);
      Tensor<T>&gx = grad(x), &gy = grad(y);
      for (int64_t i = 0; i < g.numel(); ++i) {
        gx[i] += alpha * g[i];
        gy[i] += beta * g[i];
      }
    };
    return id;
  }

  // Sum of scalar nodes.
  int add_scalars(std::vector<int> xs) {
    T acc = T(0);
    for (int x : xs) acc += val(x)[0];
    int id = push(Tensor<T>({1}, {acc}), nullptr);
    nodes_.back().back = [this, id, xs = std::move(xs)]() {
      const T g = grad(id)[0];
      for (int x : xs) grad(x)[0] += g;
    };
    return id;
  }

  // Summed binary cross-entropy of scores s (any shape, flattened) against
  // per-element targets; scores clamped to [eps, 1-eps] before the logs.
  int bce_sum(int s, std::vector<T> targets, T eps = T(1e-12)) {
    const Tensor<T>& sv = val(s);
    if (static_cast<int64_t>(targets.size()) != sv.numel())
      throw std::invalid_argument("bce_sum: target count != score count");
    T loss = T(0);
    for (int64_t i = 0; i < sv.numel(); ++i) {
      const T sc = std::clamp(sv[i], eps, T(1) - eps);
      const T y = targets[static_cast<size_t>(i)];
      loss -= y * std::log(sc) + (T(1) - y) * std::log(T(1) - sc);
    }
    int id = push(Tensor<T>({1}, {loss}), nullptr);
    nodes_.back().back = [this, id, s, targets = std::move(targets), eps]() {
      const T g = grad(id)[0];
      const Tensor<T>& sv = val(s);
      Tensor<T>& gs = grad(s);
      for (int64_t i = 0; i < sv.numel(); ++i) {
        const T sc = std::clamp(sv[i], eps, T(1) - eps);
        const T y = targets[static_cast<size_t>(i)];
        gs[i] += g * (-y / sc + (T(1) - y) / (T(1) - sc));
      }
    };
    return id;
  }

  // sum_i |a_i - b_i| as a scalar node; subgradient 0 at exact zeros.
  int l1_diff_sum(int a, int b) {
    const Tensor<T>&av = val(a), &bv = val(b);
    T sum = T(0);
    for (int64_t i = 0; i < av.numel(); ++i) sum += std::abs(av[i] - bv[i]);
    int id = push(Tensor<T>({1}, {sum}), nullptr);
    nodes_.back().back = [this, id, a, b]() {
      const T g = grad(id)[0];
      const Tensor<T>&av = val(a), &bv = val(b);
      Tensor<T>&ga = grad(a), &gb = grad(b);
      for (int64_t i = 0; i < av.numel(); ++i) {
        const T d = av[i] - bv[i];
        const T sgn = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
        ga[i] += g * sgn;
        gb[i] -= g * sgn;
      }
    };
    return id;
  }

  int scale(T alpha, int x) {
    Tensor<T> out = val(x);
    for (auto& v : out.data) v *= alpha;
    int id = push(std::move(out), nullptr);
    nodes_.back().back = [this, id, x, alpha]() {
      const Tensor<T>& g = grad(id);
      Tensor<T>& gx = grad(x);
      for (int64_t i = 0; i < g.numel(); ++i) gx[i] += alpha * g[i];
    };
    return id;
  }

  // Seeds d(loss)=1 and sweeps the recorded nodes in reverse, flushing leaf
  // gradients into their sinks. The loss node must be scalar.
  void backward(int loss) {
    if (val(loss).numel() != 1) throw std::invalid_argument("backward: loss must be scalar");
    grad(loss)[0] = T(1);
    for (int i = loss; i >= 0; --i) {
      Node& n = nodes_[static_cast<size_t>(i)];
      if (n.grad_alloc && n.back) n.back();
    }
  }

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> val;
    const Tensor<T>* ext = nullptr;
    Tensor<T> grad;
    bool grad_alloc = false;
    std::function<void()> back;
  };

  int push(Tensor<T> v, const Tensor<T>* ext) {
    Node n;
    n.val = std::move(v);
    n.ext = ext;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }
  int push_ext(const Tensor<T>* v) {
    Node n;
    n.ext = v;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  ops::RunMode mode_;
  Rng* rng_;
  std::vector<Node> nodes_;
};

}  // namespace cdckg
