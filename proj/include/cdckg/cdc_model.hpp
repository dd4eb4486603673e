#pragma once

#include "cdckg/kg.hpp"
#include "cdckg/ops.hpp"
#include "cdckg/tape.hpp"

#include <functional>
#include <string>
#include <vector>

namespace cdckg {

// All learnable tensors of the dual-chain model. Embedding rows are kept
// inside the unit l2 ball by the trainer's projection step.
template <typename T>
struct CdcParams {
  int64_t num_entities = 0, num_relations = 0;
  int64_t k = 0, n_k = 0, d_g = 0;

  Tensor<T> entity_emb;    // |E| x k
  Tensor<T> relation_emb;  // |R| x k
  Tensor<T> kernels;       // n_k x 3 x 3
  Tensor<T> conv_bias;     // n_k
  Tensor<T> w_f;           // (n_k*w) x d_g
  Tensor<T> b_f;           // d_g
  Tensor<T> w_l;           // d_g x 1
  Tensor<T> b_l;           // 1

  int64_t conv_width() const { return ops::conv_stride3_width(k); }

  template <typename Fn>
  void for_each(Fn&& fn) {
    fn("entity_emb", entity_emb);
    fn("relation_emb", relation_emb);
    fn("kernels", kernels);
    fn("conv_bias", conv_bias);
    fn("w_f", w_f);
    fn("b_f", b_f);
    fn("w_l", w_l);
    fn("b_l", b_l);
  }
};

// Gradient storage mirroring CdcParams.
template <typename T>
struct CdcGrads {
  Tensor<T> entity_emb, relation_emb, kernels, conv_bias, w_f, b_f, w_l, b_l;

  static CdcGrads like(const CdcParams<T>& p) {
    CdcGrads g;
    g.entity_emb = Tensor<T>(p.entity_emb.shape);
    g.relation_emb = Tensor<T>(p.relation_emb.shape);
    g.kernels = Tensor<T>(p.kernels.shape);
    g.conv_bias = Tensor<T>(p.conv_bias.shape);
    g.w_f = Tensor<T>(p.w_f.shape);
    g.b_f = Tensor<T>(p.b_f.shape);
    g.w_l = Tensor<T>(p.w_l.shape);
    g.b_l = Tensor<T>(p.b_l.shape);
    return g;
  }
  void zero() {
    entity_emb.fill(T(0));
    relation_emb.fill(T(0));
    kernels.fill(T(0));
    conv_bias.fill(T(0));
    w_f.fill(T(0));
    b_f.fill(T(0));
    w_l.fill(T(0));
    b_l.fill(T(0));
  }
};

inline double glorot_bound(int64_t n_in, int64_t n_out) {
  return std::sqrt(6.0 / static_cast<double>(n_in + n_out));
}

inline constexpr double kBiasInitBound = 0.05;

// Uniform Glorot init over +-sqrt(6/(n_in+n_out)) per matrix; each 3x3 kernel
// is treated as its own 3x3 matrix. Biases draw from a small symmetric range
// so no pre-activation starts exactly on the ReLU kink.
template <typename T>
CdcParams<T> init_cdc_params(int64_t num_entities, int64_t num_relations, int64_t k, int64_t n_k,
                             int64_t d_g, uint64_t seed) {
  if (k < 3) throw std::invalid_argument("init_cdc_params: k must be >= 3");
  if (num_entities < 1 || num_relations < 1 || n_k < 1 || d_g < 1)
    throw std::invalid_argument("init_cdc_params: extents must be positive");
  CdcParams<T> p;
  p.num_entities = num_entities;
  p.num_relations = num_relations;
  p.k = k;
  p.n_k = n_k;
  p.d_g = d_g;
  Rng rng(seed);
  auto uni = [&rng](std::vector<int64_t> shape, double bound) {
    return Tensor<T>::uniform(std::move(shape), static_cast<T>(-bound), static_cast<T>(bound), rng);
  };
  const int64_t w = ops::conv_stride3_width(k);
  p.entity_emb = uni({num_entities, k}, glorot_bound(num_entities, k));
  p.relation_emb = uni({num_relations, k}, glorot_bound(num_relations, k));
  p.kernels = uni({n_k, 3, 3}, glorot_bound(3, 3));
  p.conv_bias = uni({n_k}, kBiasInitBound);
  p.w_f = uni({n_k * w, d_g}, glorot_bound(n_k * w, d_g));
  p.b_f = uni({d_g}, kBiasInitBound);
  p.w_l = uni({d_g, 1}, glorot_bound(d_g, 1));
  p.b_l = uni({1}, kBiasInitBound);
  return p;
}

// 3xk matrix [v_h; v_r; v_t] read fresh from the current tables.
template <typename T>
Tensor<T> stack_triplet(const Triplet& x, const CdcParams<T>& p) {
  Tensor<T> m({3, p.k});
  std::copy_n(p.entity_emb.data.data() + static_cast<int64_t>(x.h) * p.k, p.k, m.data.data());
  std::copy_n(p.relation_emb.data.data() + static_cast<int64_t>(x.r) * p.k, p.k, m.data.data() + p.k);
  std::copy_n(p.entity_emb.data.data() + static_cast<int64_t>(x.t) * p.k, p.k, m.data.data() + 2 * p.k);
  return m;
}

// Dropout rates of one chain. Eval mode runs every rate at 0.
struct ChainConfig {
  double p_input = 0.0;  // on the stacked triplet matrix
  double p_flat = 0.0;   // on the flattened feature maps
  double p_g = 0.0;      // on the triplet representation g
  ops::RunMode mode = ops::RunMode::kEval;
};

inline ChainConfig primary_chain(ops::RunMode mode, double p = 0.2) {
  return ChainConfig{0.0, p, p, mode};
}
inline ChainConfig secondary_chain(ops::RunMode mode, double p = 0.2) {
  return ChainConfig{p, p, 0.0, mode};
}

// Scoring-head parameter nodes on a tape; created once and shared by every
// chain recorded on that tape, so gradients from all chains accumulate.
template <typename T>
struct HeadNodes {
  int kernels, conv_bias, w_f, b_f, w_l, b_l;
  int64_t n_k, w, d_g;
};

template <typename T>
HeadNodes<T> head_param_nodes(Tape<T>& tp, const CdcParams<T>& p, CdcGrads<T>* g) {
  HeadNodes<T> h;
  h.kernels = tp.param(&p.kernels, g ? &g->kernels : nullptr);
  h.conv_bias = tp.param(&p.conv_bias, g ? &g->conv_bias : nullptr);
  h.w_f = tp.param(&p.w_f, g ? &g->w_f : nullptr);
  h.b_f = tp.param(&p.b_f, g ? &g->b_f : nullptr);
  h.w_l = tp.param(&p.w_l, g ? &g->w_l : nullptr);
  h.b_l = tp.param(&p.b_l, g ? &g->b_l : nullptr);
  h.n_k = p.n_k;
  h.w = p.conv_width();
  h.d_g = p.d_g;
  return h;
}

// The shared pipeline: dropout -> stride-3 conv -> ReLU -> flatten -> dropout
// -> fully connected -> ReLU -> g -> dropout -> logistic score.
// m is a {B,3,k} node; returns the {B,1} score node and (optionally) the
// pre-dropout g node via *g_out. The flattened feature vector is ordered
// position-major (f[j*n_k + c]) so the conv GEMM output is already flat.
template <typename T>
int chain_forward_on_tape(Tape<T>& tp, int m, const HeadNodes<T>& head, const ChainConfig& cfg,
                          int* g_out = nullptr) {
  int x = tp.dropout(m, cfg.p_input);
  int f = tp.conv_relu_flat(x, head.kernels, head.conv_bias);  // {B, w*n_k}
  f = tp.dropout(f, cfg.p_flat);
  int g = tp.affine_relu(f, head.w_f, head.b_f);
  if (g_out) *g_out = g;
  int gd = tp.dropout(g, cfg.p_g);
  return tp.sigmoid(tp.affine(gd, head.w_l, head.b_l));
}

// Spec-level single-triplet chain forward: returns (g, s).
template <typename T>
std::pair<Tensor<T>, T> chain_forward(const Tensor<T>& m3k, const CdcParams<T>& p,
                                      const ChainConfig& cfg, Rng& rng) {
  Tape<T> tp(cfg.mode, &rng);
  HeadNodes<T> head = head_param_nodes<T>(tp, p, nullptr);
  int mn = tp.constant(m3k.reshaped({1, 3, p.k}));
  int g = -1;
  int s = chain_forward_on_tape(tp, mn, head, cfg, &g);
  Tensor<T> gv = tp.val(g).reshaped({p.d_g});
  return {std::move(gv), tp.val(s)[0]};
}

// Both chains over one triplet with shared parameters; (s, s_sparse).
template <typename T>
std::pair<T, T> dual_forward(const Triplet& x, const CdcParams<T>& p, ops::RunMode mode, Rng& rng,
                             double dropout_rate = 0.2) {
  Tape<T> tp(mode, &rng);
  HeadNodes<T> head = head_param_nodes<T>(tp, p, nullptr);
  int mn = tp.constant(stack_triplet(x, p).reshaped({1, 3, p.k}));
  int s_primary = chain_forward_on_tape(tp, mn, head, primary_chain(mode, dropout_rate));
  int s_secondary = chain_forward_on_tape(tp, mn, head, secondary_chain(mode, dropout_rate));
  return {tp.val(s_primary)[0], tp.val(s_secondary)[0]};
}

// Eval-mode primary-chain scores for a batch of triplets (tape-free fast path;
// same kernels as the tape ops, so it matches chain_forward exactly).
template <typename T>
std::vector<double> score_batch(const CdcParams<T>& p, const std::vector<Triplet>& triplets) {
  const int64_t B = static_cast<int64_t>(triplets.size());
  Tensor<T> m({B, 3, p.k});
  for (int64_t b = 0; b < B; ++b) {
    const Triplet& x = triplets[static_cast<size_t>(b)];
    std::copy_n(p.entity_emb.data.data() + static_cast<int64_t>(x.h) * p.k, p.k,
                m.data.data() + (b * 3 + 0) * p.k);
    std::copy_n(p.relation_emb.data.data() + static_cast<int64_t>(x.r) * p.k, p.k,
                m.data.data() + (b * 3 + 1) * p.k);
    std::copy_n(p.entity_emb.data.data() + static_cast<int64_t>(x.t) * p.k, p.k,
                m.data.data() + (b * 3 + 2) * p.k);
  }
  Tensor<T> f = ops::conv_relu_flat(m, p.kernels, p.conv_bias);
  Tensor<T> g = ops::affine_relu(f, p.w_f, p.b_f);
  Tensor<T> s = ops::sigmoid(ops::affine(g, p.w_l, p.b_l));
  std::vector<double> out(static_cast<size_t>(B));
  for (int64_t b = 0; b < B; ++b) out[static_cast<size_t>(b)] = static_cast<double>(s[b]);
  return out;
}

template <typename T>
double score(const Triplet& x, const CdcParams<T>& p) {
  return score_batch(p, {x})[0];
}

// Binary labels smoothed as y' = y(1-eps) + eps/2.
template <typename T>
std::vector<T> smoothed_targets(int64_t n_pos, int64_t n_neg, double eps) {
  if (eps < 0.0 || eps >= 0.5) throw std::invalid_argument("label smoothing must be in [0, 0.5)");
  std::vector<T> y(static_cast<size_t>(n_pos + n_neg));
  const T y_pos = static_cast<T>(1.0 - eps / 2.0);
  const T y_neg = static_cast<T>(eps / 2.0);
  for (int64_t i = 0; i < n_pos; ++i) y[static_cast<size_t>(i)] = y_pos;
  for (int64_t i = 0; i < n_neg; ++i) y[static_cast<size_t>(n_pos + i)] = y_neg;
  return y;
}

// Summed cross-entropy of both chains over the batch (positives then
// negatives), gradients accumulated into *grads for every parameter tensor.
template <typename T>
T cdc_loss_batch(const Batch& batch, const CdcParams<T>& p, CdcGrads<T>& grads, double eps,
                 Rng& rng, double dropout_rate = 0.2, ops::RunMode mode = ops::RunMode::kTrain) {
  if (batch.positives.size() != batch.negatives.size())
    throw std::invalid_argument("loss_batch: positives and negatives must align");
  const int64_t n_b = static_cast<int64_t>(batch.positives.size());
  grads.zero();

  Tape<T> tp(mode, &rng);
  std::vector<int64_t> h_ids, r_ids, t_ids;
  h_ids.reserve(static_cast<size_t>(2 * n_b));
  r_ids.reserve(static_cast<size_t>(2 * n_b));
  t_ids.reserve(static_cast<size_t>(2 * n_b));
  auto push_ids = [&](const std::vector<Triplet>& v) {
    for (const Triplet& x : v) {
      h_ids.push_back(x.h);
      r_ids.push_back(x.r);
      t_ids.push_back(x.t);
    }
  };
  push_ids(batch.positives);
  push_ids(batch.negatives);

  int vh = tp.lookup_rows(&p.entity_emb, &grads.entity_emb, h_ids);
  int vr = tp.lookup_rows(&p.relation_emb, &grads.relation_emb, r_ids);
  int vt = tp.lookup_rows(&p.entity_emb, &grads.entity_emb, t_ids);
  int m = tp.stack3(vh, vr, vt);

  HeadNodes<T> head = head_param_nodes<T>(tp, p, &grads);
  int s_primary = chain_forward_on_tape(tp, m, head, primary_chain(mode, dropout_rate));
  int s_secondary = chain_forward_on_tape(tp, m, head, secondary_chain(mode, dropout_rate));

  std::vector<T> y = smoothed_targets<T>(n_b, n_b, eps);
  int loss = tp.add_scalars({tp.bce_sum(s_primary, y), tp.bce_sum(s_secondary, y)});
  tp.backward(loss);
  return tp.val(loss)[0];
}

}  // namespace cdckg
