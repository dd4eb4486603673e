#pragma once

#include "cdckg/cdc_model.hpp"
#include "cdckg/text_data.hpp"

#include <unordered_map>

namespace cdckg {

struct TextEncoderConfig {
  int64_t aspects = 20;       // a: semantic aspects (attention rows)
  int64_t attn_dim = 64;      // d_a
  int64_t conv1_filters = 100;  // n_1
  int64_t conv1_width = 2;    // w_1: rows of L_e per window
  int64_t pool_width = 2;     // m_p: max-pool window over positions
  int64_t conv2_width = 1;    // w_2
  bool tie_relation_embeddings = false;  // reuse structural v_r for the textual chain
};

// Description side of the model: trainable word table, the two attention
// matrices, the two conv layers and the textual relation table. The scoring
// head itself lives in CdcParams and is shared with the structural chain.
template <typename T>
struct TextEncoderParams {
  TextEncoderConfig cfg;
  int64_t d_w = 0, k = 0, num_relations = 0;

  Tensor<T> word_emb;          // |W| x d_w (includes pad + unk rows)
  Tensor<T> attn_u;            // d_a x d_w
  Tensor<T> attn_v;            // a x d_a
  Tensor<T> conv1;             // n_1 x w_1 x d_w
  Tensor<T> conv1_bias;        // n_1
  Tensor<T> conv2;             // k x w_2 x n_1
  Tensor<T> conv2_bias;        // k
  Tensor<T> relation_txt_emb;  // |R| x k

  template <typename Fn>
  void for_each(Fn&& fn) {
    fn("word_emb", word_emb);
    fn("attn_u", attn_u);
    fn("attn_v", attn_v);
    fn("conv1", conv1);
    fn("conv1_bias", conv1_bias);
    fn("conv2", conv2);
    fn("conv2_bias", conv2_bias);
    fn("relation_txt_emb", relation_txt_emb);
  }
};

template <typename T>
struct TextEncoderGrads {
  Tensor<T> word_emb, attn_u, attn_v, conv1, conv1_bias, conv2, conv2_bias, relation_txt_emb;

  static TextEncoderGrads like(const TextEncoderParams<T>& p) {
    TextEncoderGrads g;
    g.word_emb = Tensor<T>(p.word_emb.shape);
    g.attn_u = Tensor<T>(p.attn_u.shape);
    g.attn_v = Tensor<T>(p.attn_v.shape);
    g.conv1 = Tensor<T>(p.conv1.shape);
    g.conv1_bias = Tensor<T>(p.conv1_bias.shape);
    g.conv2 = Tensor<T>(p.conv2.shape);
    g.conv2_bias = Tensor<T>(p.conv2_bias.shape);
    g.relation_txt_emb = Tensor<T>(p.relation_txt_emb.shape);
    return g;
  }
  void zero() {
    word_emb.fill(T(0));
    attn_u.fill(T(0));
    attn_v.fill(T(0));
    conv1.fill(T(0));
    conv1_bias.fill(T(0));
    conv2.fill(T(0));
    conv2_bias.fill(T(0));
    relation_txt_emb.fill(T(0));
  }
};

// Pipeline widths: conv1 needs a >= w_1 rows, conv2 needs enough pooled
// positions. Checked once at model build.
inline void validate_text_encoder_shapes(const TextEncoderConfig& c) {
  if (c.aspects < c.conv1_width)
    throw std::invalid_argument("text encoder: aspects smaller than conv1 window");
  const int64_t p1 = c.aspects - c.conv1_width + 1;
  const int64_t p1p = ops::pooled_width(p1, c.pool_width);
  if (p1p < c.conv2_width)
    throw std::invalid_argument("text encoder: pooled width smaller than conv2 window");
}

template <typename T>
TextEncoderParams<T> init_text_encoder(const TextEncoderConfig& cfg, const WordEmbeddingTable& words,
                                       int64_t num_relations, int64_t k, uint64_t seed) {
  validate_text_encoder_shapes(cfg);
  TextEncoderParams<T> p;
  p.cfg = cfg;
  p.d_w = words.dim();
  p.k = k;
  p.num_relations = num_relations;
  Rng rng(seed);
  auto uni = [&rng](std::vector<int64_t> shape, double bound) {
    return Tensor<T>::uniform(std::move(shape), static_cast<T>(-bound), static_cast<T>(bound), rng);
  };
  p.word_emb = words.vectors.template cast<T>();
  p.attn_u = uni({cfg.attn_dim, p.d_w}, glorot_bound(cfg.attn_dim, p.d_w));
  p.attn_v = uni({cfg.aspects, cfg.attn_dim}, glorot_bound(cfg.aspects, cfg.attn_dim));
  p.conv1 = uni({cfg.conv1_filters, cfg.conv1_width, p.d_w},
                glorot_bound(cfg.conv1_width * p.d_w, cfg.conv1_filters));
  p.conv1_bias = uni({cfg.conv1_filters}, kBiasInitBound);
  p.conv2 = uni({k, cfg.conv2_width, cfg.conv1_filters},
                glorot_bound(cfg.conv2_width * cfg.conv1_filters, k));
  p.conv2_bias = uni({k}, kBiasInitBound);
  p.relation_txt_emb = uni({num_relations, k}, glorot_bound(num_relations, k));
  return p;
}

template <typename T>
struct AttendedDescription {
  Tensor<T> attention;  // a x L_desc, rows sum to 1
  Tensor<T> attended;   // a x d_w
};

// A_e = softmax_rows(V tanh(U D^T)); L_e = A_e D.
template <typename T>
AttendedDescription<T> structure_attention(const Tensor<T>& d_e, const Tensor<T>& u,
                                           const Tensor<T>& v) {
  Tensor<T> ut;
  matmul(u, false, d_e, true, ut);  // d_a x L
  ut = ops::tanh_map(ut);
  Tensor<T> logits;
  matmul(v, false, ut, false, logits);  // a x L
  AttendedDescription<T> out;
  out.attention = ops::softmax_rows(logits);
  matmul(out.attention, false, d_e, false, out.attended);  // a x d_w
  return out;
}

// conv over aspect rows -> ReLU -> max pool -> conv over positions -> ReLU ->
// mean pool; v_d in R^k.
template <typename T>
Tensor<T> encode_description(const AttendedDescription<T>& att, const TextEncoderParams<T>& p) {
  Tensor<T> z1 = ops::relu(ops::conv_rows(att.attended, p.conv1, p.conv1_bias));  // n_1 x p1
  Tensor<T> z1p = ops::max_pool_cols(z1, p.cfg.pool_width);                       // n_1 x p1'
  Tensor<T> z2 = ops::relu(ops::conv_rows(ops::transpose(z1p), p.conv2, p.conv2_bias));  // k x p2
  return ops::mean_pool_rows(z2);                                                // k
}

// Eager v_d for one entity: gathers word rows, runs attention + the CNN.
template <typename T>
Tensor<T> encode_entity(EntityId e, const TextEncoderParams<T>& p, const DescriptionTable& descs) {
  const std::vector<int32_t>& toks = descs.get(e);
  const int64_t L = static_cast<int64_t>(toks.size());
  Tensor<T> d_e({L, p.d_w});
  for (int64_t i = 0; i < L; ++i)
    std::copy_n(p.word_emb.data.data() + static_cast<int64_t>(toks[static_cast<size_t>(i)]) * p.d_w,
                p.d_w, d_e.data.data() + i * p.d_w);
  return encode_description(structure_attention(d_e, p.attn_u, p.attn_v), p);
}

// v_d rows for a set of entities; row i corresponds to entities[i].
template <typename T>
Tensor<T> encode_entities(const std::vector<EntityId>& entities, const TextEncoderParams<T>& p,
                          const DescriptionTable& descs) {
  Tensor<T> out({static_cast<int64_t>(entities.size()), p.k});
  for (size_t i = 0; i < entities.size(); ++i) {
    Tensor<T> v = encode_entity(entities[i], p, descs);
    std::copy_n(v.data.data(), p.k, out.data.data() + static_cast<int64_t>(i) * p.k);
  }
  return out;
}

// --- taped encoder (training path) ---

template <typename T>
struct TextNodes {
  int attn_u, attn_v, conv1, conv1_bias, conv2, conv2_bias;
};

template <typename T>
TextNodes<T> text_param_nodes(Tape<T>& tp, const TextEncoderParams<T>& p, TextEncoderGrads<T>* g) {
  TextNodes<T> n;
  n.attn_u = tp.param(&p.attn_u, g ? &g->attn_u : nullptr);
  n.attn_v = tp.param(&p.attn_v, g ? &g->attn_v : nullptr);
  n.conv1 = tp.param(&p.conv1, g ? &g->conv1 : nullptr);
  n.conv1_bias = tp.param(&p.conv1_bias, g ? &g->conv1_bias : nullptr);
  n.conv2 = tp.param(&p.conv2, g ? &g->conv2 : nullptr);
  n.conv2_bias = tp.param(&p.conv2_bias, g ? &g->conv2_bias : nullptr);
  return n;
}

// {1,k} node with gradient flow into word table and encoder parameters.
template <typename T>
int encode_entity_on_tape(Tape<T>& tp, EntityId e, const TextEncoderParams<T>& p,
                          TextEncoderGrads<T>* g, const TextNodes<T>& n,
                          const DescriptionTable& descs) {
  const std::vector<int32_t>& toks = descs.get(e);
  std::vector<int64_t> ids(toks.begin(), toks.end());
  int d = tp.lookup_rows(&p.word_emb, g ? &g->word_emb : nullptr, std::move(ids));  // L x d_w
  int logits = tp.matmul(n.attn_v, tp.tanh_map(tp.matmul(n.attn_u, d, false, true)));
  int att = tp.softmax_rows(logits);
  int l_e = tp.matmul(att, d);  // a x d_w
  int z1 = tp.relu(tp.conv_rows(l_e, n.conv1, n.conv1_bias));
  int z1p = tp.max_pool_cols(z1, p.cfg.pool_width);
  int z2 = tp.relu(tp.conv_rows(tp.transpose(z1p), n.conv2, n.conv2_bias));
  return tp.reshape(tp.mean_pool_rows(z2), {1, p.k});
}

// Per-entity encodings are shared within one tape so a batch reuses them.
template <typename T>
class EntityEncodingCache {
 public:
  EntityEncodingCache(Tape<T>& tp, const TextEncoderParams<T>& p, TextEncoderGrads<T>* g,
                      const DescriptionTable& descs)
      : tp_(tp), p_(p), g_(g), nodes_(text_param_nodes(tp, p, g)), descs_(descs) {}

  int get(EntityId e) {
    auto it = cache_.find(e);
    if (it != cache_.end()) return it->second;
    int node = encode_entity_on_tape(tp_, e, p_, g_, nodes_, descs_);
    cache_.emplace(e, node);
    return node;
  }

 private:
  Tape<T>& tp_;
  const TextEncoderParams<T>& p_;
  TextEncoderGrads<T>* g_;
  TextNodes<T> nodes_;
  const DescriptionTable& descs_;
  std::unordered_map<EntityId, int> cache_;
};

template <typename T>
struct CdcPlusScores {
  T s = 0, s_str = 0, s_txt = 0;
  Tensor<T> g_str, g_txt;  // pre-dropout triplet representations
};

// One triplet through both chains: the structural CDC primary pipeline and the
// textual chain over [v_h^d; v_r^d; v_t^d] with the same scoring head.
// s = 0.5*(s_str + s_txt).
template <typename T>
struct CdcPlusNodes {
  int s, s_str, s_txt, g_str, g_txt;
};

template <typename T>
CdcPlusNodes<T> cdcplus_forward_on_tape(Tape<T>& tp, const Triplet& x, const CdcParams<T>& cdc,
                                        CdcGrads<T>* cdc_grads, const TextEncoderParams<T>& txt,
                                        TextEncoderGrads<T>* txt_grads,
                                        EntityEncodingCache<T>& enc, const HeadNodes<T>& head,
                                        double dropout_rate) {
  const ChainConfig cfg{0.0, dropout_rate, dropout_rate, tp.mode()};

  int vh = tp.lookup_rows(&cdc.entity_emb, cdc_grads ? &cdc_grads->entity_emb : nullptr, {x.h});
  int vr = tp.lookup_rows(&cdc.relation_emb, cdc_grads ? &cdc_grads->relation_emb : nullptr, {x.r});
  int vt = tp.lookup_rows(&cdc.entity_emb, cdc_grads ? &cdc_grads->entity_emb : nullptr, {x.t});
  CdcPlusNodes<T> out;
  int s_str = chain_forward_on_tape(tp, tp.stack3(vh, vr, vt), head, cfg, &out.g_str);

  int vh_d = enc.get(x.h);
  int vt_d = enc.get(x.t);
  int vr_d = txt.cfg.tie_relation_embeddings
                 ? tp.lookup_rows(&cdc.relation_emb, cdc_grads ? &cdc_grads->relation_emb : nullptr,
                                  {x.r})
                 : tp.lookup_rows(&txt.relation_txt_emb,
                                  txt_grads ? &txt_grads->relation_txt_emb : nullptr, {x.r});
  int s_txt = chain_forward_on_tape(tp, tp.stack3(vh_d, vr_d, vt_d), head, cfg, &out.g_txt);

  out.s = tp.lincomb(T(0.5), s_str, T(0.5), s_txt);
  out.s_str = s_str;
  out.s_txt = s_txt;
  return out;
}

// Eval-mode forward returning plain values.
template <typename T>
CdcPlusScores<T> cdcplus_forward(const Triplet& x, const CdcParams<T>& cdc,
                                 const TextEncoderParams<T>& txt, const DescriptionTable& descs,
                                 ops::RunMode mode, Rng& rng, double dropout_rate = 0.2) {
  Tape<T> tp(mode, &rng);
  HeadNodes<T> head = head_param_nodes<T>(tp, cdc, nullptr);
  EntityEncodingCache<T> enc(tp, txt, nullptr, descs);
  CdcPlusNodes<T> nodes =
      cdcplus_forward_on_tape<T>(tp, x, cdc, nullptr, txt, nullptr, enc, head, dropout_rate);
  CdcPlusScores<T> out;
  out.s = tp.val(nodes.s)[0];
  out.s_str = tp.val(nodes.s_str)[0];
  out.s_txt = tp.val(nodes.s_txt)[0];
  out.g_str = tp.val(nodes.g_str).reshaped({cdc.d_g});
  out.g_txt = tp.val(nodes.g_txt).reshaped({cdc.d_g});
  return out;
}

// Cross-entropy on the combined score over positives and negatives plus the
// lambda-weighted l1 coupling between the two triplet representations,
// gradients populated for the full parameter set.
template <typename T>
T cdcplus_loss_batch(const Batch& batch, const CdcParams<T>& cdc, CdcGrads<T>& cdc_grads,
                     const TextEncoderParams<T>& txt, TextEncoderGrads<T>& txt_grads,
                     const DescriptionTable& descs, double eps, double lambda_l1, Rng& rng,
                     double dropout_rate = 0.2, ops::RunMode mode = ops::RunMode::kTrain) {
  if (batch.positives.size() != batch.negatives.size())
    throw std::invalid_argument("cdcplus_loss: positives and negatives must align");
  const int64_t n_b = static_cast<int64_t>(batch.positives.size());
  cdc_grads.zero();
  txt_grads.zero();

  Tape<T> tp(mode, &rng);
  HeadNodes<T> head = head_param_nodes<T>(tp, cdc, &cdc_grads);
  EntityEncodingCache<T> enc(tp, txt, &txt_grads, descs);

  std::vector<T> y = smoothed_targets<T>(n_b, n_b, eps);
  std::vector<int> terms;
  auto add_triplet = [&](const Triplet& x, T target) {
    CdcPlusNodes<T> nodes =
        cdcplus_forward_on_tape<T>(tp, x, cdc, &cdc_grads, txt, &txt_grads, enc, head, dropout_rate);
    terms.push_back(tp.bce_sum(nodes.s, {target}));
    if (lambda_l1 != 0.0)
      terms.push_back(tp.scale(static_cast<T>(lambda_l1), tp.l1_diff_sum(nodes.g_txt, nodes.g_str)));
  };
  for (int64_t i = 0; i < n_b; ++i)
    add_triplet(batch.positives[static_cast<size_t>(i)], y[static_cast<size_t>(i)]);
  for (int64_t i = 0; i < n_b; ++i)
    add_triplet(batch.negatives[static_cast<size_t>(i)], y[static_cast<size_t>(n_b + i)]);

  int loss = tp.add_scalars(std::move(terms));
  tp.backward(loss);
  return tp.val(loss)[0];
}

// Textual-chain-only score; entities may be absent from the structural tables
// as long as they carry descriptions. The relation must be one seen in
// training (it indexes the textual relation table).
template <typename T>
double zero_shot_score(const Triplet& x, const TextEncoderParams<T>& txt,
                       const DescriptionTable& descs, const CdcParams<T>& cdc) {
  if (x.r < 0 || x.r >= txt.num_relations)
    throw std::out_of_range("zero_shot_score: unsupported relation " + std::to_string(x.r));
  Tensor<T> vh = encode_entity(x.h, txt, descs);
  Tensor<T> vt = encode_entity(x.t, txt, descs);
  Tensor<T> m({1, 3, cdc.k});
  std::copy_n(vh.data.data(), cdc.k, m.data.data());
  const Tensor<T>& rel_table = txt.cfg.tie_relation_embeddings ? cdc.relation_emb : txt.relation_txt_emb;
  std::copy_n(rel_table.data.data() + static_cast<int64_t>(x.r) * cdc.k, cdc.k,
              m.data.data() + cdc.k);
  std::copy_n(vt.data.data(), cdc.k, m.data.data() + 2 * cdc.k);
  Tensor<T> f = ops::conv_relu_flat(m, cdc.kernels, cdc.conv_bias);
  Tensor<T> g = ops::affine_relu(f, cdc.w_f, cdc.b_f);
  Tensor<T> s = ops::sigmoid(ops::affine(g, cdc.w_l, cdc.b_l));
  return static_cast<double>(s[0]);
}

// Precomputed textual embeddings make repeated zero-shot scoring cheap: the
// head alone runs per candidate.
template <typename T>
double zero_shot_score_cached(const Triplet& x, const Tensor<T>& v_d_rows,
                              const std::unordered_map<EntityId, int64_t>& row_of,
                              const TextEncoderParams<T>& txt, const CdcParams<T>& cdc) {
  Tensor<T> m({1, 3, cdc.k});
  std::copy_n(v_d_rows.data.data() + row_of.at(x.h) * cdc.k, cdc.k, m.data.data());
  const Tensor<T>& rel_table = txt.cfg.tie_relation_embeddings ? cdc.relation_emb : txt.relation_txt_emb;
  std::copy_n(rel_table.data.data() + static_cast<int64_t>(x.r) * cdc.k, cdc.k,
              m.data.data() + cdc.k);
  std::copy_n(v_d_rows.data.data() + row_of.at(x.t) * cdc.k, cdc.k, m.data.data() + 2 * cdc.k);
  Tensor<T> f = ops::conv_relu_flat(m, cdc.kernels, cdc.conv_bias);
  Tensor<T> g = ops::affine_relu(f, cdc.w_f, cdc.b_f);
  Tensor<T> s = ops::sigmoid(ops::affine(g, cdc.w_l, cdc.b_l));
  return static_cast<double>(s[0]);
}

}  // namespace cdckg
