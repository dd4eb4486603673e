#pragma once

#include "cdckg/cdc_model.hpp"
#include "cdckg/checkpoint.hpp"
#include "cdckg/evaluator.hpp"
#include "cdckg/optimizer.hpp"
#include "cdckg/text_encoder.hpp"

#include <algorithm>
#include <optional>
#include <sstream>

namespace cdckg {

struct TrainConfig {
  ModelKind model = ModelKind::kCdc;
  int64_t k = 200, n_k = 64, d_g = 256;
  int64_t n_b = 300;
  int64_t epochs = 1000;
  double lr0 = 3e-3;
  double decay = 0.998;
  double label_smoothing = 0.0;
  double lambda_l1 = 1.0;
  double dropout = 0.2;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  bool norm_projection = true;
  uint64_t seed = 42;
  int64_t eval_every = 50;
  int64_t desc_length = 200;
  TextEncoderConfig text;

  void validate() const {
    if (lr0 <= 0) throw std::invalid_argument("config: lr0 must be positive");
    if (decay <= 0 || decay > 1) throw std::invalid_argument("config: decay must be in (0,1]");
    if (epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
    if (n_b < 1) throw std::invalid_argument("config: batch size must be >= 1");
    if (k < 3) throw std::invalid_argument("config: k must be >= 3");
    if (dropout < 0 || dropout >= 1) throw std::invalid_argument("config: dropout must be in [0,1)");
    if (label_smoothing < 0 || label_smoothing >= 0.5)
      throw std::invalid_argument("config: label smoothing must be in [0,0.5)");
    if (eval_every < 1) throw std::invalid_argument("config: eval_every must be >= 1");
  }

  std::string to_json() const;
  static TrainConfig from_json(const std::string& json);
};

struct DataBundle {
  Vocab vocab;
  TripletSet train, valid, test;
  std::optional<WordEmbeddingTable> words;
  std::optional<DescriptionTable> descriptions;
};

struct EpochRecord {
  int64_t epoch = 0;  // 1-based
  double lr = 0;
  double mean_loss = 0;
  std::optional<double> val_mr, val_hits10;
};

class TrainAbortError : public std::runtime_error {
 public:
  TrainAbortError(int64_t epoch, int64_t batch)
      : std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch)),
        epoch(epoch),
        batch(batch) {}
  int64_t epoch, batch;
};

template <typename T>
struct TrainResult {
  CdcParams<T> params;
  std::optional<TextEncoderParams<T>> text;
  AdamState<T> adam;
  std::vector<EpochRecord> history;
  // deep copy of the state at the best validation Hits@10 (falls back to final)
  CdcParams<T> best_params;
  std::optional<TextEncoderParams<T>> best_text;
  double best_val_hits10 = -1;
  int64_t best_epoch = 0;
  std::string rng_state;
};

template <typename T>
std::vector<ParamSlot<T>> collect_slots(CdcParams<T>& p, CdcGrads<T>& g) {
  return {
      {"entity_emb", &p.entity_emb, &g.entity_emb},
      {"relation_emb", &p.relation_emb, &g.relation_emb},
      {"kernels", &p.kernels, &g.kernels},
      {"conv_bias", &p.conv_bias, &g.conv_bias},
      {"w_f", &p.w_f, &g.w_f},
      {"b_f", &p.b_f, &g.b_f},
      {"w_l", &p.w_l, &g.w_l},
      {"b_l", &p.b_l, &g.b_l},
  };
}

template <typename T>
std::vector<ParamSlot<T>> collect_slots(TextEncoderParams<T>& p, TextEncoderGrads<T>& g) {
  return {
      {"word_emb", &p.word_emb, &g.word_emb},
      {"attn_u", &p.attn_u, &g.attn_u},
      {"attn_v", &p.attn_v, &g.attn_v},
      {"conv1", &p.conv1, &g.conv1},
      {"conv1_bias", &p.conv1_bias, &g.conv1_bias},
      {"conv2", &p.conv2, &g.conv2},
      {"conv2_bias", &p.conv2_bias, &g.conv2_bias},
      {"relation_txt_emb", &p.relation_txt_emb, &g.relation_txt_emb},
  };
}

// Unit-ball projection of the entity and relation tables (textual relation
// table included for the description model). Word embeddings are left alone.
template <typename T>
void project_embeddings(CdcParams<T>& p, TextEncoderParams<T>* txt = nullptr) {
  project_rows_to_unit_ball(p.entity_emb);
  project_rows_to_unit_ball(p.relation_emb);
  if (txt && !txt->cfg.tie_relation_embeddings) project_rows_to_unit_ball(txt->relation_txt_emb);
}

template <typename T>
BatchScorer make_cdc_scorer(const CdcParams<T>& p) {
  return [&p](const std::vector<Triplet>& batch) { return score_batch(p, batch); };
}

// Mean of structural and textual chain scores with textual embeddings frozen
// and precomputed for every description-bearing entity.
template <typename T>
class CdcPlusScorer {
 public:
  CdcPlusScorer(const CdcParams<T>& cdc, const TextEncoderParams<T>& txt,
                const DescriptionTable& descs)
      : cdc_(cdc), txt_(txt) {
    std::vector<EntityId> have = descs.entities_with_descriptions();
    v_d_ = encode_entities(have, txt, descs);
    for (size_t i = 0; i < have.size(); ++i) row_of_[have[i]] = static_cast<int64_t>(i);
  }

  std::vector<double> operator()(const std::vector<Triplet>& batch) const {
    std::vector<double> s_str = score_batch(cdc_, batch);
    for (size_t i = 0; i < batch.size(); ++i) {
      const double s_txt = zero_shot_score_cached(batch[i], v_d_, row_of_, txt_, cdc_);
      s_str[i] = 0.5 * (s_str[i] + s_txt);
    }
    return s_str;
  }

 private:
  const CdcParams<T>& cdc_;
  const TextEncoderParams<T>& txt_;
  Tensor<T> v_d_;
  std::unordered_map<EntityId, int64_t> row_of_;
};

// Textual chain only; handles entities outside the structural tables.
template <typename T>
class ZeroShotScorer {
 public:
  ZeroShotScorer(const CdcParams<T>& cdc, const TextEncoderParams<T>& txt,
                 const DescriptionTable& descs)
      : cdc_(cdc), txt_(txt) {
    std::vector<EntityId> have = descs.entities_with_descriptions();
    v_d_ = encode_entities(have, txt, descs);
    for (size_t i = 0; i < have.size(); ++i) row_of_[have[i]] = static_cast<int64_t>(i);
  }

  std::vector<double> operator()(const std::vector<Triplet>& batch) const {
    std::vector<double> out(batch.size());
    for (size_t i = 0; i < batch.size(); ++i)
      out[i] = zero_shot_score_cached(batch[i], v_d_, row_of_, txt_, cdc_);
    return out;
  }

 private:
  const CdcParams<T>& cdc_;
  const TextEncoderParams<T>& txt_;
  Tensor<T> v_d_;
  std::unordered_map<EntityId, int64_t> row_of_;
};

inline std::string rng_state_string(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

inline Rng rng_from_state(const std::string& state) {
  Rng rng;
  if (!state.empty()) {
    std::istringstream is(state);
    is >> rng;
  }
  return rng;
}

// Epoch loop: shuffle the training split, slice batches of n_b with fresh
// negatives, take an optimizer step, project embeddings. Every eval_every
// epochs the validation split is ranked and the best-Hits@10 state retained.
template <typename T>
TrainResult<T> train(const TrainConfig& cfg, const DataBundle& data,
                     const std::function<void(const EpochRecord&)>& on_epoch = nullptr,
                     int eval_threads = 1) {
  cfg.validate();
  if (data.train.triplets.empty()) throw std::invalid_argument("train: empty training split");
  if (cfg.n_b > data.train.size())
    throw std::invalid_argument("train: batch size exceeds training set");
  const bool plus = cfg.model == ModelKind::kCdcPlus;
  if (plus && (!data.words || !data.descriptions))
    throw std::invalid_argument("train: description model needs word vectors and descriptions");
  if (plus) {
    for (const Triplet& x : data.train.triplets)
      if (!data.descriptions->has(x.h) || !data.descriptions->has(x.t))
        throw std::invalid_argument("train: training entity without description (entity " +
                                    std::to_string(data.descriptions->has(x.h) ? x.t : x.h) + ")");
  }

  TrainResult<T> result;
  result.params = init_cdc_params<T>(data.vocab.num_entities(), data.vocab.num_relations(), cfg.k,
                                     cfg.n_k, cfg.d_g, cfg.seed);
  CdcGrads<T> grads = CdcGrads<T>::like(result.params);
  TextEncoderGrads<T> txt_grads;
  if (plus) {
    result.text = init_text_encoder<T>(cfg.text, *data.words, data.vocab.num_relations(), cfg.k,
                                       cfg.seed + 1);
    txt_grads = TextEncoderGrads<T>::like(*result.text);
  }

  std::vector<ParamSlot<T>> slots = collect_slots(result.params, grads);
  if (plus) {
    auto txt_slots = collect_slots(*result.text, txt_grads);
    slots.insert(slots.end(), txt_slots.begin(), txt_slots.end());
  }

  TripletIndex known;
  known.insert_all(data.train);
  const BernStats stats = bern_stats(data.train, data.vocab.num_relations());

  TripletIndex val_filter;
  val_filter.insert_all(data.train);
  val_filter.insert_all(data.valid);
  std::vector<EntityId> all_entities(static_cast<size_t>(data.vocab.num_entities()));
  for (size_t i = 0; i < all_entities.size(); ++i) all_entities[i] = static_cast<EntityId>(i);

  Rng rng(cfg.seed + 2);
  std::vector<int64_t> order(static_cast<size_t>(data.train.size()));
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int64_t>(i);

  if (cfg.norm_projection) project_embeddings(result.params, plus ? &*result.text : nullptr);

  for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, cfg.lr0, cfg.decay);
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0;
    int64_t batches = 0;
    for (int64_t lo = 0; lo < data.train.size(); lo += cfg.n_b) {
      const int64_t hi = std::min<int64_t>(data.train.size(), lo + cfg.n_b);
      Batch batch;
      batch.positives.reserve(static_cast<size_t>(hi - lo));
      batch.negatives.reserve(static_cast<size_t>(hi - lo));
      for (int64_t i = lo; i < hi; ++i) {
        const Triplet& pos = data.train.triplets[static_cast<size_t>(order[static_cast<size_t>(i)])];
        batch.positives.push_back(pos);
        batch.negatives.push_back(sample_negative(pos, stats, data.vocab, known, rng));
      }

      T loss;
      if (plus)
        loss = cdcplus_loss_batch(batch, result.params, grads, *result.text, txt_grads,
                                  *data.descriptions, cfg.label_smoothing, cfg.lambda_l1, rng,
                                  cfg.dropout);
      else
        loss = cdc_loss_batch(batch, result.params, grads, cfg.label_smoothing, rng, cfg.dropout);
      if (!std::isfinite(static_cast<double>(loss))) throw TrainAbortError(epoch + 1, batches);

      if (cfg.optimizer == OptimizerKind::kAdam)
        adam_step(slots, result.adam, lr);
      else
        sgd_step(slots, lr);
      if (cfg.norm_projection) project_embeddings(result.params, plus ? &*result.text : nullptr);

      loss_sum += static_cast<double>(loss);
      ++batches;
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.lr = lr;
    rec.mean_loss = loss_sum / static_cast<double>(batches);

    const bool do_eval = !data.valid.triplets.empty() &&
                         ((epoch + 1) % cfg.eval_every == 0 || epoch + 1 == cfg.epochs);
    if (do_eval) {
      RankingReport report;
      if (plus) {
        CdcPlusScorer<T> scorer(result.params, *result.text, *data.descriptions);
        report = evaluate(data.valid, std::cref(scorer), val_filter, all_entities, eval_threads);
      } else {
        report = evaluate(data.valid, make_cdc_scorer(result.params), val_filter, all_entities,
                          eval_threads);
      }
      rec.val_mr = report.avg_mr;
      rec.val_hits10 = report.avg_hits10;
      if (report.avg_hits10 > result.best_val_hits10) {
        result.best_val_hits10 = report.avg_hits10;
        result.best_epoch = epoch + 1;
        result.best_params = result.params;
        if (plus) result.best_text = result.text;
      }
    }

    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }

  if (result.best_val_hits10 < 0) {  // no validation ran; final state is best
    result.best_params = result.params;
    if (plus) result.best_text = result.text;
    result.best_epoch = cfg.epochs;
  }
  result.rng_state = rng_state_string(rng);
  return result;
}

// --- checkpoint glue ---

template <typename T>
CheckpointData<T> make_checkpoint(const TrainConfig& cfg, const Vocab& vocab,
                                  const std::vector<std::string>& word_tokens, CdcParams<T>& params,
                                  TextEncoderParams<T>* txt, const AdamState<T>* adam,
                                  uint64_t epoch, const std::string& rng_state) {
  CheckpointData<T> ckpt;
  ckpt.model = cfg.model;
  ckpt.optimizer = cfg.optimizer;
  ckpt.epoch = epoch;
  ckpt.config_json = cfg.to_json();
  ckpt.rng_state = rng_state;
  ckpt.entity_names = vocab.entity_names();
  ckpt.relation_names = vocab.relation_names();
  ckpt.word_tokens = word_tokens;
  params.for_each([&](const char* name, Tensor<T>& t) { ckpt.tensors.emplace(name, t); });
  if (txt)
    txt->for_each([&](const char* name, Tensor<T>& t) { ckpt.tensors.emplace(name, t); });
  if (adam) {
    ckpt.adam_step = static_cast<uint64_t>(adam->step);
    for (const auto& [name, t] : adam->m) ckpt.tensors.emplace("adam_m." + name, t);
    for (const auto& [name, t] : adam->v) ckpt.tensors.emplace("adam_v." + name, t);
  }
  return ckpt;
}

template <typename T>
struct RestoredModel {
  TrainConfig config;
  Vocab vocab;
  std::vector<std::string> word_tokens;
  CdcParams<T> params;
  std::optional<TextEncoderParams<T>> text;
  AdamState<T> adam;
  uint64_t epoch = 0;
  std::string rng_state;
};

template <typename T>
RestoredModel<T> restore_model(const CheckpointData<T>& ckpt) {
  RestoredModel<T> out;
  out.config = TrainConfig::from_json(ckpt.config_json);
  for (const auto& name : ckpt.entity_names) out.vocab.add_entity(name);
  for (const auto& name : ckpt.relation_names) out.vocab.add_relation(name);
  out.word_tokens = ckpt.word_tokens;
  out.epoch = ckpt.epoch;
  out.rng_state = ckpt.rng_state;

  auto want = [&](const std::string& name) -> const Tensor<T>& {
    auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end()) throw CheckpointError("checkpoint: missing tensor " + name);
    return it->second;
  };
  out.params.num_entities = out.vocab.num_entities();
  out.params.num_relations = out.vocab.num_relations();
  out.params.k = out.config.k;
  out.params.n_k = out.config.n_k;
  out.params.d_g = out.config.d_g;
  out.params.for_each([&](const char* name, Tensor<T>& t) { t = want(name); });
  if (ckpt.model == ModelKind::kCdcPlus) {
    TextEncoderParams<T> txt;
    txt.cfg = out.config.text;
    txt.k = out.config.k;
    txt.num_relations = out.vocab.num_relations();
    txt.for_each([&](const char* name, Tensor<T>& t) { t = want(name); });
    txt.d_w = txt.word_emb.dim(1);
    out.text = std::move(txt);
  }
  out.adam.step = static_cast<int64_t>(ckpt.adam_step);
  for (const auto& [name, t] : ckpt.tensors) {
    if (name.rfind("adam_m.", 0) == 0) out.adam.m.emplace(name.substr(7), t);
    if (name.rfind("adam_v.", 0) == 0) out.adam.v.emplace(name.substr(7), t);
  }
  return out;
}

}  // namespace cdckg
