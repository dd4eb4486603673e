// Acceptance suite: one line per criterion, nonzero exit when any fails.
// The two desk-scale dataset criteria live in acceptance_ddi.cpp.

#include "cdckg/grad_check.hpp"
#include "cdckg/presets.hpp"
#include "cdckg/trainer.hpp"
#include "testutil.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>

using namespace cdckg;

namespace {

int failures = 0;

void report(int criterion, const char* name, bool pass, const std::string& detail) {
  std::printf("criterion %2d (%s): %s%s%s\n", criterion, name, pass ? "PASS" : "FAIL",
              detail.empty() ? "" : " — ", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
  char buf[256];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

// ---- criterion 1: gradient fidelity on toy CDC and CDC+ models -------------

void criterion_gradients() {
  const auto t0 = std::chrono::steady_clock::now();

  // toy CDC: |E|=5, |R|=2, k=6, n_k=2, d_g=4
  CdcParams<double> cdc = init_cdc_params<double>(5, 2, 6, 2, 4, 71);
  CdcGrads<double> cdc_grads = CdcGrads<double>::like(cdc);
  Batch batch;
  batch.positives = {{0, 0, 1}, {2, 1, 3}, {4, 0, 0}};
  batch.negatives = {{1, 0, 1}, {2, 1, 0}, {3, 0, 2}};
  auto cdc_loss = [&]() {
    Rng rng(4242);
    return cdc_loss_batch(batch, cdc, cdc_grads, 0.1, rng, 0.2, ops::RunMode::kTrain);
  };
  auto cdc_report = grad_check<double>(cdc_loss, collect_slots(cdc, cdc_grads));

  // toy CDC+: a=4, d_w=5, L_desc=6 on top of the same scoring-head shape
  TextEncoderConfig tc;
  tc.aspects = 4;
  tc.attn_dim = 3;
  tc.conv1_filters = 3;
  tc.conv1_width = 2;
  tc.pool_width = 2;
  tc.conv2_width = 1;
  WordEmbeddingTable words;
  {
    Rng wrng(5);
    for (int i = 0; i < 7; ++i) {
      words.tokens.push_back("w" + std::to_string(i));
      words.token_ids.emplace(words.tokens.back(), i);
    }
    words.vectors = Tensor<double>::uniform({9, 5}, -1.0, 1.0, wrng);
    for (int64_t j = 0; j < 5; ++j) words.vectors.at(7, j) = 0.0;
  }
  DescriptionTable descs;
  descs.length = 6;
  descs.tokens.resize(5);
  descs.word_count.assign(5, 6);
  {
    Rng drng(6);
    for (auto& seq : descs.tokens) {
      seq.resize(6);
      for (auto& tok : seq) tok = static_cast<int32_t>(drng() % 7);
    }
  }
  CdcParams<double> cdc2 = init_cdc_params<double>(5, 2, 6, 2, 4, 73);
  CdcGrads<double> cdc2_grads = CdcGrads<double>::like(cdc2);
  TextEncoderParams<double> txt = init_text_encoder<double>(tc, words, 2, 6, 74);
  TextEncoderGrads<double> txt_grads = TextEncoderGrads<double>::like(txt);
  auto plus_loss = [&]() {
    Rng rng(31337);
    return cdcplus_loss_batch(batch, cdc2, cdc2_grads, txt, txt_grads, descs, 0.1, 1.0, rng, 0.2,
                              ops::RunMode::kTrain);
  };
  auto slots = collect_slots(cdc2, cdc2_grads);
  auto txt_slots = collect_slots(txt, txt_grads);
  slots.insert(slots.end(), txt_slots.begin(), txt_slots.end());
  auto plus_report = grad_check<double>(plus_loss, slots);

  const double elapsed = seconds_since(t0);
  const bool pass = cdc_report.max_rel_err < 1e-4 && plus_report.max_rel_err < 1e-4 && elapsed < 10.0;
  report(1, "gradient fidelity", pass,
         fmt("max rel err cdc=%.2e (%s), cdcplus=%.2e (%s), %.1fs", cdc_report.max_rel_err,
             cdc_report.worst_param.c_str(), plus_report.max_rel_err,
             plus_report.worst_param.c_str(), elapsed));
}

// ---- criterion 2: dual-chain identity in eval mode -------------------------

void criterion_dual_identity() {
  CdcParams<double> p = init_cdc_params<double>(40, 5, 21, 4, 16, 77);
  Rng rng(1);
  double max_diff = 0;
  for (int i = 0; i < 1000; ++i) {
    Triplet x{static_cast<EntityId>(rng() % 40), static_cast<RelationId>(rng() % 5),
              static_cast<EntityId>(rng() % 40)};
    auto [s, s_sparse] = dual_forward(x, p, ops::RunMode::kEval, rng);
    max_diff = std::max(max_diff, std::abs(s - s_sparse));
  }
  report(2, "dual-chain identity", max_diff == 0.0, fmt("max |s - s_sparse| = %g", max_diff));
}

// ---- criterion 3: ranking oracle -------------------------------------------

uint64_t splitmix(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

void criterion_ranking_oracle() {
  Rng rng(2024);
  int64_t checked = 0, mismatches = 0;
  for (int kg = 0; kg < 100; ++kg) {
    const int64_t ne = 3 + static_cast<int64_t>(rng() % 18);
    const int64_t nr = 1 + static_cast<int64_t>(rng() % 3);
    TripletSet set;
    TripletIndex seen;
    const int64_t n = 1 + static_cast<int64_t>(rng() % (2 * ne));
    while (set.size() < n) {
      Triplet x{static_cast<EntityId>(rng() % ne), static_cast<RelationId>(rng() % nr),
                static_cast<EntityId>(rng() % ne)};
      if (seen.contains(x)) continue;
      seen.insert(x);
      set.triplets.push_back(x);
    }
    const uint64_t salt = rng();
    BatchScorer scorer = [salt](const std::vector<Triplet>& batch) {
      std::vector<double> out(batch.size());
      for (size_t i = 0; i < batch.size(); ++i) {
        const uint64_t key = (static_cast<uint64_t>(batch[i].h) << 40) |
                             (static_cast<uint64_t>(batch[i].r) << 24) |
                             static_cast<uint64_t>(batch[i].t);
        out[i] = static_cast<double>(splitmix(key ^ salt) % 1000) / 1000.0;
      }
      return out;
    };
    std::vector<EntityId> entities(static_cast<size_t>(ne));
    for (size_t i = 0; i < entities.size(); ++i) entities[i] = static_cast<EntityId>(i);

    for (const Triplet& x : set.triplets) {
      for (Direction dir : {Direction::kHead, Direction::kTail}) {
        // sort-based oracle
        std::vector<Triplet> pool;
        for (EntityId e : entities) {
          Triplet c = x;
          (dir == Direction::kHead ? c.h : c.t) = e;
          if (c == x || seen.contains(c)) continue;
          pool.push_back(c);
        }
        pool.push_back(x);
        std::vector<double> scores = scorer(pool);
        const double s_true = scores.back();
        std::sort(scores.begin(), scores.end(), std::greater<double>());
        const int64_t oracle =
            std::distance(scores.begin(), std::find(scores.begin(), scores.end(), s_true)) + 1;

        const RankPair got = rank_triplet(x, dir, scorer, seen, entities);
        ++checked;
        if (got.optimistic != oracle) ++mismatches;
      }
    }
  }
  report(3, "ranking oracle", mismatches == 0,
         fmt("%lld ranks compared, %lld mismatches", static_cast<long long>(checked),
             static_cast<long long>(mismatches)));
}

// ---- criterion 4: memorization ----------------------------------------------

void criterion_memorization() {
  const auto t0 = std::chrono::steady_clock::now();
  DataBundle data = testutil::random_kg_bundle(15, 3, 50, 0, 404);

  TrainConfig cfg;
  cfg.k = 36;
  cfg.n_k = 12;
  cfg.d_g = 64;
  cfg.n_b = 25;
  cfg.epochs = 500;
  cfg.lr0 = 3e-3;
  cfg.decay = 0.998;
  cfg.eval_every = 1000;  // no validation split anyway
  cfg.seed = 9;
  TrainResult<double> result = train<double>(cfg, data);

  TripletIndex filter;
  filter.insert_all(data.train);
  std::vector<EntityId> entities(15);
  for (int i = 0; i < 15; ++i) entities[static_cast<size_t>(i)] = i;
  RankingReport rep = evaluate(data.train, make_cdc_scorer(result.params), filter, entities);
  const double elapsed = seconds_since(t0);
  const bool pass = rep.head.hits1 == 1.0 && rep.tail.hits1 == 1.0 && elapsed < 120.0;
  report(4, "memorization", pass,
         fmt("hits@1 head=%.3f tail=%.3f, mr=%.2f, %.1fs", rep.head.hits1, rep.tail.hits1,
             rep.avg_mr, elapsed));
}

// ---- criterion 5: conv shape law --------------------------------------------

void criterion_conv_shape() {
  const int64_t ks[] = {3, 6, 100, 200};
  const int64_t want[] = {1, 2, 33, 66};
  bool pass = true;
  std::string detail;
  for (int i = 0; i < 4; ++i) {
    const int64_t got = ops::conv_stride3_width(ks[i]);
    pass = pass && got == want[i];
    detail += fmt("k=%lld->%lld ", static_cast<long long>(ks[i]), static_cast<long long>(got));
    // shape check through the real kernel too
    Rng rng(static_cast<uint64_t>(ks[i]));
    Tensor<double> m = Tensor<double>::uniform({2, 3, ks[i]}, -1, 1, rng);
    Tensor<double> kern = Tensor<double>::uniform({3, 3, 3}, -1, 1, rng);
    Tensor<double> bias({3});
    Tensor<double> out = ops::conv_stride3_batch(m, kern, bias);
    pass = pass && out.dim(2) == want[i];
  }
  report(5, "conv shape law", pass, detail);
}

// ---- criterion 6: attention normalization -----------------------------------

void criterion_attention_rows() {
  Rng rng(606);
  const int64_t entities = 1000, L = 40, d_w = 16, a = 6, d_a = 10;
  Tensor<double> u = Tensor<double>::uniform({d_a, d_w}, -1, 1, rng);
  Tensor<double> v = Tensor<double>::uniform({a, d_a}, -1, 1, rng);
  double worst = 0;
  for (int64_t e = 0; e < entities; ++e) {
    Tensor<double> d_e = Tensor<double>::uniform({L, d_w}, -2, 2, rng);
    auto att = structure_attention(d_e, u, v);
    for (int64_t i = 0; i < a; ++i) {
      double sum = 0;
      for (int64_t l = 0; l < L; ++l) sum += att.attention.at(i, l);
      worst = std::max(worst, std::abs(sum - 1.0));
    }
  }
  report(6, "attention row normalization", worst < 1e-9,
         fmt("max |row sum - 1| = %.2e over %lld entities", worst, static_cast<long long>(entities)));
}

// ---- criterion 8: zero-shot plumbing ----------------------------------------

void criterion_zero_shot() {
  const auto t0 = std::chrono::steady_clock::now();
  testutil::ClusterWorld world = testutil::cluster_world(8, 5, 808);

  TrainConfig cfg;
  cfg.model = ModelKind::kCdcPlus;
  cfg.k = 12;
  cfg.n_k = 4;
  cfg.d_g = 16;
  cfg.n_b = 16;
  cfg.epochs = 200;
  cfg.lr0 = 3e-3;
  cfg.decay = 0.998;
  // at this scale the summed l1 coupling dominates the cross-entropy unless
  // it is scaled down; unit weight collapses both chains onto g == 0
  cfg.lambda_l1 = 0.01;
  cfg.eval_every = 1000;
  cfg.seed = 21;
  cfg.desc_length = 6;
  cfg.text.aspects = 4;
  cfg.text.attn_dim = 6;
  cfg.text.conv1_filters = 8;
  cfg.text.conv1_width = 2;
  cfg.text.pool_width = 2;
  cfg.text.conv2_width = 1;
  TrainResult<double> result = train<double>(cfg, world.data);

  const int64_t ne = world.data.vocab.num_entities();
  const int64_t per_cluster = 5;
  int wins = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const EntityId holdout = world.holdouts[static_cast<size_t>(trial % world.holdouts.size())];
    const int cluster = world.cluster_of[static_cast<size_t>(holdout)];
    // a trained member of the same cluster as the true completion
    const EntityId partner =
        static_cast<EntityId>(cluster * per_cluster + (trial / 8) % (per_cluster - 1));
    const Triplet truth{holdout, 0, partner};
    const double s_true =
        zero_shot_score(truth, *result.text, *world.data.descriptions, result.params);

    Rng rng(9000 + static_cast<uint64_t>(trial));
    std::vector<double> corrupted;
    for (int c = 0; c < 100; ++c) {
      Triplet fake = truth;
      do {
        fake.t = static_cast<EntityId>(rng() % ne);
      } while (fake.t == partner);
      corrupted.push_back(
          zero_shot_score(fake, *result.text, *world.data.descriptions, result.params));
    }
    std::nth_element(corrupted.begin(), corrupted.begin() + 50, corrupted.end());
    const double median = corrupted[50];
    if (s_true > median) ++wins;
  }
  const double elapsed = seconds_since(t0);
  report(8, "zero-shot plumbing", wins >= 80, fmt("%d/100 trials beat the median, %.1fs", wins, elapsed));
}

// ---- criterion 10: checkpoint round trip -------------------------------------

void criterion_checkpoint_roundtrip() {
  DataBundle data = testutil::random_kg_bundle(12, 2, 40, 5, 1001);
  TrainConfig cfg;
  cfg.k = 12;
  cfg.n_k = 4;
  cfg.d_g = 16;
  cfg.n_b = 10;
  cfg.epochs = 10;
  cfg.eval_every = 5;
  cfg.seed = 31;
  TrainResult<double> result = train<double>(cfg, data);

  TripletIndex filter;
  filter.insert_all(data.train);
  filter.insert_all(data.valid);
  filter.insert_all(data.test);
  std::vector<EntityId> entities(12);
  for (int i = 0; i < 12; ++i) entities[static_cast<size_t>(i)] = i;
  RankingReport before = evaluate(data.test, make_cdc_scorer(result.best_params), filter, entities);

  const std::string path = testutil::temp_path("acceptance_ckpt");
  CheckpointData<double> ckpt =
      make_checkpoint<double>(cfg, data.vocab, {}, result.best_params, nullptr, &result.adam,
                              static_cast<uint64_t>(result.best_epoch), result.rng_state);
  save_checkpoint(path, ckpt);
  RestoredModel<double> restored = restore_model(load_checkpoint<double>(path));
  RankingReport after = evaluate(data.test, make_cdc_scorer(restored.params), filter, entities);
  std::remove(path.c_str());

  const bool pass = before.head.mr == after.head.mr && before.tail.mr == after.tail.mr &&
                    before.head.hits10 == after.head.hits10 &&
                    before.tail.hits10 == after.tail.hits10 &&
                    before.head.mr_pessimistic == after.head.mr_pessimistic;
  report(10, "checkpoint round trip", pass,
         fmt("mr %.4f/%.4f hits10 %.4f/%.4f identical=%s", before.avg_mr, after.avg_mr,
             before.avg_hits10, after.avg_hits10, pass ? "yes" : "no"));
}

}  // namespace

int main() {
  criterion_gradients();
  criterion_dual_identity();
  criterion_ranking_oracle();
  criterion_memorization();
  criterion_conv_shape();
  criterion_attention_rows();
  criterion_zero_shot();
  criterion_checkpoint_roundtrip();
  std::printf("criteria 7 and 9 (desk-scale dataset runs) are exercised by acceptance_ddi\n");
  if (failures > 0) {
    std::printf("%d criterion(s) FAILED\n", failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
