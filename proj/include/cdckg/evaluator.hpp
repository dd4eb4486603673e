#pragma once

#include "cdckg/kg.hpp"

#include <functional>
#include <string>
#include <vector>

namespace cdckg {

enum class Direction { kHead, kTail };

// Scores a batch of triplets under a frozen model; must be pure and
// thread-safe so evaluation can fan out over test triplets.
using BatchScorer = std::function<std::vector<double>(const std::vector<Triplet>&)>;

struct DirectionReport {
  double mr = 0;               // optimistic mean rank (strict-greater counting)
  double mr_pessimistic = 0;   // ties counted against the positive
  double hits10 = 0;
  double hits1 = 0;
  int64_t n = 0;
};

struct RankingReport {
  DirectionReport head, tail;
  double avg_mr = 0, avg_hits10 = 0;
  int64_t n = 0;
  std::string to_json() const;
};

struct RankPair {
  int64_t optimistic = 0;   // 1 + #strictly greater
  int64_t pessimistic = 0;  // optimistic + #ties (excluding the positive itself)
};

// Candidate replacement entities for one direction: every candidate whose
// corrupted triplet is not a known positive, with the true entity always kept.
std::vector<EntityId> filtered_candidates(const Triplet& x, Direction dir,
                                          const std::vector<EntityId>& candidates,
                                          const TripletIndex& filter);

RankPair rank_triplet(const Triplet& x, Direction dir, const BatchScorer& scorer,
                      const TripletIndex& filter, const std::vector<EntityId>& candidates);

// Ranks every test triplet in both directions. candidates is the replacement
// pool (normally all entities). threads > 1 splits the test set; the report is
// identical for any worker count.
RankingReport evaluate(const TripletSet& testset, const BatchScorer& scorer,
                       const TripletIndex& filter, const std::vector<EntityId>& candidates,
                       int threads = 1);

struct ZeroShotSplit {
  TripletSet n_h;   // head unseen, tail seen
  TripletSet n_t;   // tail unseen, head seen
  TripletSet n_ht;  // both unseen
  size_t excluded_seen_both = 0;

  int64_t total() const { return n_h.size() + n_t.size() + n_ht.size(); }
};

// Seen entities are those with id < num_seen_entities (ids above that were
// appended to the vocabulary after training). Triplets with both entities seen
// are excluded with a warning count.
ZeroShotSplit split_zero_shot(const TripletSet& testset, int64_t num_seen_entities);

// Size-weighted aggregate of per-split Hits@10 values.
double weighted_total(const std::vector<double>& hits, const std::vector<int64_t>& sizes);

}  // namespace cdckg
