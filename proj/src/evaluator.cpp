#include "cdckg/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <unordered_set>

namespace cdckg {

std::vector<EntityId> filtered_candidates(const Triplet& x, Direction dir,
                                          const std::vector<EntityId>& candidates,
                                          const TripletIndex& filter) {
  const EntityId self = dir == Direction::kHead ? x.h : x.t;
  const std::vector<EntityId>* positives =
      dir == Direction::kHead ? filter.heads_for(x.r, x.t) : filter.tails_for(x.h, x.r);
  std::unordered_set<EntityId> excluded;
  if (positives) excluded.insert(positives->begin(), positives->end());
  excluded.erase(self);  // the evaluated positive is always retained

  std::vector<EntityId> out;
  out.reserve(candidates.size());
  for (EntityId e : candidates)
    if (!excluded.count(e)) out.push_back(e);
  // the true entity competes even when outside the candidate pool
  if (std::find(out.begin(), out.end(), self) == out.end()) out.push_back(self);
  return out;
}

RankPair rank_triplet(const Triplet& x, Direction dir, const BatchScorer& scorer,
                      const TripletIndex& filter, const std::vector<EntityId>& candidates) {
  const std::vector<EntityId> pool = filtered_candidates(x, dir, candidates, filter);
  std::vector<Triplet> corrupted;
  corrupted.reserve(pool.size() + 1);
  corrupted.push_back(x);
  for (EntityId e : pool) {
    if (e == (dir == Direction::kHead ? x.h : x.t)) continue;
    Triplet c = x;
    (dir == Direction::kHead ? c.h : c.t) = e;
    corrupted.push_back(c);
  }
  const std::vector<double> scores = scorer(corrupted);
  if (scores.size() != corrupted.size())
    throw std::runtime_error("rank_triplet: scorer returned wrong count");
  const double s_true = scores[0];
  if (!std::isfinite(s_true))
    throw std::runtime_error("rank_triplet: non-finite score for positive (" +
                             std::to_string(x.h) + "," + std::to_string(x.r) + "," +
                             std::to_string(x.t) + ")");
  int64_t greater = 0, ties = 0;
  for (size_t i = 1; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i]))
      throw std::runtime_error("rank_triplet: non-finite candidate score for triplet (" +
                               std::to_string(x.h) + "," + std::to_string(x.r) + "," +
                               std::to_string(x.t) + ")");
    if (scores[i] > s_true)
      ++greater;
    else if (scores[i] == s_true)
      ++ties;
  }
  return RankPair{1 + greater, 1 + greater + ties};
}

RankingReport evaluate(const TripletSet& testset, const BatchScorer& scorer,
                       const TripletIndex& filter, const std::vector<EntityId>& candidates,
                       int threads) {
  if (testset.triplets.empty()) throw std::invalid_argument("evaluate: empty test set");
  const size_t n = testset.triplets.size();
  std::vector<RankPair> head_ranks(n), tail_ranks(n);

  auto work = [&](size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i) {
      const Triplet& x = testset.triplets[i];
      head_ranks[i] = rank_triplet(x, Direction::kHead, scorer, filter, candidates);
      tail_ranks[i] = rank_triplet(x, Direction::kTail, scorer, filter, candidates);
    }
  };
  if (threads <= 1) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    const size_t chunk = (n + static_cast<size_t>(threads) - 1) / static_cast<size_t>(threads);
    std::exception_ptr first_error;
    std::mutex err_mu;
    for (int t = 0; t < threads; ++t) {
      const size_t lo = static_cast<size_t>(t) * chunk;
      const size_t hi = std::min(n, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back([&, lo, hi]() {
        try {
          work(lo, hi);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!first_error) first_error = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  auto reduce = [n](const std::vector<RankPair>& ranks) {
    DirectionReport r;
    r.n = static_cast<int64_t>(n);
    int64_t sum_opt = 0, sum_pess = 0, hits10 = 0, hits1 = 0;
    for (const RankPair& p : ranks) {
      sum_opt += p.optimistic;
      sum_pess += p.pessimistic;
      if (p.optimistic <= 10) ++hits10;
      if (p.optimistic <= 1) ++hits1;
    }
    r.mr = static_cast<double>(sum_opt) / static_cast<double>(n);
    r.mr_pessimistic = static_cast<double>(sum_pess) / static_cast<double>(n);
    r.hits10 = static_cast<double>(hits10) / static_cast<double>(n);
    r.hits1 = static_cast<double>(hits1) / static_cast<double>(n);
    return r;
  };

  RankingReport report;
  report.head = reduce(head_ranks);
  report.tail = reduce(tail_ranks);
  report.n = static_cast<int64_t>(n);
  report.avg_mr = 0.5 * (report.head.mr + report.tail.mr);
  report.avg_hits10 = 0.5 * (report.head.hits10 + report.tail.hits10);
  return report;
}

std::string RankingReport::to_json() const {
  auto dir = [](const DirectionReport& d) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "{\"mr\": %.6f, \"mr_pessimistic\": %.6f, \"hits10\": %.6f, \"hits1\": %.6f, "
                  "\"n\": %lld}",
                  d.mr, d.mr_pessimistic, d.hits10, d.hits1, static_cast<long long>(d.n));
    return std::string(buf);
  };
  char avg[128];
  std::snprintf(avg, sizeof(avg), "{\"mr\": %.6f, \"hits10\": %.6f}", avg_mr, avg_hits10);
  return "{\"head\": " + dir(head) + ", \"tail\": " + dir(tail) + ", \"averaged\": " + avg + "}";
}

ZeroShotSplit split_zero_shot(const TripletSet& testset, int64_t num_seen_entities) {
  ZeroShotSplit split;
  split.n_h.split_tag = split.n_t.split_tag = split.n_ht.split_tag = Split::kTest;
  for (const Triplet& x : testset.triplets) {
    const bool head_seen = x.h < num_seen_entities;
    const bool tail_seen = x.t < num_seen_entities;
    if (head_seen && tail_seen)
      ++split.excluded_seen_both;
    else if (!head_seen && !tail_seen)
      split.n_ht.triplets.push_back(x);
    else if (!head_seen)
      split.n_h.triplets.push_back(x);
    else
      split.n_t.triplets.push_back(x);
  }
  return split;
}

double weighted_total(const std::vector<double>& hits, const std::vector<int64_t>& sizes) {
  if (hits.size() != sizes.size() || hits.empty())
    throw std::invalid_argument("weighted_total: mismatched or empty inputs");
  double num = 0, den = 0;
  for (size_t i = 0; i < hits.size(); ++i) {
    num += hits[i] * static_cast<double>(sizes[i]);
    den += static_cast<double>(sizes[i]);
  }
  if (den == 0) throw std::invalid_argument("weighted_total: zero total size");
  return num / den;
}

}  // namespace cdckg
