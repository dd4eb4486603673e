#pragma once

#include "cdckg/tensor.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace cdckg {

using EntityId = int32_t;
using RelationId = int32_t;

struct Triplet {
  EntityId h = 0;
  RelationId r = 0;
  EntityId t = 0;
  bool operator==(const Triplet&) const = default;
};

// Dense bidirectional name<->index maps for entities and relations.
// Indices are assigned in first-seen order and never change.
class Vocab {
 public:
  EntityId add_entity(const std::string& name);
  RelationId add_relation(const std::string& name);
  std::optional<EntityId> entity_id(const std::string& name) const;
  std::optional<RelationId> relation_id(const std::string& name) const;
  const std::string& entity_name(EntityId i) const { return entity_names_.at(static_cast<size_t>(i)); }
  const std::string& relation_name(RelationId i) const { return relation_names_.at(static_cast<size_t>(i)); }
  int64_t num_entities() const { return static_cast<int64_t>(entity_names_.size()); }
  int64_t num_relations() const { return static_cast<int64_t>(relation_names_.size()); }
  const std::vector<std::string>& entity_names() const { return entity_names_; }
  const std::vector<std::string>& relation_names() const { return relation_names_; }

 private:
  std::vector<std::string> entity_names_, relation_names_;
  std::unordered_map<std::string, EntityId> entity_ids_;
  std::unordered_map<std::string, RelationId> relation_ids_;
};

enum class Split { kTrain, kValid, kTest };

struct TripletSet {
  std::vector<Triplet> triplets;
  Split split_tag = Split::kTrain;
  size_t duplicates_dropped = 0;  // dedup warning count from loading

  int64_t size() const { return static_cast<int64_t>(triplets.size()); }
};

// Membership set over (h,r,t) plus per-(r,t) head lists and per-(h,r) tail
// lists. Immutable after construction in practice; safe for concurrent reads.
class TripletIndex {
 public:
  void insert(const Triplet& x);
  void insert_all(const TripletSet& s);
  bool contains(const Triplet& x) const;
  int64_t size() const { return static_cast<int64_t>(members_.size()); }
  // Known positive heads for (r,t) / tails for (h,r); nullptr when none.
  const std::vector<EntityId>* heads_for(RelationId r, EntityId t) const;
  const std::vector<EntityId>* tails_for(EntityId h, RelationId r) const;

 private:
  static uint64_t key3(const Triplet& x);
  static uint64_t key2(int64_t a, int64_t b);
  std::unordered_set<uint64_t> members_;
  std::unordered_map<uint64_t, std::vector<EntityId>> heads_by_rt_, tails_by_hr_;
};

// Per-relation replace-head probabilities, computed on the training split:
// tph = #triplets(r)/#distinct heads(r), hpt = #triplets(r)/#distinct tails(r),
// p_replace_head = tph/(tph+hpt).
struct BernStats {
  struct RelationStats {
    double tph = 0, hpt = 0, p_replace_head = 0;
    bool present = false;
  };
  std::vector<RelationStats> by_relation;

  const RelationStats& get(RelationId r) const {
    if (r < 0 || static_cast<size_t>(r) >= by_relation.size() || !by_relation[static_cast<size_t>(r)].present)
      throw std::out_of_range("bern_stats: relation " + std::to_string(r) + " absent from training split");
    return by_relation[static_cast<size_t>(r)];
  }
};

struct Batch {
  std::vector<Triplet> positives;
  std::vector<Triplet> negatives;  // aligned by position with positives
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SamplingExhaustedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reads UTF-8 `head<TAB>relation<TAB>tail` lines, registering names in vocab
// in first-seen order. Duplicated triplets are dropped and counted.
TripletSet load_triplets(const std::string& path, Vocab& vocab, Split split);

BernStats bern_stats(const TripletSet& train, int64_t num_relations);

// Corrupts head or tail (never both) with the Bernoulli side choice, drawing
// the replacement uniformly from all entities and rejecting corruptions that
// are known positives. Throws SamplingExhaustedError after 1000 rejections.
Triplet sample_negative(const Triplet& pos, const BernStats& stats, const Vocab& vocab,
                        const TripletIndex& known, Rng& rng);

// n_b positives drawn uniformly without replacement, one aligned negative each.
Batch make_batch(const TripletSet& train, int64_t n_b, const BernStats& stats, const Vocab& vocab,
                 const TripletIndex& known, Rng& rng);

}  // namespace cdckg
