#include "cdckg/kg.hpp"

#include <algorithm>
#include <fstream>

namespace cdckg {

EntityId Vocab::add_entity(const std::string& name) {
  auto it = entity_ids_.find(name);
  if (it != entity_ids_.end()) return it->second;
  const EntityId id = static_cast<EntityId>(entity_names_.size());
  entity_names_.push_back(name);
  entity_ids_.emplace(name, id);
  return id;
}

RelationId Vocab::add_relation(const std::string& name) {
  auto it = relation_ids_.find(name);
  if (it != relation_ids_.end()) return it->second;
  const RelationId id = static_cast<RelationId>(relation_names_.size());
  relation_names_.push_back(name);
  relation_ids_.emplace(name, id);
  return id;
}

std::optional<EntityId> Vocab::entity_id(const std::string& name) const {
  auto it = entity_ids_.find(name);
  if (it == entity_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<RelationId> Vocab::relation_id(const std::string& name) const {
  auto it = relation_ids_.find(name);
  if (it == relation_ids_.end()) return std::nullopt;
  return it->second;
}

uint64_t TripletIndex::key3(const Triplet& x) {
  // 24/16/24-bit packing; plenty for the datasets this handles.
  if (x.h < 0 || x.t < 0 || x.h >= (1 << 24) || x.t >= (1 << 24) || x.r < 0 || x.r >= (1 << 16))
    throw std::out_of_range("triplet index: id out of packing range");
  return (static_cast<uint64_t>(x.h) << 40) | (static_cast<uint64_t>(x.r) << 24) |
         static_cast<uint64_t>(x.t);
}

uint64_t TripletIndex::key2(int64_t a, int64_t b) {
  return (static_cast<uint64_t>(a) << 32) | static_cast<uint64_t>(b);
}

void TripletIndex::insert(const Triplet& x) {
  if (!members_.insert(key3(x)).second) return;
  heads_by_rt_[key2(x.r, x.t)].push_back(x.h);
  tails_by_hr_[key2(x.h, x.r)].push_back(x.t);
}

void TripletIndex::insert_all(const TripletSet& s) {
  for (const Triplet& x : s.triplets) insert(x);
}

bool TripletIndex::contains(const Triplet& x) const { return members_.count(key3(x)) != 0; }

const std::vector<EntityId>* TripletIndex::heads_for(RelationId r, EntityId t) const {
  auto it = heads_by_rt_.find(key2(r, t));
  return it == heads_by_rt_.end() ? nullptr : &it->second;
}

const std::vector<EntityId>* TripletIndex::tails_for(EntityId h, RelationId r) const {
  auto it = tails_by_hr_.find(key2(h, r));
  return it == tails_by_hr_.end() ? nullptr : &it->second;
}

TripletSet load_triplets(const std::string& path, Vocab& vocab, Split split) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open triplet file: " + path);
  TripletSet set;
  set.split_tag = split;
  std::unordered_set<uint64_t> seen;
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t tab1 = line.find('\t');
    const size_t tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos || tab2 == std::string::npos ||
        line.find('\t', tab2 + 1) != std::string::npos)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected 3 tab-separated fields");
    const std::string head = line.substr(0, tab1);
    const std::string rel = line.substr(tab1 + 1, tab2 - tab1 - 1);
    const std::string tail = line.substr(tab2 + 1);
    if (head.empty() || rel.empty() || tail.empty())
      throw ParseError(path + ":" + std::to_string(lineno) + ": empty field");
    Triplet x;
    x.h = vocab.add_entity(head);
    x.r = vocab.add_relation(rel);
    x.t = vocab.add_entity(tail);
    const uint64_t key = (static_cast<uint64_t>(x.h) << 40) | (static_cast<uint64_t>(x.r) << 24) |
                         static_cast<uint64_t>(x.t);
    if (!seen.insert(key).second) {
      ++set.duplicates_dropped;
      continue;
    }
    set.triplets.push_back(x);
  }
  return set;
}

BernStats bern_stats(const TripletSet& train, int64_t num_relations) {
  if (train.triplets.empty()) throw std::invalid_argument("bern_stats: empty training split");
  BernStats stats;
  stats.by_relation.resize(static_cast<size_t>(num_relations));
  std::vector<int64_t> count(static_cast<size_t>(num_relations), 0);
  std::vector<std::unordered_set<EntityId>> heads(static_cast<size_t>(num_relations));
  std::vector<std::unordered_set<EntityId>> tails(static_cast<size_t>(num_relations));
  for (const Triplet& x : train.triplets) {
    const auto r = static_cast<size_t>(x.r);
    ++count[r];
    heads[r].insert(x.h);
    tails[r].insert(x.t);
  }
  for (size_t r = 0; r < static_cast<size_t>(num_relations); ++r) {
    if (count[r] == 0) continue;
    auto& s = stats.by_relation[r];
    s.tph = static_cast<double>(count[r]) / static_cast<double>(heads[r].size());
    s.hpt = static_cast<double>(count[r]) / static_cast<double>(tails[r].size());
    s.p_replace_head = s.tph / (s.tph + s.hpt);
    s.present = true;
  }
  return stats;
}

Triplet sample_negative(const Triplet& pos, const BernStats& stats, const Vocab& vocab,
                        const TripletIndex& known, Rng& rng) {
  const double p_head = stats.get(pos.r).p_replace_head;
  const int64_t ne = vocab.num_entities();
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int64_t> pick(0, ne - 1);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Triplet cand = pos;
    if (u01(rng) < p_head)
      cand.h = static_cast<EntityId>(pick(rng));
    else
      cand.t = static_cast<EntityId>(pick(rng));
    if (!known.contains(cand)) return cand;
  }
  throw SamplingExhaustedError("sample_negative: 1000 consecutive rejections for relation " +
                               std::to_string(pos.r));
}

Batch make_batch(const TripletSet& train, int64_t n_b, const BernStats& stats, const Vocab& vocab,
                 const TripletIndex& known, Rng& rng) {
  if (n_b > train.size())
    throw std::invalid_argument("make_batch: n_b exceeds training set size");
  std::vector<int64_t> idx(static_cast<size_t>(train.size()));
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int64_t>(i);
  // partial Fisher-Yates: first n_b entries are a uniform sample w/o replacement
  for (int64_t i = 0; i < n_b; ++i) {
    std::uniform_int_distribution<int64_t> pick(i, train.size() - 1);
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(pick(rng))]);
  }
  Batch batch;
  batch.positives.reserve(static_cast<size_t>(n_b));
  batch.negatives.reserve(static_cast<size_t>(n_b));
  for (int64_t i = 0; i < n_b; ++i) {
    const Triplet& pos = train.triplets[static_cast<size_t>(idx[static_cast<size_t>(i)])];
    batch.positives.push_back(pos);
    batch.negatives.push_back(sample_negative(pos, stats, vocab, known, rng));
  }
  return batch;
}

}  // namespace cdckg
