#pragma once

#include "cdckg/kg.hpp"
#include "cdckg/tensor.hpp"

#include <string>
#include <unordered_map>
#include <vector>

namespace cdckg {

// Token table plus one vector per token, with a zero padding row and an
// unknown row (mean of all loaded vectors) appended after the loaded tokens.
struct WordEmbeddingTable {
  std::vector<std::string> tokens;  // loaded tokens only, without pad/unk
  std::unordered_map<std::string, int32_t> token_ids;
  Tensor<double> vectors;  // (|tokens|+2) x d_w
  size_t duplicates_replaced = 0;

  int64_t dim() const { return vectors.rank() == 2 ? vectors.dim(1) : 0; }
  int64_t rows() const { return vectors.rank() == 2 ? vectors.dim(0) : 0; }
  int32_t pad_index() const { return static_cast<int32_t>(tokens.size()); }
  int32_t unk_index() const { return static_cast<int32_t>(tokens.size()) + 1; }
  int32_t lookup(const std::string& token) const {
    auto it = token_ids.find(token);
    return it == token_ids.end() ? unk_index() : it->second;
  }
};

// Fixed-length token-index sequence per entity, padded with the table's
// padding index. Entities without a description have an empty slot.
struct DescriptionTable {
  int64_t length = 200;
  std::vector<std::vector<int32_t>> tokens;  // indexed by entity id; empty = missing
  std::vector<int32_t> word_count;           // tokens before padding
  size_t skipped_unknown_entities = 0;

  bool has(EntityId e) const {
    return e >= 0 && static_cast<size_t>(e) < tokens.size() && !tokens[static_cast<size_t>(e)].empty();
  }
  const std::vector<int32_t>& get(EntityId e) const {
    if (!has(e))
      throw std::out_of_range("description table: entity " + std::to_string(e) + " has no description");
    return tokens[static_cast<size_t>(e)];
  }
  std::vector<EntityId> entities_with_descriptions() const {
    std::vector<EntityId> out;
    for (size_t e = 0; e < tokens.size(); ++e)
      if (!tokens[e].empty()) out.push_back(static_cast<EntityId>(e));
    return out;
  }
};

// GloVe text layout: token followed by d_w space-separated decimals per line.
// d_w is inferred from the first line; inconsistent lines are format errors.
// A repeated token keeps its last occurrence.
WordEmbeddingTable load_word_vectors(const std::string& path);

// `entity<TAB>free text` lines. Text is lowercased, whitespace-tokenized with
// punctuation stripped from token edges, mapped through the word table
// (unknown tokens to the unknown index) and truncated/padded to length.
DescriptionTable load_descriptions(const std::string& path, const Vocab& vocab,
                                   const WordEmbeddingTable& words, int64_t length = 200);

std::vector<std::string> tokenize_description(const std::string& text);

}  // namespace cdckg
