#include "cdckg/text_data.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace cdckg {

WordEmbeddingTable load_word_vectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open word vector file: " + path);
  WordEmbeddingTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  int64_t lineno = 0;
  int64_t d_w = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    std::vector<double> vec;
    double v;
    while (ls >> v) vec.push_back(v);
    if (d_w < 0) {
      if (vec.empty())
        throw ParseError(path + ":" + std::to_string(lineno) + ": no vector components");
      d_w = static_cast<int64_t>(vec.size());
    } else if (static_cast<int64_t>(vec.size()) != d_w) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(d_w) +
                       " components, got " + std::to_string(vec.size()));
    }
    auto it = table.token_ids.find(token);
    if (it != table.token_ids.end()) {
      rows[static_cast<size_t>(it->second)] = std::move(vec);  // last occurrence wins
      ++table.duplicates_replaced;
    } else {
      table.token_ids.emplace(token, static_cast<int32_t>(table.tokens.size()));
      table.tokens.push_back(token);
      rows.push_back(std::move(vec));
    }
  }
  if (rows.empty()) throw ParseError(path + ": no word vectors found");

  const int64_t n = static_cast<int64_t>(rows.size());
  table.vectors = Tensor<double>({n + 2, d_w});
  std::vector<double> mean(static_cast<size_t>(d_w), 0.0);
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < d_w; ++j) {
      const double v = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
      table.vectors.at(i, j) = v;
      mean[static_cast<size_t>(j)] += v;
    }
  }
  // padding row stays zero; unknown row = mean of all loaded vectors
  for (int64_t j = 0; j < d_w; ++j)
    table.vectors.at(n + 1, j) = mean[static_cast<size_t>(j)] / static_cast<double>(n);
  return table;
}

std::vector<std::string> tokenize_description(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  std::string raw;
  while (ss >> raw) {
    size_t lo = 0, hi = raw.size();
    while (lo < hi && std::ispunct(static_cast<unsigned char>(raw[lo]))) ++lo;
    while (hi > lo && std::ispunct(static_cast<unsigned char>(raw[hi - 1]))) --hi;
    if (lo >= hi) continue;
    std::string tok = raw.substr(lo, hi - lo);
    for (char& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.push_back(std::move(tok));
  }
  return out;
}

DescriptionTable load_descriptions(const std::string& path, const Vocab& vocab,
                                   const WordEmbeddingTable& words, int64_t length) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open description file: " + path);
  DescriptionTable table;
  table.length = length;
  table.tokens.resize(static_cast<size_t>(vocab.num_entities()));
  table.word_count.assign(static_cast<size_t>(vocab.num_entities()), 0);
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected entity<TAB>text");
    const std::string entity = line.substr(0, tab);
    const auto id = vocab.entity_id(entity);
    if (!id) {
      ++table.skipped_unknown_entities;
      continue;
    }
    const auto toks = tokenize_description(line.substr(tab + 1));
    std::vector<int32_t>& seq = table.tokens[static_cast<size_t>(*id)];
    seq.assign(static_cast<size_t>(length), words.pad_index());
    const int64_t n = std::min<int64_t>(length, static_cast<int64_t>(toks.size()));
    for (int64_t i = 0; i < n; ++i) seq[static_cast<size_t>(i)] = words.lookup(toks[static_cast<size_t>(i)]);
    table.word_count[static_cast<size_t>(*id)] = static_cast<int32_t>(n);
  }
  return table;
}

}  // namespace cdckg
