// Command-line entry points: train, eval, predict, export-embeddings.
// Exit codes: 0 success, 2 invalid config/data/arguments, 3 non-finite loss.

#include "cdckg/presets.hpp"
#include "cdckg/trainer.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

extern "C" void openblas_set_num_threads(int);

namespace {
// multi-megabyte tensors churn every training step; keeping them on the heap
// instead of per-allocation mmaps roughly halves the step time
void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}
}  // namespace

namespace cdckg {
namespace {

namespace fs = std::filesystem;

constexpr const char* kDataRootEnv = "CDCKG_DATA_ROOT";

std::string resolve_path(const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute() || fs::exists(path)) return path;
  if (const char* root = std::getenv(kDataRootEnv)) {
    fs::path joined = fs::path(root) / path;
    if (fs::exists(joined)) return joined.string();
  }
  return path;
}

struct PathOptions {
  std::string train, valid, test, descriptions, word_vectors;
  std::string checkpoint_out = "model.ckpt";
  std::string history_out;
};

// Flat `key = value` text file; '#' starts a comment.
std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const char* ws = " \t\r";
    const size_t a = s.find_first_not_of(ws);
    if (a == std::string::npos) return std::string();
    const size_t b = s.find_last_not_of(ws);
    return s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

int64_t to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int64_t n = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return n;
  } catch (...) {
    throw std::invalid_argument("config key '" + key + "': not an integer: " + v);
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return d;
  } catch (...) {
    throw std::invalid_argument("config key '" + key + "': not a number: " + v);
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw std::invalid_argument("config key '" + key + "': not a boolean: " + v);
}

void apply_config_entry(TrainConfig& cfg, PathOptions& paths, const std::string& key,
                        const std::string& v) {
  if (key == "model") {
    if (v == "cdc")
      cfg.model = ModelKind::kCdc;
    else if (v == "cdcplus")
      cfg.model = ModelKind::kCdcPlus;
    else
      throw std::invalid_argument("config key 'model': expected cdc or cdcplus, got " + v);
  } else if (key == "k")
    cfg.k = to_int(key, v);
  else if (key == "n_k")
    cfg.n_k = to_int(key, v);
  else if (key == "d_g")
    cfg.d_g = to_int(key, v);
  else if (key == "n_b" || key == "batch_size")
    cfg.n_b = to_int(key, v);
  else if (key == "epochs")
    cfg.epochs = to_int(key, v);
  else if (key == "lr0")
    cfg.lr0 = to_double(key, v);
  else if (key == "decay")
    cfg.decay = to_double(key, v);
  else if (key == "label_smoothing")
    cfg.label_smoothing = to_double(key, v);
  else if (key == "lambda_l1")
    cfg.lambda_l1 = to_double(key, v);
  else if (key == "dropout")
    cfg.dropout = to_double(key, v);
  else if (key == "optimizer") {
    if (v == "adam")
      cfg.optimizer = OptimizerKind::kAdam;
    else if (v == "sgd")
      cfg.optimizer = OptimizerKind::kSgd;
    else
      throw std::invalid_argument("config key 'optimizer': expected adam or sgd, got " + v);
  } else if (key == "norm_projection")
    cfg.norm_projection = to_bool(key, v);
  else if (key == "seed")
    cfg.seed = static_cast<uint64_t>(to_int(key, v));
  else if (key == "eval_every")
    cfg.eval_every = to_int(key, v);
  else if (key == "desc_length")
    cfg.desc_length = to_int(key, v);
  else if (key == "attn_aspects")
    cfg.text.aspects = to_int(key, v);
  else if (key == "attn_dim")
    cfg.text.attn_dim = to_int(key, v);
  else if (key == "conv1_filters")
    cfg.text.conv1_filters = to_int(key, v);
  else if (key == "conv1_width")
    cfg.text.conv1_width = to_int(key, v);
  else if (key == "pool_width")
    cfg.text.pool_width = to_int(key, v);
  else if (key == "conv2_width")
    cfg.text.conv2_width = to_int(key, v);
  else if (key == "tie_relation_txt")
    cfg.text.tie_relation_embeddings = to_bool(key, v);
  else if (key == "train")
    paths.train = v;
  else if (key == "valid")
    paths.valid = v;
  else if (key == "test")
    paths.test = v;
  else if (key == "descriptions")
    paths.descriptions = v;
  else if (key == "word_vectors")
    paths.word_vectors = v;
  else if (key == "checkpoint_out")
    paths.checkpoint_out = v;
  else if (key == "history_out")
    paths.history_out = v;
  else
    throw std::invalid_argument("config: unknown key '" + key + "'");
}

DataBundle load_bundle(const TrainConfig& cfg, const PathOptions& paths) {
  DataBundle data;
  if (paths.train.empty()) throw std::invalid_argument("no training triplet file given");
  data.train = load_triplets(resolve_path(paths.train), data.vocab, Split::kTrain);
  if (data.train.duplicates_dropped > 0)
    std::cerr << "warning: dropped " << data.train.duplicates_dropped
              << " duplicate training triplets\n";
  if (!paths.valid.empty()) data.valid = load_triplets(resolve_path(paths.valid), data.vocab, Split::kValid);
  if (!paths.test.empty()) data.test = load_triplets(resolve_path(paths.test), data.vocab, Split::kTest);
  if (cfg.model == ModelKind::kCdcPlus) {
    if (paths.word_vectors.empty() || paths.descriptions.empty())
      throw std::invalid_argument("model cdcplus requires word_vectors and descriptions paths");
    data.words = load_word_vectors(resolve_path(paths.word_vectors));
    data.descriptions =
        load_descriptions(resolve_path(paths.descriptions), data.vocab, *data.words, cfg.desc_length);
    if (data.descriptions->skipped_unknown_entities > 0)
      std::cerr << "warning: " << data.descriptions->skipped_unknown_entities
                << " description lines named entities outside the vocabulary\n";
  }
  return data;
}

template <typename T>
int run_train_typed(const TrainConfig& cfg, const PathOptions& paths, int threads) {
  DataBundle data = load_bundle(cfg, paths);

  std::ofstream history;
  const std::string history_path =
      paths.history_out.empty() ? paths.checkpoint_out + ".history.jsonl" : paths.history_out;
  history.open(history_path, std::ios::trunc);
  if (!history) throw std::invalid_argument("cannot write history file: " + history_path);

  auto on_epoch = [&history](const EpochRecord& rec) {
    history << "{\"epoch\": " << rec.epoch << ", \"lr\": " << rec.lr
            << ", \"mean_loss\": " << rec.mean_loss;
    if (rec.val_mr) history << ", \"val_mr\": " << *rec.val_mr;
    if (rec.val_hits10) history << ", \"val_hits10\": " << *rec.val_hits10;
    history << "}\n";
    history.flush();
  };

  TrainResult<T> result = train<T>(cfg, data, on_epoch, threads);

  std::vector<std::string> word_tokens;
  if (data.words) word_tokens = data.words->tokens;
  CheckpointData<T> ckpt = make_checkpoint<T>(
      cfg, data.vocab, word_tokens, result.best_params,
      result.best_text ? &*result.best_text : nullptr,
      cfg.optimizer == OptimizerKind::kAdam ? &result.adam : nullptr,
      static_cast<uint64_t>(result.best_epoch), result.rng_state);
  save_checkpoint(paths.checkpoint_out, ckpt);
  std::cout << "checkpoint written to " << paths.checkpoint_out << " (best epoch "
            << result.best_epoch;
  if (result.best_val_hits10 >= 0) std::cout << ", validation hits@10 " << result.best_val_hits10;
  std::cout << ")\n";
  return 0;
}

struct LoadedModel {
  uint8_t scalar = 0;  // 0=f32, 1=f64
  RestoredModel<float> f32;
  RestoredModel<double> f64;

  ModelKind model_kind() const {
    return scalar == 0 ? (f32.text ? ModelKind::kCdcPlus : ModelKind::kCdc)
                       : (f64.text ? ModelKind::kCdcPlus : ModelKind::kCdc);
  }
  const Vocab& vocab() const { return scalar == 0 ? f32.vocab : f64.vocab; }
  Vocab& vocab() { return scalar == 0 ? f32.vocab : f64.vocab; }
  const TrainConfig& config() const { return scalar == 0 ? f32.config : f64.config; }
  const std::vector<std::string>& word_tokens() const {
    return scalar == 0 ? f32.word_tokens : f64.word_tokens;
  }
};

LoadedModel load_model(const std::string& path) {
  LoadedModel m;
  m.scalar = scalar_kind_of_file(path);
  if (m.scalar == 0)
    m.f32 = restore_model(load_checkpoint<float>(path));
  else
    m.f64 = restore_model(load_checkpoint<double>(path));
  return m;
}

WordEmbeddingTable lookup_only_word_table(const std::vector<std::string>& tokens, int64_t d_w) {
  WordEmbeddingTable table;
  table.tokens = tokens;
  for (size_t i = 0; i < tokens.size(); ++i)
    table.token_ids.emplace(tokens[i], static_cast<int32_t>(i));
  table.vectors = Tensor<double>({static_cast<int64_t>(tokens.size()) + 2, d_w});
  return table;
}

struct EvalOptions {
  std::string checkpoint, test, train, valid, descriptions, report_out;
  bool filter_test = true;
  bool zero_shot = false;
  int threads = 1;
};

template <typename T>
int run_eval_typed(RestoredModel<T>& model, const EvalOptions& opt) {
  const int64_t num_seen = model.vocab.num_entities();
  TripletSet test = load_triplets(resolve_path(opt.test), model.vocab, Split::kTest);

  TripletIndex filter;
  if (!opt.train.empty())
    filter.insert_all(load_triplets(resolve_path(opt.train), model.vocab, Split::kTrain));
  if (!opt.valid.empty())
    filter.insert_all(load_triplets(resolve_path(opt.valid), model.vocab, Split::kValid));
  if (opt.filter_test) filter.insert_all(test);

  std::optional<DescriptionTable> descs;
  if (!opt.descriptions.empty()) {
    if (!model.text) throw std::invalid_argument("--descriptions given but checkpoint has no text encoder");
    WordEmbeddingTable words = lookup_only_word_table(model.word_tokens, model.text->d_w);
    descs = load_descriptions(resolve_path(opt.descriptions), model.vocab, words,
                              model.config.desc_length);
  }

  std::string json;
  if (opt.zero_shot) {
    if (!model.text) throw std::invalid_argument("--zero-shot requires a description model checkpoint");
    if (!descs) throw std::invalid_argument("--zero-shot requires --descriptions");
    ZeroShotSplit split = split_zero_shot(test, num_seen);
    if (split.excluded_seen_both > 0)
      std::cerr << "warning: excluded " << split.excluded_seen_both
                << " test triplets with both entities seen\n";
    ZeroShotScorer<T> scorer(model.params, *model.text, *descs);
    const std::vector<EntityId> candidates = descs->entities_with_descriptions();
    auto eval_split = [&](const TripletSet& s) -> std::optional<RankingReport> {
      if (s.triplets.empty()) return std::nullopt;
      return evaluate(s, std::cref(scorer), filter, candidates, opt.threads);
    };
    const auto rep_h = eval_split(split.n_h);
    const auto rep_t = eval_split(split.n_t);
    const auto rep_ht = eval_split(split.n_ht);
    std::vector<double> hits;
    std::vector<int64_t> sizes;
    auto push = [&](const std::optional<RankingReport>& r, int64_t n) {
      if (r) {
        hits.push_back(r->avg_hits10);
        sizes.push_back(n);
      }
    };
    push(rep_h, split.n_h.size());
    push(rep_t, split.n_t.size());
    push(rep_ht, split.n_ht.size());
    const double total = weighted_total(hits, sizes);
    json = "{";
    auto add = [&json](const char* name, const std::optional<RankingReport>& r, int64_t n) {
      json += std::string("\"") + name + "\": ";
      json += r ? r->to_json() : "null";
      json += ", \"" + std::string(name) + "_size\": " + std::to_string(n) + ", ";
    };
    add("n_h", rep_h, split.n_h.size());
    add("n_t", rep_t, split.n_t.size());
    add("n_ht", rep_ht, split.n_ht.size());
    json += "\"weighted_hits10\": " + std::to_string(total) + "}";
  } else {
    for (const Triplet& x : test.triplets)
      if (x.h >= num_seen || x.t >= num_seen)
        throw std::invalid_argument(
            "test set contains entities unseen in training; rerun with --zero-shot");
    std::vector<EntityId> candidates(static_cast<size_t>(num_seen));
    for (size_t i = 0; i < candidates.size(); ++i) candidates[i] = static_cast<EntityId>(i);
    RankingReport report;
    if (model.text) {
      if (!descs)
        throw std::invalid_argument("description model evaluation requires --descriptions");
      CdcPlusScorer<T> scorer(model.params, *model.text, *descs);
      report = evaluate(test, std::cref(scorer), filter, candidates, opt.threads);
    } else {
      report = evaluate(test, make_cdc_scorer(model.params), filter, candidates, opt.threads);
    }
    json = report.to_json();
  }

  if (opt.report_out.empty()) {
    std::cout << json << "\n";
  } else {
    std::ofstream out(opt.report_out, std::ios::trunc);
    if (!out) throw std::invalid_argument("cannot write report file: " + opt.report_out);
    out << json << "\n";
    std::cout << "report written to " << opt.report_out << "\n";
  }
  return 0;
}

template <typename T>
int run_predict_typed(RestoredModel<T>& model, const std::string& head, const std::string& rel,
                      const std::string& tail, int64_t top_k, const std::string& descriptions) {
  const bool head_query = head == "?";
  const bool tail_query = tail == "?";
  if (head_query == tail_query)
    throw std::invalid_argument("exactly one of head/tail must be '?'");
  const auto rid = model.vocab.relation_id(rel);
  if (!rid) throw std::invalid_argument("unknown relation name: " + rel);
  const std::string& known_name = head_query ? tail : head;
  const auto kid = model.vocab.entity_id(known_name);
  if (!kid) throw std::invalid_argument("unknown entity name: " + known_name);

  std::vector<Triplet> batch;
  const int64_t ne = model.vocab.num_entities();
  batch.reserve(static_cast<size_t>(ne));
  for (EntityId e = 0; e < ne; ++e) {
    Triplet x;
    x.r = *rid;
    x.h = head_query ? e : *kid;
    x.t = head_query ? *kid : e;
    batch.push_back(x);
  }

  std::vector<double> scores;
  if (model.text) {
    if (descriptions.empty())
      throw std::invalid_argument("description model prediction requires --descriptions");
    WordEmbeddingTable words = lookup_only_word_table(model.word_tokens, model.text->d_w);
    DescriptionTable descs = load_descriptions(resolve_path(descriptions), model.vocab, words,
                                               model.config.desc_length);
    CdcPlusScorer<T> scorer(model.params, *model.text, descs);
    scores = scorer(batch);
  } else {
    scores = score_batch(model.params, batch);
  }

  std::vector<int64_t> idx(static_cast<size_t>(ne));
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int64_t>(i);
  std::stable_sort(idx.begin(), idx.end(),
                   [&scores](int64_t a, int64_t b) { return scores[a] > scores[b]; });
  const int64_t n = std::min<int64_t>(top_k, ne);
  for (int64_t i = 0; i < n; ++i) {
    const EntityId e = static_cast<EntityId>(idx[static_cast<size_t>(i)]);
    std::printf("%s\t%.6f\n", model.vocab.entity_name(e).c_str(), scores[static_cast<size_t>(e)]);
  }
  return 0;
}

template <typename T>
int run_export_typed(RestoredModel<T>& model, const std::string& out_path) {
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw std::invalid_argument("cannot write embedding file: " + out_path);
  const int digits = std::is_same_v<T, float> ? 9 : 17;
  out << "# k=" << model.params.k << " entities=" << model.params.num_entities
      << " relations=" << model.params.num_relations << "\n";
  char buf[64];
  auto write_rows = [&](const Tensor<T>& table, const std::vector<std::string>& names) {
    for (int64_t i = 0; i < table.dim(0); ++i) {
      out << names[static_cast<size_t>(i)];
      for (int64_t j = 0; j < table.dim(1); ++j) {
        std::snprintf(buf, sizeof(buf), "%.*g", digits, static_cast<double>(table.at(i, j)));
        out << '\t' << buf;
      }
      out << '\n';
    }
  };
  write_rows(model.params.entity_emb, model.vocab.entity_names());
  write_rows(model.params.relation_emb, model.vocab.relation_names());
  if (!out) throw std::invalid_argument("write failure on " + out_path);
  std::cout << "embeddings written to " << out_path << "\n";
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"cdckg: convolutional dual-chain knowledge graph embeddings"};
  app.require_subcommand(1);

  // --- train ---
  auto* t = app.add_subcommand("train", "train a model and write the best checkpoint");
  std::string t_config, t_preset, t_precision = "f32";
  PathOptions t_paths;
  int t_threads = 1;
  std::vector<std::string> t_overrides;
  t->add_option("--config", t_config, "flat key=value config file");
  t->add_option("--preset", t_preset, "named hyperparameter preset")
      ->check(CLI::IsMember(preset_names()));
  t->add_option("--train", t_paths.train, "training triplet file");
  t->add_option("--valid", t_paths.valid, "validation triplet file");
  t->add_option("--test", t_paths.test, "test triplet file");
  t->add_option("--descriptions", t_paths.descriptions, "entity description file");
  t->add_option("--word-vectors", t_paths.word_vectors, "pretrained word vector file");
  t->add_option("--out", t_paths.checkpoint_out, "checkpoint output path");
  t->add_option("--history", t_paths.history_out, "training history JSONL path");
  t->add_option("--threads", t_threads, "evaluation worker threads");
  t->add_option("--precision", t_precision, "f32 or f64")->check(CLI::IsMember({"f32", "f64"}));
  t->add_option("--set", t_overrides,
                "config override as key=value (repeatable), e.g. --set epochs=100");
  std::optional<uint64_t> t_seed;
  std::optional<std::string> t_model;
  t->add_option("--seed", t_seed, "rng seed override");
  t->add_option("--model", t_model, "cdc or cdcplus")->check(CLI::IsMember({"cdc", "cdcplus"}));

  // --- eval ---
  auto* e = app.add_subcommand("eval", "filtered ranking evaluation of a checkpoint");
  EvalOptions eopt;
  e->add_option("--checkpoint", eopt.checkpoint, "model checkpoint")->required();
  e->add_option("--test", eopt.test, "test triplet file")->required();
  e->add_option("--train", eopt.train, "training triplets (for the filter index)");
  e->add_option("--valid", eopt.valid, "validation triplets (for the filter index)");
  e->add_option("--descriptions", eopt.descriptions, "entity description file");
  e->add_option("--report", eopt.report_out, "write the JSON report here instead of stdout");
  e->add_flag("--filter-test,!--no-filter-test", eopt.filter_test,
              "include test positives in the filter index (default on)");
  e->add_flag("--zero-shot", eopt.zero_shot, "zero-shot splits scored from descriptions only");
  e->add_option("--threads", eopt.threads, "evaluation worker threads");

  // --- predict ---
  auto* p = app.add_subcommand("predict", "rank completions for 'h r ?' or '? r t'");
  std::string p_ckpt, p_h, p_r, p_t, p_desc;
  int64_t p_topk = 10;
  p->add_option("--checkpoint", p_ckpt, "model checkpoint")->required();
  p->add_option("head", p_h, "head entity name or ?")->required();
  p->add_option("relation", p_r, "relation name")->required();
  p->add_option("tail", p_t, "tail entity name or ?")->required();
  p->add_option("--top-k", p_topk, "number of completions to print");
  p->add_option("--descriptions", p_desc, "entity description file (description models)");

  // --- export-embeddings ---
  auto* x = app.add_subcommand("export-embeddings", "write entity/relation embeddings as TSV");
  std::string x_ckpt, x_out;
  x->add_option("--checkpoint", x_ckpt, "model checkpoint")->required();
  x->add_option("--out", x_out, "output TSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  }

  try {
    if (t->parsed()) {
      TrainConfig cfg = t_preset.empty() ? TrainConfig{} : preset_config(t_preset);
      PathOptions paths = t_paths;
      if (!t_config.empty()) {
        PathOptions file_paths;
        for (const auto& [key, value] : parse_config_file(resolve_path(t_config)))
          apply_config_entry(cfg, file_paths, key, value);
        // command-line paths win over config-file paths
        if (paths.train.empty()) paths.train = file_paths.train;
        if (paths.valid.empty()) paths.valid = file_paths.valid;
        if (paths.test.empty()) paths.test = file_paths.test;
        if (paths.descriptions.empty()) paths.descriptions = file_paths.descriptions;
        if (paths.word_vectors.empty()) paths.word_vectors = file_paths.word_vectors;
        if (paths.checkpoint_out == "model.ckpt" && !file_paths.checkpoint_out.empty() &&
            file_paths.checkpoint_out != "model.ckpt")
          paths.checkpoint_out = file_paths.checkpoint_out;
        if (paths.history_out.empty()) paths.history_out = file_paths.history_out;
      }
      for (const std::string& kv : t_overrides) {
        const size_t eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
          throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        PathOptions ignored;
        apply_config_entry(cfg, ignored, kv.substr(0, eq), kv.substr(eq + 1));
      }
      if (t_seed) cfg.seed = *t_seed;
      if (t_model) cfg.model = *t_model == "cdcplus" ? ModelKind::kCdcPlus : ModelKind::kCdc;
      cfg.validate();
      openblas_set_num_threads(std::max(1, t_threads));
      return t_precision == "f64" ? run_train_typed<double>(cfg, paths, t_threads)
                                  : run_train_typed<float>(cfg, paths, t_threads);
    }
    if (e->parsed()) {
      openblas_set_num_threads(1);  // evaluation parallelism is per-triplet
      LoadedModel m = load_model(resolve_path(eopt.checkpoint));
      return m.scalar == 0 ? run_eval_typed(m.f32, eopt) : run_eval_typed(m.f64, eopt);
    }
    if (p->parsed()) {
      LoadedModel m = load_model(resolve_path(p_ckpt));
      return m.scalar == 0 ? run_predict_typed(m.f32, p_h, p_r, p_t, p_topk, p_desc)
                           : run_predict_typed(m.f64, p_h, p_r, p_t, p_topk, p_desc);
    }
    if (x->parsed()) {
      LoadedModel m = load_model(resolve_path(x_ckpt));
      return m.scalar == 0 ? run_export_typed(m.f32, x_out) : run_export_typed(m.f64, x_out);
    }
  } catch (const TrainAbortError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace
}  // namespace cdckg

int main(int argc, char** argv) {
  tune_allocator();
  return cdckg::run(argc, argv);
}
