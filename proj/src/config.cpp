#include "cdckg/presets.hpp"
#include "cdckg/trainer.hpp"

#include <json.hpp>

namespace cdckg {

using nlohmann::json;

std::string TrainConfig::to_json() const {
  json j;
  j["model"] = model == ModelKind::kCdcPlus ? "cdcplus" : "cdc";
  j["k"] = k;
  j["n_k"] = n_k;
  j["d_g"] = d_g;
  j["n_b"] = n_b;
  j["epochs"] = epochs;
  j["lr0"] = lr0;
  j["decay"] = decay;
  j["label_smoothing"] = label_smoothing;
  j["lambda_l1"] = lambda_l1;
  j["dropout"] = dropout;
  j["optimizer"] = optimizer == OptimizerKind::kAdam ? "adam" : "sgd";
  j["norm_projection"] = norm_projection;
  j["seed"] = seed;
  j["eval_every"] = eval_every;
  j["desc_length"] = desc_length;
  j["attn_aspects"] = text.aspects;
  j["attn_dim"] = text.attn_dim;
  j["conv1_filters"] = text.conv1_filters;
  j["conv1_width"] = text.conv1_width;
  j["pool_width"] = text.pool_width;
  j["conv2_width"] = text.conv2_width;
  j["tie_relation_txt"] = text.tie_relation_embeddings;
  return j.dump();
}

TrainConfig TrainConfig::from_json(const std::string& text_json) {
  json j = json::parse(text_json);
  TrainConfig c;
  const std::string model = j.value("model", "cdc");
  if (model == "cdcplus")
    c.model = ModelKind::kCdcPlus;
  else if (model == "cdc")
    c.model = ModelKind::kCdc;
  else
    throw std::invalid_argument("config: unknown model '" + model + "'");
  c.k = j.value("k", c.k);
  c.n_k = j.value("n_k", c.n_k);
  c.d_g = j.value("d_g", c.d_g);
  c.n_b = j.value("n_b", c.n_b);
  c.epochs = j.value("epochs", c.epochs);
  c.lr0 = j.value("lr0", c.lr0);
  c.decay = j.value("decay", c.decay);
  c.label_smoothing = j.value("label_smoothing", c.label_smoothing);
  c.lambda_l1 = j.value("lambda_l1", c.lambda_l1);
  c.dropout = j.value("dropout", c.dropout);
  const std::string opt = j.value("optimizer", "adam");
  if (opt == "adam")
    c.optimizer = OptimizerKind::kAdam;
  else if (opt == "sgd")
    c.optimizer = OptimizerKind::kSgd;
  else
    throw std::invalid_argument("config: unknown optimizer '" + opt + "'");
  c.norm_projection = j.value("norm_projection", c.norm_projection);
  c.seed = j.value("seed", c.seed);
  c.eval_every = j.value("eval_every", c.eval_every);
  c.desc_length = j.value("desc_length", c.desc_length);
  c.text.aspects = j.value("attn_aspects", c.text.aspects);
  c.text.attn_dim = j.value("attn_dim", c.text.attn_dim);
  c.text.conv1_filters = j.value("conv1_filters", c.text.conv1_filters);
  c.text.conv1_width = j.value("conv1_width", c.text.conv1_width);
  c.text.pool_width = j.value("pool_width", c.text.pool_width);
  c.text.conv2_width = j.value("conv2_width", c.text.conv2_width);
  c.text.tie_relation_embeddings = j.value("tie_relation_txt", c.text.tie_relation_embeddings);
  return c;
}

TrainConfig preset_config(const std::string& name) {
  TrainConfig c;  // k=200, n_k=64, d_g=256, dropout 0.2, decay 0.998 baseline
  if (name == "wn18") {
    c.n_b = 5000;
    c.epochs = 3000;
    c.lr0 = 3e-3;
  } else if (name == "fb15k") {
    c.n_b = 5000;
    c.epochs = 3000;
    c.lr0 = 3e-3;
  } else if (name == "fb15k-237") {
    c.n_b = 2000;
    c.epochs = 2000;
    c.lr0 = 3e-3;
    c.label_smoothing = 0.1;
  } else if (name == "yago3-10") {
    c.n_b = 30000;
    c.epochs = 2000;
    c.lr0 = 1e-3;
  } else if (name == "fb14k") {
    c.k = 100;
    c.n_b = 1000;
    c.epochs = 600;
    c.lr0 = 1e-3;
  } else if (name == "dgi") {
    c.n_b = 100;
    c.epochs = 1000;
    c.lr0 = 1e-3;
  } else if (name == "ddi") {
    c.n_b = 300;
    c.epochs = 1000;
    c.lr0 = 3e-3;
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  return c;
}

std::vector<std::string> preset_names() {
  return {"wn18", "fb15k", "fb15k-237", "yago3-10", "fb14k", "dgi", "ddi"};
}

}  // namespace cdckg
