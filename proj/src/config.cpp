// Copyright 2026 The NAT Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nat/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace nat {

using nlohmann::json;

namespace {

json weak_source_template() {
  return {{"id", ""},
          {"kind", "model_attention"},
          {"epochs", 30},
          {"threshold", nullptr},
          {"pretrain_epochs", 0},
          {"lexicon", json::object()},
          {"lexicon_path", ""},
          {"match_confidence", 1.0},
          {"default_confidence", 0.95},
          {"corruption", 0.0},
          {"window", {{"word_dim", 32}, {"hidden", 64}, {"radius", 2}}}};
}

// Objects whose keys are user data rather than schema.
bool free_map(const std::string& key) {
  return key == "lexicon" || key == "thresholds";
}

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

std::string type_name(const json& v) {
  if (v.is_null()) return "null";
  if (v.is_boolean()) return "boolean";
  if (v.is_number_integer() || v.is_number_unsigned()) return "integer";
  if (v.is_number()) return "number";
  if (v.is_string()) return "string";
  if (v.is_array()) return "array";
  return "object";
}

void check_type(const json& def, const json& v, const std::string& key);

json merge_at(const json& def, const json& user, const std::string& key);

void check_array(const json& def, const json& v, const std::string& key) {
  if (key == "weak_sources") return;  // element-wise merge handles it
  if (def.empty()) return;
  for (std::size_t i = 0; i < v.size(); ++i)
    check_type(def.front(), v[i], key + "." + std::to_string(i));
}

void check_type(const json& def, const json& v, const std::string& key) {
  bool ok;
  if (def.is_null())
    ok = v.is_null() || v.is_number();
  else if (def.is_boolean())
    ok = v.is_boolean();
  else if (def.is_number_integer() || def.is_number_unsigned())
    ok = v.is_number_integer() || v.is_number_unsigned();
  else if (def.is_number())
    ok = v.is_number();
  else if (def.is_string())
    ok = v.is_string();
  else if (def.is_array())
    ok = v.is_array();
  else
    ok = v.is_object();
  if (!ok)
    throw Error("config key '" + key + "' expects " + type_name(def) +
                ", got " + type_name(v));
  if (def.is_array()) check_array(def, v, key);
  if (def.is_number_unsigned() && v.is_number_integer() && v.get<long long>() < 0)
    throw Error("config key '" + key + "' must be non-negative");
}

json merge_at(const json& def, const json& user, const std::string& prefix) {
  if (!user.is_object())
    throw Error("config section '" + (prefix.empty() ? "<root>" : prefix) +
                "' must be an object");
  json out = def;
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = join(prefix, it.key());
    if (!def.contains(it.key())) throw Error("unknown config key '" + key + "'");
    const json& d = def.at(it.key());
    if (d.is_object() && !free_map(it.key())) {
      out[it.key()] = merge_at(d, it.value(), key);
    } else if (key == "weak_sources") {
      if (!it.value().is_array())
        throw Error("config key 'weak_sources' expects array");
      json arr = json::array();
      for (std::size_t i = 0; i < it.value().size(); ++i)
        arr.push_back(merge_at(weak_source_template(), it.value()[i],
                               key + "." + std::to_string(i)));
      out[it.key()] = arr;
    } else {
      check_type(d, it.value(), key);
      out[it.key()] = it.value();
    }
  }
  return out;
}

template <typename T>
T get(const json& j, const char* section, const char* key) {
  try {
    return j.at(section).at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(std::string("config key '") + section + "." + key + "': " + e.what());
  }
}

}  // namespace

json default_config_json() {
  PipelineConfig d;
  json j;
  j["seed"] = d.seed;
  j["t_max"] = d.t_max;
  j["jobs"] = d.jobs;
  const MiniInvoiceConfig& b = d.data.benchmark;
  j["data"] = {{"human", ""},
               {"unlabeled", ""},
               {"unlabeled_gold", ""},
               {"test", ""},
               {"benchmark",
                {{"templates", b.vendor_templates},
                 {"human", d.data.bench_human},
                 {"unlabeled", d.data.bench_unlabeled},
                 {"test", d.data.bench_test},
                 {"seed", d.data.bench_seed},
                 {"layout_jitter", b.layout_jitter},
                 {"key_phrase_variation", b.key_phrase_variation},
                 {"format_variation", b.format_variation},
                 {"field_drop", b.field_drop},
                 {"vendor_pool", b.vendor_pool},
                 {"item_pool", b.item_pool},
                 {"max_line_items", b.max_line_items}}}};
  const ArchConfig& a = d.arch;
  j["model"] = {{"word_dim", a.word_dim}, {"geo_dim", a.geo_dim},
                {"model_dim", a.model_dim}, {"heads", a.heads},
                {"layers", a.layers}, {"ff_dim", a.ff_dim},
                {"vocab_size", a.vocab_size}, {"max_seq_len", a.max_seq_len}};
  j["train"] = {{"learning_rate", d.adam.learning_rate},
                {"beta1", d.adam.beta1},
                {"beta2", d.adam.beta2},
                {"eps", d.adam.epsilon},
                {"batch_size", d.batch_size}};
  j["phase1"] = {{"mode", "pretrain"},
                 {"epochs", d.phase1_epochs},
                 {"mask_rate", d.mask_rate},
                 {"checkpoint", ""}};
  json attn = weak_source_template();
  attn["id"] = "attention";
  attn["epochs"] = d.tx_epochs;
  attn["corruption"] = d.weak_corruption;
  json win = weak_source_template();
  win["id"] = "window";
  win["kind"] = "model_window";
  win["epochs"] = 40;
  win["corruption"] = d.weak_corruption;
  j["weak_sources"] = json::array({attn, win});
  j["noise_aware"] = {{"enabled", d.noise_aware_training},
                      {"lambda", d.noise_aware.lambda},
                      {"threshold", d.noise_aware.default_threshold},
                      {"thresholds", json::object()},
                      {"gradient_mode", "detached"}};
  j["phase2"] = {{"enabled", d.phase2}, {"epochs", d.phase2_epochs}};
  j["phase3"] = {{"enabled", d.phase3},
                 {"epochs", d.phase3_epochs},
                 {"rules", ""},
                 {"drop_identity", d.drop_identity}};
  j["baseline"] = {{"tx_epochs", d.tx_epochs}, {"st_rounds", d.st_rounds}};
  j["evaluation"] = {{"trials", d.trials}};
  j["ablation"] = {{"seeds", d.ablation_seeds}};
  j["curve"] = {{"sizes", d.curve_sizes}, {"trials", d.curve_trials}};
  return j;
}

json merge_config(const json& base, const json& user) {
  return merge_at(base, user, "");
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw Error("override '" + assignment + "' is not of the form key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &config;
  std::string walked;
  std::istringstream parts(key);
  std::vector<std::string> path;
  for (std::string p; std::getline(parts, p, '.');) path.push_back(p);
  for (std::size_t i = 0; i < path.size(); ++i) {
    const std::string& p = path[i];
    walked = join(walked, p);
    const bool last = i + 1 == path.size();
    if (node->is_array()) {
      std::size_t idx;
      try {
        idx = std::stoul(p);
      } catch (const std::exception&) {
        throw Error("config key '" + walked + "': expected an array index");
      }
      if (idx >= node->size())
        throw Error("config key '" + walked + "': index out of range");
      node = &(*node)[idx];
    } else if (node->is_object()) {
      const bool in_free_map = i > 0 && free_map(path[i - 1]);
      if (!node->contains(p)) {
        if (!(in_free_map && last))
          throw Error("unknown config key '" + walked + "'");
        (*node)[p] = value;
        return;
      }
      node = &(*node)[p];
    } else {
      throw Error("unknown config key '" + walked + "'");
    }
    if (last) {
      if (path.size() >= 2 && path[path.size() - 2] == "thresholds") {
        check_type(json(0.0), value, walked);
      } else if (walked.rfind("weak_sources", 0) == 0 && path.size() == 2) {
        *node = merge_at(weak_source_template(), value, walked);
        return;
      } else if (walked == "weak_sources") {
        *node = merge_config(json{{"weak_sources", json::array()}},
                             json{{"weak_sources", value}})["weak_sources"];
        return;
      } else {
        check_type(*node, value, walked);
      }
      *node = value;
    }
  }
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.t_max = j.at("t_max").get<double>();
  c.jobs = j.at("jobs").get<int>();

  const json& d = j.at("data");
  c.data.human = d.at("human").get<std::string>();
  c.data.unlabeled = d.at("unlabeled").get<std::string>();
  c.data.unlabeled_gold = d.at("unlabeled_gold").get<std::string>();
  c.data.test = d.at("test").get<std::string>();
  const json& b = d.at("benchmark");
  MiniInvoiceConfig& mi = c.data.benchmark;
  mi.vendor_templates = b.at("templates").get<std::size_t>();
  mi.layout_jitter = b.at("layout_jitter").get<double>();
  mi.key_phrase_variation = b.at("key_phrase_variation").get<double>();
  mi.format_variation = b.at("format_variation").get<double>();
  mi.field_drop = b.at("field_drop").get<double>();
  mi.vendor_pool = b.at("vendor_pool").get<std::size_t>();
  mi.item_pool = b.at("item_pool").get<std::size_t>();
  mi.max_line_items = b.at("max_line_items").get<std::size_t>();
  c.data.bench_human = b.at("human").get<std::size_t>();
  c.data.bench_unlabeled = b.at("unlabeled").get<std::size_t>();
  c.data.bench_test = b.at("test").get<std::size_t>();
  c.data.bench_seed = b.at("seed").get<std::uint64_t>();

  c.arch.word_dim = get<int>(j, "model", "word_dim");
  c.arch.geo_dim = get<int>(j, "model", "geo_dim");
  c.arch.model_dim = get<int>(j, "model", "model_dim");
  c.arch.heads = get<int>(j, "model", "heads");
  c.arch.layers = get<int>(j, "model", "layers");
  c.arch.ff_dim = get<int>(j, "model", "ff_dim");
  c.arch.vocab_size = get<int>(j, "model", "vocab_size");
  c.arch.max_seq_len = get<int>(j, "model", "max_seq_len");

  c.adam.learning_rate = get<double>(j, "train", "learning_rate");
  c.adam.beta1 = get<double>(j, "train", "beta1");
  c.adam.beta2 = get<double>(j, "train", "beta2");
  c.adam.epsilon = get<double>(j, "train", "eps");
  c.batch_size = get<std::size_t>(j, "train", "batch_size");

  const std::string mode = get<std::string>(j, "phase1", "mode");
  if (mode == "pretrain") c.phase1 = PhaseOneMode::kPretrain;
  else if (mode == "checkpoint") c.phase1 = PhaseOneMode::kCheckpoint;
  else if (mode == "random") c.phase1 = PhaseOneMode::kRandom;
  else throw Error("config key 'phase1.mode' must be pretrain|checkpoint|random");
  c.phase1_epochs = get<int>(j, "phase1", "epochs");
  c.mask_rate = get<double>(j, "phase1", "mask_rate");
  c.phase1_checkpoint = get<std::string>(j, "phase1", "checkpoint");

  const json& ws = j.at("weak_sources");
  for (std::size_t i = 0; i < ws.size(); ++i) {
    const json& w = ws[i];
    const std::string key = "weak_sources." + std::to_string(i);
    WeakSourceSpec s;
    s.source_id = w.at("id").get<std::string>();
    if (s.source_id.empty()) throw Error("config key '" + key + ".id' is empty");
    try {
      s.kind = parse_weak_source_kind(w.at("kind").get<std::string>());
    } catch (const Error& e) {
      throw Error("config key '" + key + ".kind': " + e.what());
    }
    s.epochs = w.at("epochs").get<int>();
    if (!w.at("threshold").is_null()) s.threshold = w.at("threshold").get<double>();
    s.pretrain_epochs = w.at("pretrain_epochs").get<int>();
    s.lexicon = w.at("lexicon").get<std::map<std::string, std::string>>();
    s.lexicon_path = w.at("lexicon_path").get<std::string>();
    s.match_confidence = w.at("match_confidence").get<double>();
    s.default_confidence = w.at("default_confidence").get<double>();
    s.corruption = w.at("corruption").get<double>();
    if (!(s.corruption >= 0 && s.corruption <= 1))
      throw Error("config key '" + key + ".corruption' must lie in [0, 1]");
    s.window_arch.word_dim = w.at("window").at("word_dim").get<int>();
    s.window_arch.hidden = w.at("window").at("hidden").get<int>();
    s.window_arch.radius = w.at("window").at("radius").get<int>();
    c.weak_sources.push_back(std::move(s));
  }

  c.noise_aware_training = get<bool>(j, "noise_aware", "enabled");
  c.noise_aware.lambda = get<double>(j, "noise_aware", "lambda");
  c.noise_aware.default_threshold = get<double>(j, "noise_aware", "threshold");
  c.noise_aware.thresholds =
      j.at("noise_aware").at("thresholds").get<std::map<std::string, double>>();
  const std::string gm = get<std::string>(j, "noise_aware", "gradient_mode");
  if (gm == "detached") c.noise_aware.gradient_mode = GradientMode::kDetached;
  else if (gm == "flow_through") c.noise_aware.gradient_mode = GradientMode::kFlowThrough;
  else throw Error("config key 'noise_aware.gradient_mode' must be detached|flow_through");
  for (const WeakSourceSpec& s : c.weak_sources)
    if (s.threshold) c.noise_aware.thresholds[s.source_id] = *s.threshold;

  c.phase2 = get<bool>(j, "phase2", "enabled");
  c.phase2_epochs = get<int>(j, "phase2", "epochs");
  c.phase3 = get<bool>(j, "phase3", "enabled");
  c.phase3_epochs = get<int>(j, "phase3", "epochs");
  c.rules = get<std::string>(j, "phase3", "rules");
  c.drop_identity = get<bool>(j, "phase3", "drop_identity");
  c.tx_epochs = get<int>(j, "baseline", "tx_epochs");
  c.st_rounds = get<int>(j, "baseline", "st_rounds");
  c.trials = get<int>(j, "evaluation", "trials");
  c.ablation_seeds = get<std::vector<std::uint64_t>>(j, "ablation", "seeds");
  c.curve_sizes = get<std::vector<std::size_t>>(j, "curve", "sizes");
  c.curve_trials = get<int>(j, "curve", "trials");
  c.validate();
  return c;
}

void PipelineConfig::validate() const {
  if (!(t_max > 0)) throw Error("config key 't_max' must be > 0");
  if (jobs < 1) throw Error("config key 'jobs' must be >= 1");
  if (batch_size < 1) throw Error("config key 'train.batch_size' must be >= 1");
  if (!(adam.learning_rate >= 0)) throw Error("config key 'train.learning_rate' must be >= 0");
  if (phase1_epochs < 0 || phase2_epochs < 0 || phase3_epochs < 0 || tx_epochs < 0)
    throw Error("epoch counts must be >= 0");
  if (!(mask_rate >= 0 && mask_rate <= 1))
    throw Error("config key 'phase1.mask_rate' must lie in [0, 1]");
  if (phase1 == PhaseOneMode::kCheckpoint && phase1_checkpoint.empty())
    throw Error("config key 'phase1.checkpoint' is required in checkpoint mode");
  if (!phase2 && !phase3 && phase1 != PhaseOneMode::kPretrain)
    throw Error("at least one phase must be enabled");
  if (st_rounds < 1) throw Error("config key 'baseline.st_rounds' must be >= 1");
  if (trials < 1 || curve_trials < 1) throw Error("trial counts must be >= 1");
  if (ablation_seeds.empty()) throw Error("config key 'ablation.seeds' is empty");
  std::vector<std::string> ids;
  for (const auto& s : weak_sources) {
    if (std::find(ids.begin(), ids.end(), s.source_id) != ids.end())
      throw Error("duplicate weak source id '" + s.source_id + "'");
    ids.push_back(s.source_id);
    if (s.threshold && !(*s.threshold >= 0 && *s.threshold <= 1))
      throw Error("threshold of weak source '" + s.source_id + "' must lie in [0, 1]");
  }
  noise_aware.validate();
  ArchConfig a = arch;
  a.num_tags = 5;
  a.validate();
}

json load_config_json(const std::filesystem::path& path,
                      const std::vector<std::string>& overrides) {
  json cfg = default_config_json();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path.string());
    json user;
    try {
      user = json::parse(in);
    } catch (const json::exception& e) {
      throw Error("malformed config " + path.string() + ": " + e.what());
    }
    cfg = merge_config(cfg, user);
  }
  for (const std::string& o : overrides) apply_override(cfg, o);
  return cfg;
}

}  // namespace nat
