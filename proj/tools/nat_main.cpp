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

// Command-line entry point for the NAT training pipeline.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nat/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kDegraded = 2;

int log_level() {
  const char* v = std::getenv("NAT_LOG");
  if (!v) return 1;
  const std::string s = v;
  if (s == "quiet" || s == "0" || s == "error") return 0;
  if (s == "debug" || s == "2") return 2;
  return 1;
}

void info(const std::string& s) {
  if (log_level() >= 1) std::cerr << "[nat] " << s << "\n";
}

struct Common {
  std::string config;
  std::string out = "nat_out";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  std::optional<double> max_seconds;
  std::optional<int> jobs;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "Pipeline config file (JSON)");
  app->add_option("--out", c.out, "Output directory");
  app->add_option("--seed", c.seed, "Run seed");
  app->add_option("--set", c.sets, "Dotted override key=value (repeatable)");
  app->add_option("--max-seconds", c.max_seconds, "Wall-clock budget t_max");
  app->add_option("--jobs", c.jobs, "Worker threads");
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw nat::Error("cannot write " + p.string());
  out << s;
  if (!out) throw nat::Error("write failed for " + p.string());
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

struct Session {
  json config_json;
  nat::PipelineConfig config;
  fs::path out;

  explicit Session(const Common& c) {
    std::vector<std::string> sets = c.sets;
    if (c.seed) sets.push_back("seed=" + std::to_string(*c.seed));
    if (c.max_seconds) {
      json v = *c.max_seconds;
      sets.push_back("t_max=" + v.dump());
    }
    if (c.jobs) sets.push_back("jobs=" + std::to_string(*c.jobs));
    config_json = nat::load_config_json(c.config, sets);
    config = nat::config_from_json(config_json);
    out = c.out;
    fs::create_directories(out);
    write_json(out / "config.json", config_json);
  }

  std::function<void(const std::string&)> logger() const {
    return [](const std::string& s) {
      if (log_level() >= 2 || s.find(" epoch ") == std::string::npos) info(s);
    };
  }

  int emit(nat::RunRecord& rec, bool save_model) {
    rec.config = config_json;
    if (save_model) {
      rec.checkpoint = "model.ckpt";
      nat::save_tagger(rec.model, out / rec.checkpoint);
    }
    write_json(out / "run_record.json", nat::run_record_json(rec));
    write_json(out / "timing.json", nat::timing_json(rec, config.t_max));
    if (rec.evaluation) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "macro-F1 %.4f", rec.evaluation->macro_f1);
      info(buf);
    }
    if (rec.budget_exhausted) {
      info("training stopped early: t_max budget exhausted");
      return kDegraded;
    }
    return kOk;
  }

  // Records for subcommands that do no training.
  int emit_plain(const std::string& kind) {
    nat::RunRecord rec;
    rec.kind = kind;
    rec.seed = config.seed;
    rec.config = config_json;
    write_json(out / "run_record.json", nat::run_record_json(rec));
    return kOk;
  }
};

int cmd_ingest(const Common& c, const std::string& format, const std::string& input,
               const std::vector<std::size_t>& split) {
  Session s(c);
  nat::Corpus corpus = nat::load_dataset(format, input);
  std::size_t bad = 0;
  for (const nat::Document& d : corpus.documents)
    bad += !nat::validate_document(d, corpus.schema).empty();
  if (bad) throw nat::Error(std::to_string(bad) + " ingested documents fail validation");
  nat::write_corpus(corpus, s.out / "corpus.jsonl");
  info("ingested " + std::to_string(corpus.size()) + " documents");
  if (!split.empty()) {
    std::vector<bool> unlabeled(split.size(), false);
    if (split.size() >= 2) unlabeled[1] = true;
    auto parts = nat::split_corpus(corpus, split, s.config.seed, unlabeled);
    const char* names[] = {"human", "unlabeled", "test"};
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const std::string name = i < 3 ? names[i] : "part" + std::to_string(i);
      nat::write_corpus(parts[i].corpus, s.out / (name + ".jsonl"));
      if (parts[i].sealed)
        nat::write_corpus(*parts[i].sealed, s.out / (name + "_gold.jsonl"));
    }
  }
  return s.emit_plain("ingest");
}

int cmd_gen_synth(const Common& c) {
  Session s(c);
  nat::PipelineConfig cfg = s.config;
  cfg.data.human.clear();
  nat::Corpora data = nat::load_corpora(cfg);
  nat::write_corpus(data.human, s.out / "human.jsonl");
  nat::write_corpus(data.unlabeled, s.out / "unlabeled.jsonl");
  nat::write_corpus(*data.unlabeled_gold, s.out / "unlabeled_gold.jsonl");
  nat::write_corpus(data.test, s.out / "test.jsonl");
  info("generated " + std::to_string(data.human.size()) + " human, " +
       std::to_string(data.unlabeled.size()) + " unlabeled, " +
       std::to_string(data.test.size()) + " test documents");
  return s.emit_plain("gen-synth");
}

int cmd_pretrain(const Common& c) {
  Session s(c);
  nat::PipelineConfig cfg = s.config;
  cfg.phase2 = false;
  cfg.phase3 = false;
  cfg.phase1 = nat::PhaseOneMode::kPretrain;
  nat::Corpora data = nat::load_corpora(cfg);
  data.test.documents.clear();
  nat::Budget budget(cfg.t_max);
  nat::RunContext ctx{cfg, data, budget, nullptr, s.logger()};
  nat::RunRecord rec = nat::run_nat(ctx);
  rec.kind = "pretrain";
  return s.emit(rec, true);
}

int cmd_weak_label(const Common& c) {
  Session s(c);
  const nat::PipelineConfig& cfg = s.config;
  if (cfg.weak_sources.empty()) throw nat::Error("no weak sources configured");
  nat::Corpora data = nat::load_corpora(cfg);
  nat::Budget budget(cfg.t_max);
  nat::PhaseCache cache;
  nat::PipelineConfig only2 = cfg;
  only2.phase2_epochs = 0;
  only2.phase3 = false;
  data.test.documents.clear();
  nat::RunContext ctx{only2, data, budget, &cache, s.logger()};
  nat::RunRecord rec = nat::run_nat(ctx);
  rec.kind = "weak-label";
  for (const auto& [id, w] : cache.weak_labels)
    nat::write_weighted_corpus(data.human.schema, nat::Provenance::weak(id), w.docs,
                               s.out / ("weak_" + id + ".jsonl"));
  return s.emit(rec, false);
}

int cmd_augment(const Common& c) {
  Session s(c);
  const nat::PipelineConfig& cfg = s.config;
  nat::Corpora data = nat::load_corpora(cfg);
  const nat::AugmentationRuleSet rules =
      cfg.rules.empty() ? nat::default_invoice_rules() : nat::read_rule_set(cfg.rules);
  write_text(s.out / "rules.json", nat::rule_set_to_json(rules));
  nat::Corpus syn = nat::build_synthetic_corpus(data.human, rules, cfg.seed, cfg.jobs);
  if (cfg.drop_identity) syn = nat::drop_identity_outputs(syn);
  nat::write_corpus(syn, s.out / "synthetic.jsonl");
  info("wrote " + std::to_string(syn.size()) + " synthetic documents");
  return s.emit_plain("augment");
}

int cmd_train(const Common& c) {
  Session s(c);
  nat::Corpora data = nat::load_corpora(s.config);
  nat::Budget budget(s.config.t_max);
  nat::RunContext ctx{s.config, data, budget, nullptr, s.logger()};
  nat::RunRecord rec = nat::run_nat(ctx);
  rec.kind = "nat";
  return s.emit(rec, true);
}

int cmd_baseline(const Common& c, const std::string& kind) {
  Session s(c);
  const nat::BaselineKind k = nat::parse_baseline_kind(kind);
  nat::Corpora data = nat::load_corpora(s.config);
  nat::Budget budget(s.config.t_max);
  nat::RunContext ctx{s.config, data, budget, nullptr, s.logger()};
  nat::RunRecord rec = nat::run_baseline(ctx, k);
  return s.emit(rec, true);
}

int cmd_ablate(const Common& c) {
  Session s(c);
  nat::Corpora data = nat::load_corpora(s.config);
  nat::Budget budget(s.config.t_max);
  nat::RunContext ctx{s.config, data, budget, nullptr, s.logger()};
  nat::AblationResult r = nat::run_ablation(ctx);
  write_json(s.out / "ablation.json", nat::ablation_json(r));
  write_text(s.out / "ablation.txt", nat::ablation_table(r));
  std::cout << nat::ablation_table(r);
  nat::RunRecord rec;
  rec.kind = "ablate";
  rec.seed = s.config.seed;
  rec.budget_exhausted = r.budget_exhausted;
  rec.wall_seconds = budget.elapsed();
  return s.emit(rec, false);
}

int cmd_evaluate(const Common& c, const std::string& model, const std::string& test) {
  Session s(c);
  const nat::PipelineConfig& cfg = s.config;
  nat::TrialReport report;
  bool degraded = false;
  if (!model.empty()) {
    nat::TaggerParams p = nat::load_tagger(model);
    nat::Corpus t;
    if (!test.empty()) {
      t = nat::read_corpus(test);
    } else {
      t = nat::load_corpora(cfg).test;
    }
    if (p.arch.num_tags != t.schema.num_tags())
      throw nat::Error("model tag count does not match the test schema");
    report = nat::summarize_trials({nat::evaluate_model(p, t, cfg.jobs, cfg.seed)});
  } else {
    nat::Corpora data = nat::load_corpora(cfg);
    if (!test.empty()) data.test = nat::read_corpus(test);
    nat::Budget budget(cfg.t_max);
    auto trial = [&](std::uint64_t seed) {
      nat::PipelineConfig tc = cfg;
      tc.seed = seed;
      nat::RunContext ctx{tc, data, budget, nullptr, s.logger()};
      nat::RunRecord r = nat::run_nat(ctx);
      degraded = degraded || r.budget_exhausted;
      if (!r.evaluation) throw nat::Error("no test corpus to evaluate on");
      return *r.evaluation;
    };
    try {
      report = nat::run_trials(trial, cfg.trials, cfg.seed);
    } catch (const nat::TrialAbort& e) {
      write_json(s.out / "report.json", json::parse(nat::trial_report_json(e.partial())));
      throw;
    }
  }
  write_text(s.out / "report.json", nat::trial_report_json(report));
  write_text(s.out / "report.txt", nat::trial_report_text(report));
  std::cout << nat::trial_report_text(report);
  nat::RunRecord rec;
  rec.kind = "evaluate";
  rec.seed = cfg.seed;
  rec.budget_exhausted = degraded;
  if (report.n_trials() == 1) rec.evaluation = report.trials.front();
  return s.emit(rec, false);
}

int cmd_curve(const Common& c) {
  Session s(c);
  nat::Corpora data = nat::load_corpora(s.config);
  nat::Budget budget(s.config.t_max);
  nat::RunContext ctx{s.config, data, budget, nullptr, s.logger()};
  nat::CurveResult r = nat::run_curve(ctx);
  write_text(s.out / "curve.csv", nat::curve_csv(r.nat));
  write_text(s.out / "curve_tx.csv", nat::curve_csv(r.tx));
  write_json(s.out / "curve.json", nat::curve_json(r));
  std::cout << nat::curve_csv(r.nat);
  nat::RunRecord rec;
  rec.kind = "curve";
  rec.seed = s.config.seed;
  rec.budget_exhausted = r.budget_exhausted;
  return s.emit(rec, false);
}

int cmd_validate(const Common& c, const std::string& input) {
  Session s(c);
  nat::CorpusFile file = nat::read_corpus_file(input);
  json report = json::array();
  for (const nat::DocRecord& r : file.records)
    for (const nat::Violation& v : nat::validate_document(r.doc, file.schema))
      report.push_back({{"document", r.doc.id}, {"where", v.where}, {"message", v.message}});
  write_json(s.out / "violations.json", report);
  for (const auto& v : report)
    std::cout << v["document"].get<std::string>() << ": "
              << v["message"].get<std::string>() << "\n";
  info(std::to_string(report.size()) + " violation(s) in " +
       std::to_string(file.records.size()) + " document(s)");
  s.emit_plain("validate");
  return report.empty() ? kOk : kError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noise-aware training pipeline for document entity extraction"};
  app.require_subcommand(1);
  Common common;
  std::string format = "canonical", input, model, test, kind = "TX";
  std::vector<std::size_t> split;

  auto* ingest = app.add_subcommand("ingest", "Load a dataset into the canonical corpus format");
  add_common(ingest, common);
  ingest->add_option("--format", format, "Dataset adapter (funsd, canonical)");
  ingest->add_option("--input", input, "Dataset path")->required();
  ingest->add_option("--split", split, "Sizes of human, unlabeled, test parts")
      ->delimiter(',');
  auto* gen = app.add_subcommand("gen-synth", "Generate the mini-invoice benchmark corpora");
  add_common(gen, common);
  auto* pre = app.add_subcommand("pretrain", "Phase I masked-token pre-training");
  add_common(pre, common);
  auto* weak = app.add_subcommand("weak-label", "Fit weak sources and infer weak labels");
  add_common(weak, common);
  auto* aug = app.add_subcommand("augment", "Build the synthetic corpus from H");
  add_common(aug, common);
  auto* train = app.add_subcommand("train", "Run the full NAT pipeline");
  add_common(train, common);
  auto* base = app.add_subcommand("baseline", "Run a TX, SS or ST baseline");
  add_common(base, common);
  base->add_option("--kind", kind, "TX, SS or ST");
  auto* abl = app.add_subcommand("ablate", "Ablation study over the configured seeds");
  add_common(abl, common);
  auto* ev = app.add_subcommand("evaluate", "Score a checkpoint, or repeated NAT trials");
  add_common(ev, common);
  ev->add_option("--model", model, "Checkpoint to score");
  ev->add_option("--test", test, "Test corpus (defaults to the configured one)");
  auto* cur = app.add_subcommand("curve", "Label-efficiency curve");
  add_common(cur, common);
  auto* val = app.add_subcommand("validate", "Check a corpus file");
  add_common(val, common);
  val->add_option("--input", input, "Corpus file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kError;
  }

  try {
    if (*ingest) return cmd_ingest(common, format, input, split);
    if (*gen) return cmd_gen_synth(common);
    if (*pre) return cmd_pretrain(common);
    if (*weak) return cmd_weak_label(common);
    if (*aug) return cmd_augment(common);
    if (*train) return cmd_train(common);
    if (*base) return cmd_baseline(common, kind);
    if (*abl) return cmd_ablate(common);
    if (*ev) return cmd_evaluate(common, model, test);
    if (*cur) return cmd_curve(common);
    if (*val) return cmd_validate(common, input);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}
