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

#include "nat/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "nat/parallel.hpp"

namespace nat {

using nlohmann::json;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

void check_valid(const Corpus& c, const std::string& what) {
  for (const Document& d : c.documents) {
    auto v = validate_document(d, c.schema);
    if (!v.empty())
      throw Error(what + " document '" + d.id + "': " + v.front().message);
  }
}

}  // namespace

Corpora load_corpora(const PipelineConfig& cfg) {
  Corpora out;
  const DataConfig& d = cfg.data;
  if (d.human.empty()) {
    MiniInvoiceConfig mi = d.benchmark;
    mi.n_documents = d.bench_human + d.bench_unlabeled + d.bench_test;
    Corpus all = generate_mini_invoices(mi, d.bench_seed);
    auto slice = [&](std::size_t from, std::size_t n) {
      Corpus c{all.schema, Provenance::human(), {}};
      c.documents.assign(all.documents.begin() + static_cast<long>(from),
                         all.documents.begin() + static_cast<long>(from + n));
      return c;
    };
    out.human = slice(0, d.bench_human);
    out.unlabeled_gold = slice(d.bench_human, d.bench_unlabeled);
    out.unlabeled = strip_labels(*out.unlabeled_gold);
    out.test = slice(d.bench_human + d.bench_unlabeled, d.bench_test);
    return out;
  }
  out.human = read_corpus(d.human);
  if (!d.unlabeled.empty()) {
    Corpus u = read_corpus(d.unlabeled);
    bool labeled = false;
    for (const Document& doc : u.documents) labeled = labeled || !doc.gold_spans.empty();
    if (labeled) out.unlabeled_gold = u;
    out.unlabeled = strip_labels(u);
  } else {
    out.unlabeled = Corpus{out.human.schema, Provenance::unlabeled(), {}};
  }
  if (!d.unlabeled_gold.empty()) out.unlabeled_gold = read_corpus(d.unlabeled_gold);
  if (!d.test.empty()) out.test = read_corpus(d.test);
  else out.test = Corpus{out.human.schema, Provenance::human(), {}};

  auto same = [&](const Corpus& c, const std::string& what) {
    if (!(c.schema == out.human.schema))
      throw Error("schema of the " + what + " corpus differs from the human corpus");
  };
  same(out.unlabeled, "unlabeled");
  same(out.test, "test");
  if (out.unlabeled_gold) same(*out.unlabeled_gold, "unlabeled gold");
  check_valid(out.human, "human");
  check_valid(out.unlabeled, "unlabeled");
  check_valid(out.test, "test");
  return out;
}

Corpus subsample(const Corpus& corpus, std::size_t n, std::uint64_t seed) {
  if (n > corpus.documents.size())
    throw Error("cannot subsample " + std::to_string(n) + " documents from " +
                std::to_string(corpus.documents.size()));
  std::vector<std::size_t> idx(corpus.documents.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return corpus.documents[a].id < corpus.documents[b].id;
  });
  Rng rng(seed, "subsample");
  rng.shuffle(idx);
  idx.resize(n);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return corpus.documents[a].id < corpus.documents[b].id;
  });
  Corpus out{corpus.schema, corpus.provenance, {}};
  for (std::size_t i : idx) out.documents.push_back(corpus.documents[i]);
  return out;
}

Budget::Budget(double t_max) : start_(Clock::now()), t_max_(t_max) {}

double Budget::elapsed() const {
  return std::chrono::duration<double>(Clock::now() - start_).count();
}

std::function<bool()> Budget::gate() {
  auto mark = std::make_shared<std::optional<Clock::time_point>>();
  return [this, mark] {
    const auto now = Clock::now();
    if (*mark) last_epoch_ = std::chrono::duration<double>(now - **mark).count();
    *mark = now;
    if (exhausted_) return false;
    const double e = std::chrono::duration<double>(now - start_).count();
    if (e >= t_max_ || e + last_epoch_ > t_max_) {
      exhausted_ = true;
      return false;
    }
    return true;
  };
}

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::kFull: return "full";
    case Scenario::kNoNoiseAware: return "no_na";
    case Scenario::kNoSynthetic: return "no_synth";
    case Scenario::kNoWeak: return "no_weak";
  }
  return "full";
}

BaselineKind parse_baseline_kind(const std::string& s) {
  if (s == "TX" || s == "tx") return BaselineKind::kTX;
  if (s == "SS" || s == "ss") return BaselineKind::kSS;
  if (s == "ST" || s == "st") return BaselineKind::kST;
  throw Error("unknown baseline '" + s + "' (expected TX, SS or ST)");
}

std::string to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::kTX: return "TX";
    case BaselineKind::kSS: return "SS";
    case BaselineKind::kST: return "ST";
  }
  return "TX";
}

std::vector<Document> predict_corpus(const TaggerParams& model,
                                     const Corpus& corpus, int jobs) {
  std::vector<Document> out(corpus.documents.size());
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    const Document& d = corpus.documents[i];
    Prediction p = predict(model, d, corpus.schema);
    out[i] = d;
    out[i].gold_spans = decode_bioes(p.tags).spans;
  });
  return out;
}

TrialResult evaluate_model(const TaggerParams& model, const Corpus& test,
                           int jobs, std::uint64_t seed) {
  SpanScores s = score_corpus(predict_corpus(model, test, jobs), test);
  return {seed, macro_f1(s), entity_scores(s, test.schema)};
}

namespace {

class Run {
 public:
  Run(const RunContext& ctx, RunRecord& rec)
      : ctx_(ctx), cfg_(ctx.config), rec_(rec) {
    rec_.seed = cfg_.seed;
  }

  void log(const std::string& s) const {
    if (ctx_.log) ctx_.log(s);
  }

  TrainConfig train_config(const std::string& stream) const {
    TrainConfig t;
    t.adam = cfg_.adam;
    t.batch_size = cfg_.batch_size;
    t.seed = derive_seed(cfg_.seed, stream);
    t.jobs = cfg_.jobs;
    t.keep_going = ctx_.budget.gate();
    return t;
  }

  PhaseLog& begin_phase(const std::string& name, int epochs) {
    PhaseLog p;
    p.name = name;
    p.epochs_planned = epochs;
    p.start = ctx_.budget.elapsed();
    rec_.phases.push_back(p);
    return rec_.phases.back();
  }

  void end_phase(PhaseLog& p) {
    p.end = ctx_.budget.elapsed();
    char buf[200];
    std::snprintf(buf, sizeof buf, "%s: %zu/%d epochs, %.1fs (elapsed %.1fs of t_max %.0fs)%s",
                  p.name.c_str(), p.losses.size(), p.epochs_planned,
                  p.end - p.start, p.end, ctx_.budget.t_max(),
                  ctx_.budget.exhausted() ? " [budget exhausted]" : "");
    log(buf);
  }

  PhaseCache& cache() { return ctx_.cache ? *ctx_.cache : own_; }

  const EntitySchema& schema() const { return ctx_.data.human.schema; }

  TaggerParams phase1() {
    PhaseCache& c = cache();
    if (c.phase1) {
      for (const PhaseLog& p : c.phase1_logs) rec_.phases.push_back(p);
      return *c.phase1;
    }
    ArchConfig arch = cfg_.arch;
    arch.num_tags = schema().num_tags();
    TaggerParams model;
    const std::size_t first = rec_.phases.size();
    if (cfg_.phase1 == PhaseOneMode::kCheckpoint) {
      PhaseLog& p = begin_phase("phase1", 0);
      model = load_tagger(cfg_.phase1_checkpoint);
      if (model.arch.num_tags != schema().num_tags())
        throw Error("phase1 checkpoint has " + std::to_string(model.arch.num_tags) +
                    " tags, the schema needs " + std::to_string(schema().num_tags()));
      end_phase(p);
    } else {
      model = init_params(arch, derive_seed(cfg_.seed, "phase1"));
      const int epochs = cfg_.phase1 == PhaseOneMode::kPretrain ? cfg_.phase1_epochs : 0;
      PhaseLog& p = begin_phase("phase1", epochs);
      if (epochs > 0 && !ctx_.data.unlabeled.documents.empty()) {
        PretrainConfig pc;
        pc.train = train_config("phase1");
        pc.epochs = epochs;
        pc.mask_rate = cfg_.mask_rate;
        p.losses = pretrain_masked(model, ctx_.data.unlabeled.documents, pc).epoch_losses;
      }
      end_phase(p);
    }
    if (!ctx_.budget.exhausted()) {
      c.phase1 = model;
      c.phase1_logs.assign(rec_.phases.begin() + static_cast<long>(first),
                           rec_.phases.end());
    }
    return model;
  }

  TaggerParams human_finetune(const TaggerParams& init, int epochs,
                              std::vector<double>* losses) {
    PhaseCache& c = cache();
    auto it = c.human_finetune.find(epochs);
    if (it != c.human_finetune.end()) return it->second;
    WeakSourceSpec spec;
    spec.source_id = "human_finetune";
    spec.kind = WeakSourceKind::kModelAttention;
    spec.epochs = epochs;
    spec.train = train_config("human_finetune");
    WeakSource s = fit_weak_source(spec, ctx_.data.human, nullptr, &init);
    if (losses) *losses = s.losses;
    TaggerParams out = std::get<TaggerParams>(s.model);
    if (!ctx_.budget.exhausted()) c.human_finetune.emplace(epochs, out);
    return out;
  }

  const WeakSource& source(const WeakSourceSpec& spec_in, const TaggerParams& p1) {
    PhaseCache& c = cache();
    auto it = c.sources.find(spec_in.source_id);
    if (it != c.sources.end()) return it->second;
    PhaseLog& p = begin_phase("fit/" + spec_in.source_id, spec_in.epochs);
    WeakSource s;
    if (spec_in.kind == WeakSourceKind::kModelAttention && spec_in.pretrain_epochs == 0) {
      s.spec = spec_in;
      s.spec.seed = derive_seed(cfg_.seed, "weak/" + spec_in.source_id);
      s.schema = schema();
      s.model = human_finetune(p1, spec_in.epochs, &p.losses);
    } else {
      WeakSourceSpec spec = spec_in;
      spec.seed = derive_seed(cfg_.seed, "weak/" + spec.source_id);
      spec.train = train_config("weak/" + spec.source_id);
      spec.arch = cfg_.arch;
      s = fit_weak_source(spec, ctx_.data.human, &ctx_.data.unlabeled, nullptr);
      p.losses = s.losses;
    }
    end_phase(p);
    return c.sources.emplace(spec_in.source_id, std::move(s)).first->second;
  }

  const WeakLabels& weak_labels(const WeakSource& src) {
    PhaseCache& c = cache();
    const std::string& id = src.spec.source_id;
    auto it = c.weak_labels.find(id);
    if (it == c.weak_labels.end())
      it = c.weak_labels
               .emplace(id, infer_weak_labels(src, ctx_.data.unlabeled,
                                              cfg_.noise_aware.threshold_for(id),
                                              cfg_.jobs))
               .first;
    const WeakLabels& w = it->second;
    rec_.weak_reports.push_back(w.report);
    rec_.weak_checksums[id] = hex64(weighted_checksum(schema(), w.docs));
    if (ctx_.data.unlabeled_gold)
      rec_.weak_scores[id] = score_weak_labels(w.docs, *ctx_.data.unlabeled_gold);
    return w;
  }

  std::vector<WeightedDocument> human_weighted() const {
    std::vector<WeightedDocument> out;
    for (const Document& d : ctx_.data.human.documents)
      out.push_back(make_weighted_from_gold(d, schema(), Provenance::human()));
    return out;
  }

  void train_stage(TaggerParams& model, const std::vector<WeightedDocument>& docs,
                   const LossSpec& loss, const std::string& stream, int epochs,
                   PhaseLog& log_to) {
    std::vector<TrainingExample> ex;
    ex.reserve(docs.size());
    for (const WeightedDocument& d : docs) ex.push_back(d.example());
    TrainConfig tc = train_config(stream);
    Trainer trainer(model, tc);
    for (int e = 0; e < epochs && tc.proceed(); ++e) {
      const double l = trainer.epoch(ex, loss);
      if (!std::isfinite(l))
        throw Error("non-finite training loss in " + log_to.name + " epoch " +
                    std::to_string(e + 1));
      log_to.losses.push_back(l);
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s epoch %d/%d loss %.5f (elapsed %.1fs of %.0fs)",
                    log_to.name.c_str(), e + 1, epochs, l, ctx_.budget.elapsed(),
                    ctx_.budget.t_max());
      log(buf);
    }
  }

  // Thresholding kept; every retained token gets weight 1.
  static std::vector<WeightedDocument> flatten(std::vector<WeightedDocument> docs) {
    for (WeightedDocument& d : docs)
      for (double& w : d.weights) w = w > 0 ? 1.0 : 0.0;
    return docs;
  }

  void phase2(TaggerParams& model, bool noise_aware, const TaggerParams& p1) {
    PhaseCache& c = cache();
    auto hit = c.phase2.find(noise_aware);
    for (const WeakSourceSpec& spec : cfg_.weak_sources) weak_labels(source(spec, p1));
    if (hit != c.phase2.end()) {
      model = hit->second;
      for (const PhaseLog& p : c.phase2_logs[noise_aware]) rec_.phases.push_back(p);
      return;
    }
    const std::size_t first = rec_.phases.size();
    const auto human = human_weighted();
    for (std::size_t i = 0; i < cfg_.weak_sources.size(); ++i) {
      if (ctx_.budget.exhausted()) break;
      const std::string& id = cfg_.weak_sources[i].source_id;
      const WeakLabels& w = cache().weak_labels.at(id);
      std::vector<WeightedDocument> docs = human;
      const auto weak = noise_aware ? w.docs : flatten(w.docs);
      docs.insert(docs.end(), weak.begin(), weak.end());
      PhaseLog& p = begin_phase("phase2/" + id, cfg_.phase2_epochs);
      const LossSpec loss = noise_aware ? cfg_.noise_aware.loss_spec() : LossSpec{};
      train_stage(model, docs, loss, "phase2/stage" + std::to_string(i + 1),
                  cfg_.phase2_epochs, p);
      end_phase(p);
    }
    if (!ctx_.budget.exhausted()) {
      c.phase2.emplace(noise_aware, model);
      c.phase2_logs[noise_aware].assign(rec_.phases.begin() + static_cast<long>(first),
                                        rec_.phases.end());
    }
  }

  void phase3(TaggerParams& model) {
    PhaseCache& c = cache();
    if (!c.synthetic) {
      const AugmentationRuleSet rules =
          cfg_.rules.empty() ? default_invoice_rules() : read_rule_set(cfg_.rules);
      Corpus s = build_synthetic_corpus(ctx_.data.human, rules, cfg_.seed, cfg_.jobs);
      c.synthetic = cfg_.drop_identity ? drop_identity_outputs(s) : s;
    }
    rec_.synthetic_documents = c.synthetic->documents.size();
    auto docs = human_weighted();
    for (const Document& d : c.synthetic->documents)
      docs.push_back(make_weighted_from_gold(d, schema(), Provenance::synthetic()));
    PhaseLog& p = begin_phase("phase3", cfg_.phase3_epochs);
    train_stage(model, docs, LossSpec{}, "phase3", cfg_.phase3_epochs, p);
    end_phase(p);
  }

  void finish(TaggerParams model) {
    if (!ctx_.data.test.documents.empty())
      rec_.evaluation = evaluate_model(model, ctx_.data.test, cfg_.jobs, cfg_.seed);
    rec_.budget_exhausted = ctx_.budget.exhausted();
    rec_.wall_seconds = ctx_.budget.elapsed();
    rec_.model = std::move(model);
  }

  const PipelineConfig& cfg() const { return cfg_; }
  const RunContext& ctx() const { return ctx_; }

 private:
  const RunContext& ctx_;
  const PipelineConfig& cfg_;
  RunRecord& rec_;
  PhaseCache own_;
};

}  // namespace

RunRecord run_nat(const RunContext& ctx, Scenario scenario) {
  RunRecord rec;
  rec.kind = scenario_name(scenario);
  Run run(ctx, rec);
  const PipelineConfig& cfg = ctx.config;
  TaggerParams p1 = run.phase1();
  TaggerParams model = p1;
  const bool weak = scenario != Scenario::kNoWeak && cfg.phase2 &&
                    !cfg.weak_sources.empty();
  if (weak && !ctx.budget.exhausted())
    run.phase2(model, scenario != Scenario::kNoNoiseAware && cfg.noise_aware_training, p1);
  if (scenario != Scenario::kNoSynthetic && cfg.phase3 && !ctx.budget.exhausted())
    run.phase3(model);
  run.finish(std::move(model));
  return rec;
}

RunRecord run_baseline(const RunContext& ctx, BaselineKind kind) {
  if (kind == BaselineKind::kSS) {
    RunRecord rec = run_nat(ctx, Scenario::kNoNoiseAware);
    rec.kind = "SS";
    return rec;
  }
  RunRecord rec;
  rec.kind = to_string(kind);
  Run run(ctx, rec);
  const PipelineConfig& cfg = ctx.config;
  TaggerParams p1 = run.phase1();
  PhaseLog& ft = run.begin_phase("finetune_h", cfg.tx_epochs);
  TaggerParams teacher = run.human_finetune(p1, cfg.tx_epochs, &ft.losses);
  run.end_phase(ft);
  if (kind == BaselineKind::kTX || ctx.budget.exhausted()) {
    run.finish(std::move(teacher));
    return rec;
  }

  double threshold = cfg.noise_aware.default_threshold;
  for (const WeakSourceSpec& s : cfg.weak_sources)
    if (s.kind == WeakSourceKind::kModelAttention) {
      threshold = cfg.noise_aware.threshold_for(s.source_id);
      break;
    }
  const auto human = run.human_weighted();
  for (int r = 1; r <= cfg.st_rounds && !ctx.budget.exhausted(); ++r) {
    WeakSource src;
    src.spec.source_id = "teacher";
    src.schema = ctx.data.human.schema;
    src.model = teacher;
    WeakLabels w = infer_weak_labels(src, ctx.data.unlabeled, threshold, cfg.jobs);
    rec.weak_reports.push_back(w.report);
    rec.weak_checksums["teacher/round" + std::to_string(r)] =
        hex64(weighted_checksum(ctx.data.human.schema, w.docs));
    std::vector<WeightedDocument> docs = human;
    for (WeightedDocument& d : w.docs) {
      for (double& x : d.weights) x = x > 0 ? 1.0 : 0.0;
      docs.push_back(std::move(d));
    }
    TaggerParams student = p1;
    PhaseLog& p = run.begin_phase("st/round" + std::to_string(r), cfg.phase2_epochs);
    run.train_stage(student, docs, LossSpec{}, "phase2/stage" + std::to_string(r),
                    cfg.phase2_epochs, p);
    run.end_phase(p);
    teacher = std::move(student);
  }
  run.finish(std::move(teacher));
  return rec;
}

AblationResult run_ablation(const RunContext& ctx) {
  const Scenario order[] = {Scenario::kFull, Scenario::kNoNoiseAware,
                            Scenario::kNoSynthetic, Scenario::kNoWeak};
  AblationResult res;
  res.seeds = ctx.config.ablation_seeds;
  for (Scenario s : order) res.rows.push_back({scenario_name(s), {}, 0, 0});
  for (std::uint64_t seed : res.seeds) {
    PipelineConfig cfg = ctx.config;
    cfg.seed = seed;
    PhaseCache cache;
    RunContext sub{cfg, ctx.data, ctx.budget, &cache, ctx.log};
    for (std::size_t k = 0; k < 4; ++k) {
      if (ctx.log) ctx.log("ablation seed " + std::to_string(seed) + " scenario " +
                           scenario_name(order[k]));
      RunRecord r = run_nat(sub, order[k]);
      res.rows[k].f1.push_back(r.evaluation ? r.evaluation->macro_f1 : 0.0);
    }
    RunRecord tx = run_baseline(sub, BaselineKind::kTX);
    res.tx_f1.push_back(tx.evaluation ? tx.evaluation->macro_f1 : 0.0);
  }
  for (AblationRow& row : res.rows) row.mean = mean_and_std(row.f1).first;
  for (AblationRow& row : res.rows) row.delta = res.rows[0].mean - row.mean;
  res.tx_mean = mean_and_std(res.tx_f1).first;
  res.budget_exhausted = ctx.budget.exhausted();
  return res;
}

std::string ablation_table(const AblationResult& r) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %10s %10s\n", "scenario", "macro_f1", "delta_f1");
  os << buf;
  for (const AblationRow& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%-10s %10.2f %10.2f\n", row.scenario.c_str(),
                  100 * row.mean, 100 * row.delta);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "%-10s %10.2f\n", "tx", 100 * r.tx_mean);
  os << buf;
  return os.str();
}

json ablation_json(const AblationResult& r) {
  json j;
  j["seeds"] = r.seeds;
  j["scenarios"] = json::array();
  for (const AblationRow& row : r.rows)
    j["scenarios"].push_back({{"scenario", row.scenario},
                              {"macro_f1", row.f1},
                              {"mean_macro_f1", row.mean},
                              {"delta_f1", row.delta}});
  j["tx"] = {{"macro_f1", r.tx_f1}, {"mean_macro_f1", r.tx_mean}};
  j["budget_exhausted"] = r.budget_exhausted;
  return j;
}

CurveResult run_curve(const RunContext& ctx) {
  const PipelineConfig& base = ctx.config;
  std::map<std::pair<std::size_t, std::uint64_t>, double> tx_scores;
  std::map<std::uint64_t, PhaseCache> phase1_by_seed;
  auto nat_fn = [&](std::size_t h, std::uint64_t seed) {
    PipelineConfig cfg = base;
    cfg.seed = seed;
    Corpora data = ctx.data;
    data.human = subsample(ctx.data.human, h, derive_seed(seed, "curve"));
    PhaseCache cache;
    PhaseCache& shared = phase1_by_seed[seed];
    cache.phase1 = shared.phase1;
    cache.phase1_logs = shared.phase1_logs;
    RunContext sub{cfg, data, ctx.budget, &cache, ctx.log};
    if (ctx.log) ctx.log("curve |H|=" + std::to_string(h) + " seed " + std::to_string(seed));
    RunRecord nat = run_nat(sub, Scenario::kFull);
    if (!shared.phase1 && cache.phase1) {
      shared.phase1 = cache.phase1;
      shared.phase1_logs = cache.phase1_logs;
    }
    RunRecord tx = run_baseline(sub, BaselineKind::kTX);
    tx_scores[{h, seed}] = tx.evaluation ? tx.evaluation->macro_f1 : 0.0;
    return nat.evaluation ? nat.evaluation->macro_f1 : 0.0;
  };
  CurveResult r;
  r.nat = label_efficiency_curve(nat_fn, base.curve_sizes, base.curve_trials, base.seed);
  r.tx = label_efficiency_curve(
      [&](std::size_t h, std::uint64_t seed) { return tx_scores.at({h, seed}); },
      base.curve_sizes, base.curve_trials, base.seed);
  r.saved = saved_labels(r.nat, r.tx);
  r.spearman = curve_spearman(r.nat);
  r.budget_exhausted = ctx.budget.exhausted();
  return r;
}

json curve_json(const CurveResult& r) {
  auto pts = [](const std::vector<CurvePoint>& c) {
    json a = json::array();
    for (const CurvePoint& p : c)
      a.push_back({{"h_size", p.h_size},
                   {"mean_f1", p.mean},
                   {"std_f1", p.stddev},
                   {"values", p.values}});
    return a;
  };
  json j;
  j["nat"] = pts(r.nat);
  j["tx"] = pts(r.tx);
  j["spearman"] = r.spearman;
  if (r.saved)
    j["saved_labels"] = {{"h_size", r.saved->h_size},
                         {"target_f1", r.saved->target_f1},
                         {"baseline_size", r.saved->baseline_size},
                         {"saved_fraction", r.saved->saved_fraction}};
  else
    j["saved_labels"] = nullptr;
  j["budget_exhausted"] = r.budget_exhausted;
  return j;
}

namespace {

json pr_json(const PrecisionRecall& p) {
  json j;
  j["precision"] = p.precision ? json(*p.precision) : json(nullptr);
  j["recall"] = p.recall ? json(*p.recall) : json(nullptr);
  j["true_positives"] = p.true_pos;
  j["predicted"] = p.predicted;
  j["gold"] = p.gold;
  return j;
}

}  // namespace

json run_record_json(const RunRecord& r) {
  json j;
  j["kind"] = r.kind;
  j["seed"] = r.seed;
  j["config"] = r.config;
  j["phases"] = json::array();
  for (const PhaseLog& p : r.phases)
    j["phases"].push_back({{"name", p.name},
                           {"epochs_planned", p.epochs_planned},
                           {"epochs_run", p.losses.size()},
                           {"losses", p.losses}});
  j["weak_sources"] = json::array();
  for (const WeakLabelReport& w : r.weak_reports) {
    json e = {{"source_id", w.source_id},
              {"threshold", w.threshold},
              {"documents", w.documents},
              {"retained_fraction", w.retained_fraction},
              {"spans_per_type", w.spans_per_type}};
    auto cs = r.weak_checksums.find(w.source_id);
    if (cs != r.weak_checksums.end()) e["checksum"] = cs->second;
    auto sc = r.weak_scores.find(w.source_id);
    if (sc != r.weak_scores.end()) {
      e["token"] = pr_json(sc->second.token);
      e["span"] = pr_json(sc->second.span);
    }
    j["weak_sources"].push_back(e);
  }
  j["weak_checksums"] = r.weak_checksums;
  j["synthetic_documents"] = r.synthetic_documents;
  if (r.evaluation) {
    json ents = json::array();
    for (const EntityScore& e : r.evaluation->entities)
      ents.push_back({{"type", e.type}, {"precision", e.precision},
                      {"recall", e.recall}, {"f1", e.f1}, {"included", e.included}});
    j["evaluation"] = {{"macro_f1", r.evaluation->macro_f1}, {"entities", ents}};
  } else {
    j["evaluation"] = nullptr;
  }
  j["checkpoint"] = r.checkpoint.generic_string();
  j["budget_exhausted"] = r.budget_exhausted;
  return j;
}

json timing_json(const RunRecord& r, double t_max) {
  json j;
  j["t_max"] = t_max;
  j["wall_seconds"] = r.wall_seconds;
  j["phases"] = json::array();
  for (const PhaseLog& p : r.phases)
    j["phases"].push_back({{"name", p.name}, {"start", p.start}, {"end", p.end}});
  return j;
}

}  // namespace nat
