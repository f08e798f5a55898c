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


#include <set>

#include <gtest/gtest.h>

#include "nat/pipeline.hpp"
#include "test_support.hpp"

namespace nat {
namespace {

// A few seconds per run: tiny model, tiny corpora, few epochs.
PipelineConfig small_config(std::vector<std::string> extra = {}) {
  std::vector<std::string> ov = {
      "data.benchmark.human=8",      "data.benchmark.unlabeled=10",
      "data.benchmark.test=8",       "model.word_dim=8",
      "model.geo_dim=4",             "model.model_dim=8",
      "model.heads=2",               "model.ff_dim=12",
      "model.vocab_size=256",        "phase1.epochs=1",
      "weak_sources.0.epochs=2",     "weak_sources.1.epochs=2",
      "weak_sources.1.window.hidden=8", "phase2.epochs=2",
      "phase3.epochs=1",             "baseline.tx_epochs=2"};
  for (auto& e : extra) ov.push_back(e);
  return config_from_json(load_config_json("", ov));
}

struct Harness {
  explicit Harness(PipelineConfig c)
      : config(std::move(c)), data(load_corpora(config)), budget(config.t_max) {}
  RunContext ctx(PhaseCache* cache = nullptr) {
    return {config, data, budget, cache, {}};
  }
  PipelineConfig config;
  Corpora data;
  Budget budget;
};

TEST(Corpora, BenchmarkSplitsAreDisjointAndSealed) {
  Harness h(small_config());
  EXPECT_EQ(h.data.human.size(), 8u);
  EXPECT_EQ(h.data.unlabeled.size(), 10u);
  EXPECT_EQ(h.data.test.size(), 8u);
  ASSERT_TRUE(h.data.unlabeled_gold);
  std::set<std::string> ids;
  for (const Corpus* c : {&h.data.human, &h.data.unlabeled, &h.data.test})
    for (const Document& d : c->documents) EXPECT_TRUE(ids.insert(d.id).second);
  for (const Document& d : h.data.unlabeled.documents) EXPECT_TRUE(d.gold_spans.empty());
}

TEST(Corpora, SubsampleIsDeterministicAndSorted) {
  Harness h(small_config());
  const Corpus a = subsample(h.data.human, 3, 5), b = subsample(h.data.human, 3, 5);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_TRUE(std::is_sorted(a.documents.begin(), a.documents.end(),
                             [](const Document& x, const Document& y) { return x.id < y.id; }));
  EXPECT_THROW(subsample(h.data.human, 99, 5), Error);
}

TEST(RunNat, PhasesInOrderAndDeterministic) {
  Harness h(small_config());
  const RunRecord a = run_nat(h.ctx());
  const RunRecord b = run_nat(h.ctx());
  std::vector<std::string> names;
  for (const PhaseLog& p : a.phases) names.push_back(p.name);
  ASSERT_GE(names.size(), 4u);
  EXPECT_EQ(names.front(), "phase1");
  EXPECT_EQ(names.back(), "phase3");
  EXPECT_EQ(run_record_json(a).dump(), run_record_json(b).dump());
  EXPECT_EQ(tagger_bytes(a.model), tagger_bytes(b.model));
  EXPECT_FALSE(a.budget_exhausted);
  ASSERT_TRUE(a.evaluation);
  EXPECT_EQ(a.synthetic_documents, 8u * 4u * 5u);
  EXPECT_EQ(a.weak_checksums.size(), 2u);
  for (std::size_t i = 1; i < a.phases.size(); ++i)
    EXPECT_LE(a.phases[i - 1].end, a.phases[i].start);
}

TEST(RunNat, TinyBudgetDegradesWithValidCheckpoint) {
  Harness h(small_config({"t_max=0.000001"}));
  const RunRecord r = run_nat(h.ctx());
  EXPECT_TRUE(r.budget_exhausted);
  EXPECT_TRUE(r.model.params.all_finite());
  EXPECT_GT(r.model.params.size(), 0u);
  testing::TempDir tmp;
  save_tagger(r.model, tmp.path() / "m.ckpt");
  const TaggerParams back = load_tagger(tmp.path() / "m.ckpt");
  EXPECT_EQ(back.arch, r.model.arch);
  ASSERT_EQ(back.params.size(), r.model.params.size());
  for (std::size_t i = 0; i < back.params.size(); ++i)
    for (std::size_t k = 0; k < back.params[i].size(); ++k)
      ASSERT_EQ(back.params[i].data[k],
                static_cast<double>(static_cast<float>(r.model.params[i].data[k])));
  EXPECT_EQ(tagger_bytes(back), tagger_bytes(r.model));
}

TEST(RunNat, BudgetStopsWithinOneEpoch) {
  Harness probe(small_config());
  const RunRecord full = run_nat(probe.ctx());
  double longest = 0;
  for (const PhaseLog& p : full.phases)
    if (!p.losses.empty())
      longest = std::max(longest, (p.end - p.start) / static_cast<double>(p.losses.size()));
  const double t_max = 0.5 * full.wall_seconds;
  Harness h(small_config({"t_max=" + std::to_string(t_max)}));
  const RunRecord r = run_nat(h.ctx());
  EXPECT_TRUE(r.budget_exhausted);
  // Setup outside the epoch loops (corpus building, inference) is included,
  // so allow a generous margin above one epoch.
  EXPECT_LE(r.wall_seconds, t_max + 2 * longest + 1.0);
}

TEST(Scenarios, ShareArtifactsAndSkipPhases) {
  Harness h(small_config());
  PhaseCache a, b;
  const RunRecord full = run_nat(h.ctx(&a), Scenario::kFull);
  const RunRecord no_weak = run_nat(h.ctx(&b), Scenario::kNoWeak);
  ASSERT_TRUE(a.phase1 && b.phase1);
  EXPECT_EQ(tagger_bytes(*a.phase1), tagger_bytes(*b.phase1));
  for (const PhaseLog& p : no_weak.phases) EXPECT_EQ(p.name.find("phase2"), std::string::npos);
  const RunRecord no_synth = run_nat(h.ctx(&a), Scenario::kNoSynthetic);
  for (const PhaseLog& p : no_synth.phases) EXPECT_NE(p.name, "phase3");
  const RunRecord no_na = run_nat(h.ctx(&a), Scenario::kNoNoiseAware);
  EXPECT_EQ(no_na.weak_checksums, full.weak_checksums);
  EXPECT_EQ(no_na.kind, "no_na");
}

TEST(Baselines, SemiSupervisedUsesIdenticalWeakCorpora) {
  // Low thresholds so the tiny weak models keep some tokens.
  Harness h(small_config({"weak_sources.0.threshold=0.1", "weak_sources.1.threshold=0.1"}));
  const RunRecord nat = run_nat(h.ctx());
  const RunRecord ss = run_baseline(h.ctx(), BaselineKind::kSS);
  EXPECT_EQ(ss.kind, "SS");
  EXPECT_EQ(ss.weak_checksums, nat.weak_checksums);
  EXPECT_NE(tagger_bytes(ss.model), tagger_bytes(nat.model));
}

TEST(Baselines, SelfTrainingFirstRoundEqualsSemiSupervised) {
  Harness h(small_config({"baseline.st_rounds=1", "phase3.enabled=false",
                          "weak_sources=[{\"id\":\"attention\",\"kind\":\"model_attention\",\"epochs\":2}]"}));
  ASSERT_EQ(h.config.weak_sources.size(), 1u);
  const RunRecord ss = run_baseline(h.ctx(), BaselineKind::kSS);
  const RunRecord st = run_baseline(h.ctx(), BaselineKind::kST);
  EXPECT_EQ(tagger_bytes(st.model), tagger_bytes(ss.model));
}

TEST(Baselines, TransferWithoutFinetuneIsPhaseOne) {
  Harness h(small_config({"baseline.tx_epochs=0"}));
  PhaseCache cache;
  const RunRecord tx = run_baseline(h.ctx(&cache), BaselineKind::kTX);
  ASSERT_TRUE(cache.phase1);
  EXPECT_EQ(tagger_bytes(tx.model), tagger_bytes(*cache.phase1));
  EXPECT_EQ(tx.evaluation->macro_f1,
            evaluate_model(*cache.phase1, h.data.test).macro_f1);
}

TEST(Ablation, FourScenariosWithDeltas) {
  Harness h(small_config({"ablation.seeds=[0]"}));
  const AblationResult r = run_ablation(h.ctx());
  ASSERT_EQ(r.rows.size(), 4u);
  std::vector<std::string> names;
  for (const AblationRow& row : r.rows) names.push_back(row.scenario);
  EXPECT_EQ(names, (std::vector<std::string>{"full", "no_na", "no_synth", "no_weak"}));
  EXPECT_EQ(r.rows[0].delta, 0.0);
  for (const AblationRow& row : r.rows)
    EXPECT_DOUBLE_EQ(row.delta, r.rows[0].mean - row.mean);
  EXPECT_EQ(ablation_json(r)["scenarios"].size(), 4u);
}

TEST(Curve, SizesTrialsAndSavedLabels) {
  Harness h(small_config({"curve.sizes=[4,2]", "curve.trials=2"}));
  const CurveResult r = run_curve(h.ctx());
  ASSERT_EQ(r.nat.size(), 2u);
  EXPECT_EQ(r.nat[0].h_size, 2u);
  EXPECT_EQ(r.nat[1].values.size(), 2u);
  EXPECT_EQ(r.tx.size(), 2u);
  const auto j = curve_json(r);
  EXPECT_TRUE(j.contains("spearman"));
}

}  // namespace
}  // namespace nat
