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

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nat/augmentation.hpp"
#include "nat/config.hpp"
#include "nat/evaluation.hpp"

namespace nat {

struct Corpora {
  Corpus human, unlabeled, test;
  std::optional<Corpus> unlabeled_gold;
};

/// Reads the configured corpus files, or generates the mini-invoice
/// benchmark when none are given. Validates every document.
Corpora load_corpora(const PipelineConfig& config);

/// First `n` human documents after a seeded shuffle, sorted by id.
Corpus subsample(const Corpus& corpus, std::size_t n, std::uint64_t seed);

/// Wall-clock budget checked at epoch boundaries.
class Budget {
 public:
  using Clock = std::chrono::steady_clock;

  explicit Budget(double t_max_seconds);

  double elapsed() const;
  double t_max() const { return t_max_; }
  bool exhausted() const { return exhausted_; }

  /// A gate for one training loop: call before every epoch. Stops when the
  /// budget is spent or the previous epoch's duration would overrun it.
  std::function<bool()> gate();

 private:
  Clock::time_point start_;
  double t_max_;
  double last_epoch_ = 0;
  bool exhausted_ = false;
};

enum class Scenario { kFull, kNoNoiseAware, kNoSynthetic, kNoWeak };
std::string scenario_name(Scenario s);

enum class BaselineKind { kTX, kSS, kST };
BaselineKind parse_baseline_kind(const std::string& s);
std::string to_string(BaselineKind k);

struct PhaseLog {
  std::string name;
  int epochs_planned = 0;
  std::vector<double> losses;  ///< one per completed epoch
  double start = 0, end = 0;   ///< seconds since the run started
};

struct RunRecord {
  std::string kind;  ///< "nat", a scenario or a baseline name
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::vector<PhaseLog> phases;
  std::vector<WeakLabelReport> weak_reports;
  std::map<std::string, std::string> weak_checksums;  ///< hex, per source
  std::map<std::string, WeakLabelScore> weak_scores;  ///< when sealed gold known
  std::size_t synthetic_documents = 0;
  std::optional<TrialResult> evaluation;
  bool budget_exhausted = false;
  std::filesystem::path checkpoint;
  double wall_seconds = 0;

  TaggerParams model;  ///< final parameters (not serialized)
};

/// Deterministic report: everything except wall-clock measurements.
nlohmann::json run_record_json(const RunRecord& r);
/// Wall-clock measurements only.
nlohmann::json timing_json(const RunRecord& r, double t_max);

/// Intermediate results shared between runs with the same seed and data,
/// so ablation scenarios and baselines start from identical artifacts.
struct PhaseCache {
  std::optional<TaggerParams> phase1;
  std::vector<PhaseLog> phase1_logs;
  /// Human-only fine-tunes of the Phase I model, keyed by epoch count.
  std::map<int, TaggerParams> human_finetune;
  std::map<std::string, WeakSource> sources;
  std::map<std::string, WeakLabels> weak_labels;
  std::optional<Corpus> synthetic;
  /// Phase II output per noise-aware setting (true = enabled).
  std::map<bool, TaggerParams> phase2;
  std::map<bool, std::vector<PhaseLog>> phase2_logs;
};

struct RunContext {
  const PipelineConfig& config;
  const Corpora& data;
  Budget& budget;
  PhaseCache* cache = nullptr;
  /// Logs progress lines; may be empty.
  std::function<void(const std::string&)> log;
};

RunRecord run_nat(const RunContext& ctx, Scenario scenario = Scenario::kFull);
RunRecord run_baseline(const RunContext& ctx, BaselineKind kind);

struct AblationRow {
  std::string scenario;
  std::vector<double> f1;  ///< per seed
  double mean = 0;
  double delta = 0;  ///< mean(full) - mean(scenario); 0 for full
};

struct AblationResult {
  std::vector<AblationRow> rows;  ///< full, no_na, no_synth, no_weak
  std::vector<std::uint64_t> seeds;
  /// TX baseline mean over the same seeds (free from the shared cache).
  std::vector<double> tx_f1;
  double tx_mean = 0;
  bool budget_exhausted = false;
};

/// Four scenarios on identical seeds and corpora. Seeds come from
/// config.ablation_seeds.
AblationResult run_ablation(const RunContext& ctx);
std::string ablation_table(const AblationResult& r);
nlohmann::json ablation_json(const AblationResult& r);

struct CurveResult {
  std::vector<CurvePoint> nat, tx;
  std::optional<SavedLabels> saved;
  double spearman = 0;
  bool budget_exhausted = false;
};

/// NAT and TX macro-F1 over subsampled H sizes (config.curve_sizes,
/// config.curve_trials trials each, seeds config.seed + trial).
CurveResult run_curve(const RunContext& ctx);
nlohmann::json curve_json(const CurveResult& r);

/// Predicts every test document and scores it.
TrialResult evaluate_model(const TaggerParams& model, const Corpus& test,
                           int jobs = 1, std::uint64_t seed = 0);

/// Applies the model to each document, returning copies with predicted spans.
std::vector<Document> predict_corpus(const TaggerParams& model,
                                     const Corpus& corpus, int jobs = 1);

/// Hex rendering of a 64-bit checksum.
std::string hex64(std::uint64_t v);

}  // namespace nat
