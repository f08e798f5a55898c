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

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nat/corpus_io.hpp"

namespace nat {

struct TypeCounts {
  std::size_t tp = 0, fp = 0, fn = 0;

  bool present() const { return tp + fp + fn > 0; }
  double precision() const { return tp + fp ? double(tp) / double(tp + fp) : 0.0; }
  double recall() const { return tp + fn ? double(tp) / double(tp + fn) : 0.0; }
  double f1() const {
    return tp ? 2.0 * double(tp) / double(2 * tp + fp + fn) : 0.0;
  }
  bool operator==(const TypeCounts&) const = default;
};

/// Per-entity-type confusion counts, indexed by schema type.
struct SpanScores {
  std::vector<TypeCounts> by_type;

  explicit SpanScores(std::size_t n_types = 0) : by_type(n_types) {}
  SpanScores& operator+=(const SpanScores& other);
  bool operator==(const SpanScores&) const = default;
};

/// Exact-match scoring of one document: type and token range must agree,
/// each gold span is matched at most once.
SpanScores span_scores(const std::vector<EntitySpan>& pred,
                       const std::vector<EntitySpan>& gold,
                       const EntitySchema& schema);

/// Unweighted mean of per-type F1 over types with any gold or predicted span.
/// 0 when no type qualifies.
double macro_f1(const SpanScores& scores);

struct EntityScore {
  std::string type;
  double precision = 0, recall = 0, f1 = 0;
  std::size_t tp = 0, fp = 0, fn = 0;
  bool included = false;
};
std::vector<EntityScore> entity_scores(const SpanScores& scores,
                                       const EntitySchema& schema);

/// Scores predicted documents against gold documents matched by id.
SpanScores score_corpus(const std::vector<Document>& predicted,
                        const Corpus& gold);

struct TrialResult {
  std::uint64_t seed = 0;
  double macro_f1 = 0;
  std::vector<EntityScore> entities;
};

struct TrialReport {
  std::vector<TrialResult> trials;
  double mean = 0;
  double stddev = 0;  ///< sample (n - 1) standard deviation
  /// Per-entity precision/recall/F1 averaged over trials that include the type.
  std::vector<EntityScore> entities;

  std::size_t n_trials() const { return trials.size(); }
};

constexpr int kDefaultTrials = 9;

/// Mean and sample standard deviation; std is 0 for fewer than two values.
std::pair<double, double> mean_and_std(const std::vector<double>& v);

class TrialAbort : public Error {
 public:
  TrialAbort(const std::string& what, TrialReport partial)
      : Error(what), partial_(std::move(partial)) {}
  const TrialReport& partial() const { return partial_; }

 private:
  TrialReport partial_;
};

using TrialFn = std::function<TrialResult(std::uint64_t seed)>;

/// Runs seeds base_seed .. base_seed + n - 1. A failing trial throws
/// TrialAbort carrying the completed trials.
TrialReport run_trials(const TrialFn& fn, int n_trials = kDefaultTrials,
                       std::uint64_t base_seed = 0);
TrialReport summarize_trials(std::vector<TrialResult> trials);

struct CurvePoint {
  std::size_t h_size = 0;
  double mean = 0, stddev = 0;
  std::vector<double> values;  ///< one macro-F1 per trial
};

using CurveFn = std::function<double(std::size_t h_size, std::uint64_t seed)>;

/// One row per size, sorted by size.
std::vector<CurvePoint> label_efficiency_curve(const CurveFn& fn,
                                               std::vector<std::size_t> sizes,
                                               int n_trials,
                                               std::uint64_t base_seed);

/// Smallest |H| (linear interpolation along the curve) at which `baseline`
/// reaches `target` F1. Clamped to the smallest measured size; nullopt when
/// the curve never reaches the target.
std::optional<double> size_to_reach(const std::vector<CurvePoint>& baseline,
                                    double target);

struct SavedLabels {
  std::size_t h_size = 0;      ///< size of the reference run
  double target_f1 = 0;        ///< its mean F1
  double baseline_size = 0;    ///< interpolated baseline size matching it
  double saved_fraction = 0;   ///< 1 - h_size / baseline_size
};

/// Uses the largest size of `curve` whose mean F1 the baseline reaches.
std::optional<SavedLabels> saved_labels(const std::vector<CurvePoint>& curve,
                                        const std::vector<CurvePoint>& baseline);

/// Spearman rank correlation with average ranks for ties; 0 when either
/// variable is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Spearman over every (size, trial value) pair of a curve.
double curve_spearman(const std::vector<CurvePoint>& curve);

std::string curve_csv(const std::vector<CurvePoint>& curve);
std::string trial_report_json(const TrialReport& report);
std::string trial_report_text(const TrialReport& report);

}  // namespace nat
