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

#include <map>
#include <string>
#include <vector>

#include "nat/corpus_io.hpp"
#include "nat/losses.hpp"
#include "nat/tagger.hpp"

namespace nat {

struct NoiseAwareConfig {
  double lambda = 0.1;
  /// Threshold applied to sources without an override.
  double default_threshold = 0.9;
  std::map<std::string, double> thresholds;  ///< per weak source id
  GradientMode gradient_mode = GradientMode::kDetached;

  double threshold_for(const std::string& source_id) const;
  void validate() const;
  LossSpec loss_spec() const {
    return {LossKind::kNoiseAware, lambda, gradient_mode};
  }
};

/// A document with its assigned tags and per-token training weights.
struct WeightedDocument {
  Document document;
  TagSequence tags;
  std::vector<double> weights;
  Provenance provenance;

  /// Tags as classifier target ids.
  std::vector<int> target_ids() const;
  TrainingExample example() const;
};

/// Reflects every tensor through its own extrema: p' = max + min - p.
/// Throws Error on an empty tensor or non-finite values.
TaggerParams opposite_params(const TaggerParams& params);

/// Weighted noise-aware loss over one sequence, normalized by the number of
/// tokens with non-zero weight (0 when there are none).
double noise_aware_loss(const RowMatrix& main_logits,
                        const RowMatrix& opposite_logits,
                        const TagSequence& targets,
                        const std::vector<double>& weights,
                        const NoiseAwareConfig& config);

/// Mean cross-entropy over all tokens.
double cross_entropy(const RowMatrix& logits, const TagSequence& targets);

struct ThresholdResult {
  WeightedDocument doc;
  double retained_fraction = 0;
};

/// weight = confidence if confidence >= C else 0. If any token of a predicted
/// entity span falls below C the whole span is masked.
ThresholdResult weight_and_threshold(const Document& doc,
                                     const TagSequence& tags,
                                     const std::vector<double>& confidence,
                                     const std::string& source_id,
                                     double threshold);

/// Gold tags with every weight exactly 1. Throws Error on an unlabeled doc.
WeightedDocument make_human_weighted(const Document& doc,
                                     const EntitySchema& schema);

/// Same, but also accepts documents without gold spans (all O).
WeightedDocument make_weighted_from_gold(const Document& doc,
                                         const EntitySchema& schema,
                                         Provenance provenance);

/// Canonical-format I/O for weighted corpora (spans = decoded tags).
void write_weighted_corpus(const EntitySchema& schema,
                           const Provenance& provenance,
                           const std::vector<WeightedDocument>& docs,
                           const std::filesystem::path& path);
std::vector<WeightedDocument> read_weighted_corpus(
    const std::filesystem::path& path, EntitySchema* schema = nullptr);
std::uint64_t weighted_checksum(const EntitySchema& schema,
                                const std::vector<WeightedDocument>& docs);

}  // namespace nat
