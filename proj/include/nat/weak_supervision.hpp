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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nat/noise_aware.hpp"
#include "nat/window_tagger.hpp"

namespace nat {

enum class WeakSourceKind { kModelAttention, kModelWindow, kDictionary };

WeakSourceKind parse_weak_source_kind(const std::string& s);
std::string to_string(WeakSourceKind k);

struct WeakSourceSpec {
  std::string source_id;
  WeakSourceKind kind = WeakSourceKind::kModelAttention;

  // Model kinds.
  int epochs = 30;
  std::uint64_t seed = 0;
  TrainConfig train;
  ArchConfig arch;         ///< model_attention; num_tags filled from schema
  WindowArch window_arch;  ///< model_window; num_tags filled from schema
  /// model_attention only: masked-token pre-training on the unlabeled pool
  /// before fine-tuning, when no initial parameters are supplied.
  int pretrain_epochs = 0;

  // Dictionary kind: phrase -> entity type, inline or from a JSON file.
  std::map<std::string, std::string> lexicon;
  std::filesystem::path lexicon_path;
  double match_confidence = 1.0;
  double default_confidence = 0.95;

  /// Fraction of predicted entity spans whose type is swapped for a random
  /// other type at inference, before thresholding (confidence untouched).
  /// Lets benchmarks dial the noise level of a source.
  double corruption = 0.0;

  /// Overrides the pipeline-wide threshold for this source.
  std::optional<double> threshold;
};

/// Lexicon compiled to lowercase word sequences, longest first.
struct CompiledLexicon {
  struct Entry {
    std::vector<std::string> words;
    int type;
  };
  std::vector<Entry> entries;
};

struct WeakSource {
  WeakSourceSpec spec;
  EntitySchema schema;
  std::variant<TaggerParams, WindowParams, CompiledLexicon> model;
  std::vector<double> losses;  ///< per training epoch; empty for dictionaries
};

/// Reads a lexicon file: a JSON object mapping phrase -> entity type.
std::map<std::string, std::string> read_lexicon(const std::filesystem::path& p);

/// model_attention trains the layout tagger, starting from `init` when given
/// (otherwise a fresh initialization, optionally pre-trained on
/// `unlabeled`); model_window trains the windowed tagger; dictionary
/// compiles the lexicon. Throws Error on empty H (model kinds) or an empty
/// lexicon.
WeakSource fit_weak_source(const WeakSourceSpec& spec, const Corpus& human,
                           const Corpus* unlabeled = nullptr,
                           const TaggerParams* init = nullptr);

/// Raw per-token tags and confidences of one source on one document.
Prediction weak_predict(const WeakSource& source, const Document& doc);

struct WeakLabelReport {
  std::string source_id;
  double threshold = 0;
  std::size_t documents = 0;
  double retained_fraction = 0;  ///< over all tokens
  std::map<std::string, std::size_t> spans_per_type;  ///< retained spans
};

struct WeakLabels {
  std::vector<WeightedDocument> docs;
  WeakLabelReport report;
};

WeakLabels infer_weak_labels(const WeakSource& source, const Corpus& unlabeled,
                             double threshold, int jobs = 1);

struct PrecisionRecall {
  std::optional<double> precision;  ///< nullopt when nothing was predicted
  std::optional<double> recall;     ///< nullopt when nothing was gold
  std::size_t true_pos = 0, predicted = 0, gold = 0;
};

struct WeakLabelScore {
  PrecisionRecall token;  ///< all entity types pooled
  PrecisionRecall span;
  std::map<std::string, PrecisionRecall> token_by_type;
  std::map<std::string, PrecisionRecall> span_by_type;
};

/// Scores retained (weight > 0) weak labels against sealed gold spans.
/// Token level: a retained token with a non-O weak tag is correct when its
/// entity type equals the gold type. Span level: a weak span whose tokens
/// are all retained is correct on exact (type, range) match.
WeakLabelScore score_weak_labels(const std::vector<WeightedDocument>& weak,
                                 const Corpus& sealed_gold);

}  // namespace nat
