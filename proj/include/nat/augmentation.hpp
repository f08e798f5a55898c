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
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nat/corpus_io.hpp"
#include "nat/value_formats.hpp"

namespace nat {

struct SynonymRule {
  std::vector<std::string> phrases;   ///< key phrases, matched case-insensitively
  std::vector<std::string> synonyms;  ///< replacement drawn uniformly from here
};

struct CoordinateRule {
  bool enabled = true;
  double max_shift = 0.1;     ///< fraction of the page dimension
  double probability = 0.5;   ///< per span (or per token)
  bool per_token = false;     ///< shift tokens independently instead of spans
};

struct BBoxRule {
  bool enabled = true;
  double max_expand = 0.2;
  double probability = 0.5;
};

struct AugmentationRuleSet {
  std::vector<SynonymRule> synonyms;
  /// Entity type name -> alternative formats of its canonical value.
  std::map<std::string, std::vector<ValueFormat>> formats;
  double format_probability = 1.0;
  CoordinateRule coordinate;
  BBoxRule bbox;
  int n_passes = 5;

  void validate() const;
  /// Enabled rule ids, in application order.
  std::vector<std::string> rule_ids() const;
};

AugmentationRuleSet parse_rule_set(const std::string& json_text);
AugmentationRuleSet read_rule_set(const std::filesystem::path& path);
std::string rule_set_to_json(const AugmentationRuleSet& rules);

/// Rule set matching the mini-invoice key phrases and value formats.
AugmentationRuleSet default_invoice_rules();

/// Output of one rule application. Lineage lives in document.meta:
/// source, rule, pass, seed, identity, plus rule-specific counters.
struct SyntheticDocument {
  Document document;
  bool identity = false;
};

SyntheticDocument synonym_substitute(const Document& doc,
                                     const AugmentationRuleSet& rules, Rng& rng);
SyntheticDocument format_substitute(const Document& doc,
                                    const EntitySchema& schema,
                                    const AugmentationRuleSet& rules, Rng& rng);
SyntheticDocument transform_coordinates(const Document& doc,
                                        const CoordinateRule& rule, Rng& rng);
/// Grows a box about its centre by the given fractions, clamped to [0,1].
BBox expand_box(const BBox& b, double ex, double ey);

SyntheticDocument expand_bboxes(const Document& doc, const BBoxRule& rule,
                                Rng& rng);

/// Applies one rule by id.
SyntheticDocument apply_rule(const std::string& rule_id, const Document& doc,
                             const EntitySchema& schema,
                             const AugmentationRuleSet& rules, Rng& rng);

/// n_passes x |R| x |H| documents, pass-major then rule then document.
Corpus build_synthetic_corpus(const Corpus& human,
                              const AugmentationRuleSet& rules,
                              std::uint64_t seed, int jobs = 1);

/// Drops outputs flagged as identical to their source document.
Corpus drop_identity_outputs(const Corpus& synthetic);

}  // namespace nat
