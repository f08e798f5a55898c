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
#include <string>
#include <vector>

#include "nat/corpus_io.hpp"

namespace nat {

/// Entity inventory of the synthetic invoice generator.
const std::vector<std::string>& mini_invoice_entity_types();

/// Controls for the synthetic invoice generator. Every document comes from
/// one of `vendor_templates` layouts; values, key phrases and formats vary.
struct MiniInvoiceConfig {
  std::size_t n_documents = 100;
  std::size_t vendor_templates = 5;
  /// Subset of mini_invoice_entity_types(); empty means all of them.
  std::vector<std::string> entity_types;

  double page_width = 850;
  double page_height = 1100;

  std::size_t vendor_pool = 400;   ///< distinct vendor names
  std::size_t item_pool = 120;     ///< distinct line-item words
  std::size_t max_line_items = 5;

  /// Per-document positional jitter, as a fraction of the page.
  double layout_jitter = 0.01;
  /// Probability of a key phrase other than the template's.
  double key_phrase_variation = 0.3;
  /// Probability of a date/amount format other than the template's.
  double format_variation = 0.3;
  /// Probability that an optional field (invoice number) is omitted.
  double field_drop = 0.1;

  std::string id_prefix = "inv";
  /// Offset added to document numbers, so disjoint corpora can share a seed.
  std::size_t id_offset = 0;
};

/// Deterministic given (config, seed). Throws Error on an invalid config.
Corpus generate_mini_invoices(const MiniInvoiceConfig& config,
                              std::uint64_t seed);

/// Canonical phrase tables the generator draws from; shared with the default
/// augmentation rule-set so synthetic rules cover real variation.
struct InvoicePhrases {
  std::vector<std::string> total_keys;
  std::vector<std::string> date_keys;
  std::vector<std::string> invoice_keys;
  std::vector<std::string> date_patterns;
  std::vector<std::string> amount_patterns;
};
const InvoicePhrases& invoice_phrases();

}  // namespace nat
