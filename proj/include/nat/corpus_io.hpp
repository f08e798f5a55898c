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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nat/doc_model.hpp"

namespace nat {

/// Where a document's labels came from.
struct Provenance {
  enum class Kind { kHuman, kUnlabeled, kWeak, kSynthetic };
  Kind kind = Kind::kHuman;
  std::string source;  ///< weak source id; empty otherwise

  static Provenance human() { return {Kind::kHuman, {}}; }
  static Provenance unlabeled() { return {Kind::kUnlabeled, {}}; }
  static Provenance weak(std::string id) { return {Kind::kWeak, std::move(id)}; }
  static Provenance synthetic() { return {Kind::kSynthetic, {}}; }

  /// "human", "unlabeled", "weak:<id>", "synthetic".
  std::string str() const;
  static Provenance parse(const std::string& s);
  bool operator==(const Provenance&) const = default;
};

struct Corpus {
  EntitySchema schema;
  Provenance provenance;
  std::vector<Document> documents;

  std::size_t size() const { return documents.size(); }
  bool operator==(const Corpus&) const = default;
};

/// One line of the canonical format, before it is interpreted as a plain
/// or a weighted document.
struct DocRecord {
  Document doc;
  std::vector<double> weights;  ///< empty when absent
  Provenance provenance;
};

struct CorpusFile {
  EntitySchema schema;
  Provenance provenance;
  std::vector<DocRecord> records;
};

// Canonical corpus format: one JSON object per line. The first line is
//   {"kind":"schema","doc_type":...,"entity_types":[...],"provenance":...}
// followed by one line per document
//   {"kind":"doc","id":...,"page_width":...,"page_height":...,
//    "tokens":[{"text":...,"x0":...,"y0":...,"x1":...,"y1":...,"page":...}],
//    "spans":[{"type":...,"start":...,"end":...}],"weights":[...],
//    "provenance":...,"meta":{...}}
// Span "end" is exclusive. Coordinates carry exactly six decimals.

std::string format_schema_line(const EntitySchema& schema,
                               const Provenance& provenance);
std::string format_doc_line(const DocRecord& rec, const EntitySchema& schema);

/// Throws Error citing the 1-based line number on malformed input.
CorpusFile parse_corpus_file(std::istream& in, const std::string& name);
CorpusFile read_corpus_file(const std::filesystem::path& path);
void write_corpus_file(const CorpusFile& file, const std::filesystem::path& path);

Corpus read_corpus(const std::filesystem::path& path);
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);
std::string corpus_to_string(const Corpus& corpus);

/// Deterministic content hash of the canonical serialization.
std::uint64_t corpus_checksum(const Corpus& corpus);

// --- Dataset ingestion --------------------------------------------------

/// Reads the public FUNSD layout. `path` may be the split directory (holding
/// annotations/ and images/) or the annotations directory itself. Page size
/// comes from the PNG header when the image is present, otherwise from the
/// largest box extent.
Corpus load_funsd(const std::filesystem::path& path);

using DatasetAdapter = std::function<Corpus(const std::filesystem::path&)>;

/// Registers a named loader; "funsd" and "canonical" are built in.
void register_dataset_adapter(const std::string& name, DatasetAdapter adapter);
Corpus load_dataset(const std::string& name, const std::filesystem::path& path);

// --- Splitting ----------------------------------------------------------

struct SplitPart {
  Corpus corpus;
  /// Gold labels stripped from an unlabeled part, kept for scoring.
  std::optional<Corpus> sealed;
};

/// Shuffles with `seed` and cuts consecutive parts of the requested sizes.
/// Parts flagged in `unlabeled` lose their spans (sealed copy retained).
std::vector<SplitPart> split_corpus(const Corpus& corpus,
                                    const std::vector<std::size_t>& sizes,
                                    std::uint64_t seed,
                                    const std::vector<bool>& unlabeled = {});

/// Copy with gold spans removed and provenance set to unlabeled.
Corpus strip_labels(const Corpus& corpus);

}  // namespace nat
