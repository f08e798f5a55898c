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

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "nat/rng.hpp"

namespace nat {

/// Normalized page coordinates, all in [0, 1].
struct BBox {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  bool valid() const;
  bool operator==(const BBox&) const = default;
};

struct Token {
  std::string text;
  BBox bbox;
  int page = 0;
  bool operator==(const Token&) const = default;
};

class EntitySchema {
 public:
  EntitySchema() = default;
  EntitySchema(std::string doc_type, std::vector<std::string> entity_types);

  const std::string& doc_type() const { return doc_type_; }
  const std::vector<std::string>& entity_types() const { return types_; }
  std::size_t size() const { return types_.size(); }
  /// -1 when the name is unknown.
  int index_of(const std::string& name) const;
  const std::string& name(int type) const { return types_.at(type); }

  /// Number of BIOES tags: O plus four per entity type.
  int num_tags() const { return 1 + 4 * static_cast<int>(types_.size()); }

  bool operator==(const EntitySchema&) const = default;

 private:
  std::string doc_type_;
  std::vector<std::string> types_;
};

/// Half-open run [begin, end) of token positions in reading order.
struct EntitySpan {
  int type = 0;
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - begin; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }
  auto operator<=>(const EntitySpan&) const = default;
};

struct Document {
  std::string id;
  double page_width = 1;
  double page_height = 1;
  std::vector<Token> tokens;
  std::vector<EntitySpan> gold_spans;
  /// Free-form string metadata (augmentation lineage and the like).
  std::map<std::string, std::string> meta;

  bool operator==(const Document&) const = default;
};

// --- BIOES --------------------------------------------------------------

enum class TagKind : unsigned char { O, B, I, E, S };

struct Tag {
  TagKind kind = TagKind::O;
  int type = -1;  ///< entity type index; -1 for O

  static Tag outside() { return {}; }
  bool is_outside() const { return kind == TagKind::O; }
  bool operator==(const Tag&) const = default;

  /// Dense id used as the classifier target: O=0, then B,I,E,S per type.
  int id() const;
  static Tag from_id(int id);
};

using TagSequence = std::vector<Tag>;

std::string tag_to_string(const Tag& tag, const EntitySchema& schema);

/// Throws Error on overlapping or out-of-range spans.
TagSequence encode_bioes(const std::vector<EntitySpan>& spans,
                         std::size_t n_tokens, const EntitySchema& schema);

struct DecodeResult {
  std::vector<EntitySpan> spans;
  /// Number of malformed fragments that the repair policy rewrote.
  std::size_t repairs = 0;
};

/// Total decoder. Repair policy: a leading I or E opens a span; a span left
/// open at O, at a type change or at a new B/S closes at its last tag.
DecodeResult decode_bioes(const TagSequence& tags);

/// True iff every B is closed by a same-type E with only same-type I between.
bool is_valid_bioes(const TagSequence& tags);

/// decode followed by encode.
TagSequence repair_bioes(const TagSequence& tags, const EntitySchema& schema);

// --- Validation ---------------------------------------------------------

struct Violation {
  enum class Kind {
    kBBoxRange,
    kEmptyText,
    kBadPage,
    kSpanRange,
    kSpanOverlap,
    kUnknownType,
    kPageSize,
  };
  Kind kind;
  std::vector<std::size_t> where;  ///< token or span indices involved
  std::string message;
};

std::vector<Violation> validate_document(const Document& doc,
                                         const EntitySchema& schema);

/// Permutation of token indices into reading order: lines top to bottom,
/// tokens left to right within a line. Tokens whose top edges differ by less
/// than half the median token height share a line.
std::vector<std::size_t> reading_order(const std::vector<Token>& tokens);

/// Reorders tokens into reading order and remaps spans. Spans whose tokens
/// stop being contiguous are split into maximal runs.
Document sort_reading_order(const Document& doc);

/// Rounds to the 6-decimal grid used by the corpus format.
double quantize6(double v);
BBox quantize6(const BBox& b);

}  // namespace nat
