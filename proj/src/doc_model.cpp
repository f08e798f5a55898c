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

#include "nat/doc_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace nat {

bool BBox::valid() const {
  auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
  return in01(x0) && in01(y0) && in01(x1) && in01(y1) && x0 <= x1 && y0 <= y1;
}

EntitySchema::EntitySchema(std::string doc_type,
                           std::vector<std::string> entity_types)
    : doc_type_(std::move(doc_type)), types_(std::move(entity_types)) {
  if (types_.empty()) throw Error("EntitySchema: empty entity type list");
  for (std::size_t i = 0; i < types_.size(); ++i)
    for (std::size_t j = i + 1; j < types_.size(); ++j)
      if (types_[i] == types_[j])
        throw Error("EntitySchema: duplicate entity type '" + types_[i] + "'");
}

int EntitySchema::index_of(const std::string& name) const {
  auto it = std::find(types_.begin(), types_.end(), name);
  return it == types_.end() ? -1 : static_cast<int>(it - types_.begin());
}

int Tag::id() const {
  if (kind == TagKind::O) return 0;
  return 1 + 4 * type + (static_cast<int>(kind) - 1);
}

Tag Tag::from_id(int id) {
  if (id <= 0) return {};
  int k = (id - 1) % 4;
  return {static_cast<TagKind>(k + 1), (id - 1) / 4};
}

std::string tag_to_string(const Tag& tag, const EntitySchema& schema) {
  static constexpr char kLetters[] = "OBIES";
  if (tag.is_outside()) return "O";
  std::string s(1, kLetters[static_cast<int>(tag.kind)]);
  return s + "-" + schema.name(tag.type);
}

TagSequence encode_bioes(const std::vector<EntitySpan>& spans,
                         std::size_t n_tokens, const EntitySchema& schema) {
  TagSequence tags(n_tokens);
  std::vector<int> owner(n_tokens, -1);
  for (std::size_t s = 0; s < spans.size(); ++s) {
    const EntitySpan& sp = spans[s];
    if (sp.begin >= sp.end || sp.end > n_tokens) {
      std::ostringstream os;
      os << "encode_bioes: span " << s << " [" << sp.begin << ", " << sp.end
         << ") out of range for " << n_tokens << " tokens";
      throw Error(os.str());
    }
    if (sp.type < 0 || sp.type >= static_cast<int>(schema.size()))
      throw Error("encode_bioes: span " + std::to_string(s) +
                  " has unknown entity type");
    for (std::size_t i = sp.begin; i < sp.end; ++i) {
      if (owner[i] >= 0) {
        std::ostringstream os;
        os << "encode_bioes: spans " << owner[i] << " and " << s
           << " overlap at token " << i;
        throw Error(os.str());
      }
      owner[i] = static_cast<int>(s);
    }
    if (sp.length() == 1) {
      tags[sp.begin] = {TagKind::S, sp.type};
      continue;
    }
    tags[sp.begin] = {TagKind::B, sp.type};
    for (std::size_t i = sp.begin + 1; i + 1 < sp.end; ++i)
      tags[i] = {TagKind::I, sp.type};
    tags[sp.end - 1] = {TagKind::E, sp.type};
  }
  return tags;
}

DecodeResult decode_bioes(const TagSequence& tags) {
  DecodeResult out;
  bool open = false;
  EntitySpan cur;

  // Closes a span that never saw its E (or S).
  auto close_dangling = [&](std::size_t end) {
    if (!open) return;
    cur.end = end;
    out.spans.push_back(cur);
    ++out.repairs;
    open = false;
  };

  for (std::size_t i = 0; i < tags.size(); ++i) {
    const Tag& t = tags[i];
    switch (t.kind) {
      case TagKind::O:
        close_dangling(i);
        break;
      case TagKind::B:
        close_dangling(i);
        cur = {t.type, i, i};
        open = true;
        break;
      case TagKind::I:
        if (open && cur.type == t.type) break;
        close_dangling(i);
        ++out.repairs;  // I promoted to B
        cur = {t.type, i, i};
        open = true;
        break;
      case TagKind::E:
        if (!(open && cur.type == t.type)) {
          close_dangling(i);
          ++out.repairs;  // E promoted to S
          cur = {t.type, i, i};
        }
        cur.end = i + 1;
        out.spans.push_back(cur);
        open = false;
        break;
      case TagKind::S:
        close_dangling(i);
        out.spans.push_back({t.type, i, i + 1});
        break;
    }
  }
  close_dangling(tags.size());
  return out;
}

bool is_valid_bioes(const TagSequence& tags) {
  bool open = false;
  int type = -1;
  for (const Tag& t : tags) {
    switch (t.kind) {
      case TagKind::O:
      case TagKind::S:
        if (open) return false;
        break;
      case TagKind::B:
        if (open) return false;
        open = true;
        type = t.type;
        break;
      case TagKind::I:
        if (!open || t.type != type) return false;
        break;
      case TagKind::E:
        if (!open || t.type != type) return false;
        open = false;
        break;
    }
  }
  return !open;
}

TagSequence repair_bioes(const TagSequence& tags, const EntitySchema& schema) {
  return encode_bioes(decode_bioes(tags).spans, tags.size(), schema);
}

std::vector<Violation> validate_document(const Document& doc,
                                         const EntitySchema& schema) {
  std::vector<Violation> out;
  using K = Violation::Kind;
  if (!(doc.page_width > 0) || !(doc.page_height > 0))
    out.push_back({K::kPageSize, {}, "page dimensions must be positive"});

  for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
    const Token& tok = doc.tokens[i];
    if (!tok.bbox.valid()) {
      std::ostringstream os;
      os << "token " << i << " bbox (" << tok.bbox.x0 << ", " << tok.bbox.y0
         << ", " << tok.bbox.x1 << ", " << tok.bbox.y1
         << ") outside [0,1] or inverted";
      out.push_back({K::kBBoxRange, {i}, os.str()});
    }
    if (tok.text.empty())
      out.push_back({K::kEmptyText, {i}, "token " + std::to_string(i) +
                                             " has empty text"});
    if (tok.page < 0)
      out.push_back({K::kBadPage, {i}, "token " + std::to_string(i) +
                                           " has negative page index"});
  }

  const std::size_t n = doc.tokens.size();
  std::vector<int> owner(n, -1);
  for (std::size_t s = 0; s < doc.gold_spans.size(); ++s) {
    const EntitySpan& sp = doc.gold_spans[s];
    if (sp.type < 0 || sp.type >= static_cast<int>(schema.size()))
      out.push_back({K::kUnknownType, {s},
                     "span " + std::to_string(s) + " has unknown entity type"});
    if (sp.begin >= sp.end || sp.end > n) {
      out.push_back({K::kSpanRange, {s},
                     "span " + std::to_string(s) + " out of range"});
      continue;
    }
    // One report per overlapping pair.
    std::vector<int> hit;
    for (std::size_t i = sp.begin; i < sp.end; ++i) {
      if (owner[i] >= 0 &&
          std::find(hit.begin(), hit.end(), owner[i]) == hit.end())
        hit.push_back(owner[i]);
      owner[i] = static_cast<int>(s);
    }
    for (int o : hit)
      out.push_back({K::kSpanOverlap,
                     {static_cast<std::size_t>(o), s},
                     "spans " + std::to_string(o) + " and " +
                         std::to_string(s) + " overlap"});
  }
  return out;
}

std::vector<std::size_t> reading_order(const std::vector<Token>& tokens) {
  const std::size_t n = tokens.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (n < 2) return idx;

  std::vector<double> heights;
  heights.reserve(n);
  for (const Token& t : tokens) heights.push_back(t.bbox.height());
  std::nth_element(heights.begin(), heights.begin() + n / 2, heights.end());
  const double tol = 0.5 * heights[n / 2];

  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const BBox& p = tokens[a].bbox;
    const BBox& q = tokens[b].bbox;
    if (p.y0 != q.y0) return p.y0 < q.y0;
    return p.x0 < q.x0;
  });

  std::vector<std::size_t> out;
  out.reserve(n);
  std::size_t start = 0;
  while (start < n) {
    const double line_top = tokens[idx[start]].bbox.y0;
    std::size_t stop = start + 1;
    while (stop < n && tokens[idx[stop]].bbox.y0 - line_top < tol) ++stop;
    std::vector<std::size_t> line(idx.begin() + start, idx.begin() + stop);
    std::stable_sort(line.begin(), line.end(),
                     [&](std::size_t a, std::size_t b) {
                       return tokens[a].bbox.x0 < tokens[b].bbox.x0;
                     });
    out.insert(out.end(), line.begin(), line.end());
    start = stop;
  }
  return out;
}

Document sort_reading_order(const Document& doc) {
  const auto order = reading_order(doc.tokens);
  std::vector<std::size_t> new_pos(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) new_pos[order[k]] = k;

  Document out = doc;
  for (std::size_t k = 0; k < order.size(); ++k)
    out.tokens[k] = doc.tokens[order[k]];

  out.gold_spans.clear();
  for (const EntitySpan& sp : doc.gold_spans) {
    std::vector<std::size_t> pos;
    for (std::size_t i = sp.begin; i < sp.end; ++i) pos.push_back(new_pos[i]);
    std::sort(pos.begin(), pos.end());
    std::size_t run = 0;
    for (std::size_t k = 1; k <= pos.size(); ++k) {
      if (k == pos.size() || pos[k] != pos[k - 1] + 1) {
        out.gold_spans.push_back({sp.type, pos[run], pos[k - 1] + 1});
        run = k;
      }
    }
  }
  std::sort(out.gold_spans.begin(), out.gold_spans.end(),
            [](const EntitySpan& a, const EntitySpan& b) {
              return a.begin < b.begin;
            });
  return out;
}

double quantize6(double v) { return std::round(v * 1e6) / 1e6; }

BBox quantize6(const BBox& b) {
  return {quantize6(b.x0), quantize6(b.y0), quantize6(b.x1), quantize6(b.y1)};
}

}  // namespace nat
