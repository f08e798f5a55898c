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


#include <functional>
#include <set>

#include <gtest/gtest.h>

#include "nat/doc_model.hpp"
#include "test_support.hpp"

namespace nat {
namespace {

const EntitySchema kQH("form", {"question", "header"});

Tag T(TagKind k, int type) { return {k, type}; }
constexpr TagKind B = TagKind::B, I = TagKind::I, E = TagKind::E,
                  S = TagKind::S;

TEST(Bioes, EncodeExamples) {
  TagSequence t = encode_bioes({{1, 2, 3}}, 4, kQH);
  EXPECT_EQ(t, (TagSequence{{}, {}, T(S, 1), {}}));
  t = encode_bioes({{0, 0, 3}}, 3, kQH);
  EXPECT_EQ(t, (TagSequence{T(B, 0), T(I, 0), T(E, 0)}));
  EXPECT_EQ(encode_bioes({}, 5, kQH), TagSequence(5));
}

TEST(Bioes, EncodeRejectsOverlapAndRange) {
  try {
    encode_bioes({{0, 0, 3}, {1, 2, 4}}, 5, kQH);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("spans 0 and 1"), std::string::npos);
  }
  EXPECT_THROW(encode_bioes({{0, 3, 6}}, 5, kQH), Error);
  EXPECT_THROW(encode_bioes({{0, 2, 2}}, 5, kQH), Error);
  EXPECT_THROW(encode_bioes({{2, 0, 1}}, 5, kQH), Error);
}

TEST(Bioes, DecodeExamples) {
  DecodeResult r = decode_bioes({T(B, 0), T(I, 0), T(E, 0)});
  EXPECT_EQ(r.spans, (std::vector<EntitySpan>{{0, 0, 3}}));
  EXPECT_EQ(r.repairs, 0u);
  r = decode_bioes({{}, T(S, 1), {}});
  EXPECT_EQ(r.spans, (std::vector<EntitySpan>{{1, 1, 2}}));
  r = decode_bioes({T(I, 0), T(E, 0)});
  EXPECT_EQ(r.spans, (std::vector<EntitySpan>{{0, 0, 2}}));
  EXPECT_GT(r.repairs, 0u);
}

// Every span layout over n tokens and k types, enumerated left to right.
void for_each_layout(std::size_t n, int k,
                     const std::function<void(const std::vector<EntitySpan>&)>& fn) {
  std::vector<EntitySpan> cur;
  std::function<void(std::size_t)> rec = [&](std::size_t pos) {
    if (pos == n) {
      fn(cur);
      return;
    }
    rec(pos + 1);
    for (std::size_t end = pos + 1; end <= n; ++end)
      for (int t = 0; t < k; ++t) {
        cur.push_back({t, pos, end});
        rec(end);
        cur.pop_back();
      }
  };
  rec(0);
}

TEST(Bioes, RoundTripExhaustive) {
  std::size_t cases = 0;
  for (std::size_t n = 0; n <= 6; ++n)
    for (int k = 1; k <= 2; ++k) {
      const EntitySchema schema =
          k == 1 ? EntitySchema("x", {"question"}) : kQH;
      for_each_layout(n, k, [&](const std::vector<EntitySpan>& spans) {
        const TagSequence tags = encode_bioes(spans, n, schema);
        ASSERT_TRUE(is_valid_bioes(tags));
        const DecodeResult r = decode_bioes(tags);
        ASSERT_EQ(r.spans, spans);
        ASSERT_EQ(r.repairs, 0u);
        ++cases;
      });
    }
  // Layout counts follow a(n) = a(n-1) + k * sum_{j<n} a(j).
  auto count = [](std::size_t n, std::size_t k) {
    std::vector<std::size_t> a{1};
    for (std::size_t m = 1; m <= n; ++m) {
      std::size_t v = a[m - 1];
      for (std::size_t j = 0; j < m; ++j) v += k * a[j];
      a.push_back(v);
    }
    return a[n];
  };
  std::size_t expected = 0;
  for (std::size_t n = 0; n <= 6; ++n) expected += count(n, 1) + count(n, 2);
  EXPECT_EQ(cases, expected);
}

// Length-2 repair table written out from the policy: leading I becomes B,
// unclosed B/I runs close at their last same-type tag, a type change splits.
TEST(Bioes, RepairTableForPairs) {
  struct Row {
    TagSequence tags;
    std::vector<EntitySpan> spans;
  };
  const std::vector<Row> table = {
      {{T(I, 0), T(E, 0)}, {{0, 0, 2}}},
      {{T(I, 0), T(I, 0)}, {{0, 0, 2}}},
      {{T(B, 0), T(I, 0)}, {{0, 0, 2}}},
      {{T(B, 0), T(B, 0)}, {{0, 0, 1}, {0, 1, 2}}},
      {{T(B, 0), {}}, {{0, 0, 1}}},
      {{{}, T(I, 0)}, {{0, 1, 2}}},
      {{{}, T(E, 0)}, {{0, 1, 2}}},
      {{T(E, 0), T(E, 0)}, {{0, 0, 1}, {0, 1, 2}}},
      {{T(B, 0), T(E, 1)}, {{0, 0, 1}, {1, 1, 2}}},
      {{T(B, 0), T(I, 1)}, {{0, 0, 1}, {1, 1, 2}}},
      {{T(I, 1), T(S, 0)}, {{1, 0, 1}, {0, 1, 2}}},
      {{T(S, 0), T(E, 0)}, {{0, 0, 1}, {0, 1, 2}}},
      {{T(B, 1), T(E, 1)}, {{1, 0, 2}}},
  };
  for (const Row& row : table) {
    const DecodeResult r = decode_bioes(row.tags);
    EXPECT_EQ(r.spans, row.spans) << tag_to_string(row.tags[0], kQH) << " "
                                  << tag_to_string(row.tags[1], kQH);
    EXPECT_EQ(r.repairs == 0, is_valid_bioes(row.tags));
  }
}

TEST(Bioes, DecodeOfArbitraryTagsIsWellFormed) {
  // All 9^4 sequences of length 4 over two types.
  const int n_tags = kQH.num_tags();
  for (int code = 0; code < n_tags * n_tags * n_tags * n_tags; ++code) {
    TagSequence tags;
    for (int c = code, k = 0; k < 4; ++k, c /= n_tags)
      tags.push_back(Tag::from_id(c % n_tags));
    const DecodeResult r = decode_bioes(tags);
    std::set<std::size_t> seen;
    for (const EntitySpan& sp : r.spans) {
      ASSERT_LT(sp.begin, sp.end);
      ASSERT_LE(sp.end, tags.size());
      for (std::size_t i = sp.begin; i < sp.end; ++i)
        ASSERT_TRUE(seen.insert(i).second);
    }
    const TagSequence fixed = repair_bioes(tags, kQH);
    ASSERT_TRUE(is_valid_bioes(fixed));
    ASSERT_EQ(repair_bioes(fixed, kQH), fixed);
    if (is_valid_bioes(tags)) ASSERT_EQ(fixed, tags);
  }
}

TEST(Bioes, TagIdsAreDense) {
  for (int id = 0; id < kQH.num_tags(); ++id)
    EXPECT_EQ(Tag::from_id(id).id(), id);
  EXPECT_EQ(Tag::outside().id(), 0);
  EXPECT_EQ(T(B, 1).id(), 5);
  EXPECT_EQ(T(S, 0).id(), 4);
}

Document valid_doc() {
  Document d = testing::line_document(8);
  d.gold_spans = {{0, 0, 2}, {1, 5, 6}};
  return d;
}

TEST(Validate, WellFormedDocumentIsClean) {
  EXPECT_TRUE(validate_document(valid_doc(), kQH).empty());
}

TEST(Validate, ReportsBoxOutOfRange) {
  Document d = valid_doc();
  d.tokens[3].bbox.x0 = 1.2;
  const auto v = validate_document(d, kQH);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, Violation::Kind::kBBoxRange);
  EXPECT_EQ(v[0].where, std::vector<std::size_t>{3});
}

TEST(Validate, ReportsOverlapNamingBothSpans) {
  Document d = valid_doc();
  d.gold_spans = {{0, 3, 6}, {1, 5, 7}};
  const auto v = validate_document(d, kQH);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, Violation::Kind::kSpanOverlap);
  EXPECT_EQ(v[0].where, (std::vector<std::size_t>{0, 1}));
}

TEST(Validate, ReportsEveryProblem) {
  Document d = valid_doc();
  d.tokens[1].text.clear();
  d.tokens[2].page = -1;
  d.gold_spans.push_back({7, 6, 7});
  d.gold_spans.push_back({0, 7, 12});
  d.page_width = 0;
  std::multiset<Violation::Kind> kinds;
  for (const Violation& v : validate_document(d, kQH)) kinds.insert(v.kind);
  using K = Violation::Kind;
  EXPECT_EQ(kinds, (std::multiset<K>{K::kEmptyText, K::kBadPage, K::kUnknownType,
                                     K::kSpanRange, K::kPageSize}));
}

TEST(Validate, IsIdempotentAndPure) {
  Document d = valid_doc();
  d.tokens[0].bbox.y1 = -0.1;
  const Document before = d;
  const auto a = validate_document(d, kQH);
  const auto b = validate_document(d, kQH);
  EXPECT_EQ(d, before);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].message, b[i].message);
}

TEST(ReadingOrder, TopToBottomThenLeftToRight) {
  std::vector<Token> toks = {
      {"c", {0.5, 0.50, 0.6, 0.52}, 0},
      {"b", {0.6, 0.10, 0.7, 0.12}, 0},
      {"a", {0.1, 0.101, 0.2, 0.121}, 0},
      {"d", {0.1, 0.80, 0.2, 0.82}, 0},
  };
  EXPECT_EQ(reading_order(toks), (std::vector<std::size_t>{2, 1, 0, 3}));
}

TEST(ReadingOrder, SortRemapsSpans) {
  Document d;
  d.id = "r";
  d.tokens = {{"later", {0.1, 0.5, 0.2, 0.52}, 0},
              {"first", {0.1, 0.1, 0.2, 0.12}, 0},
              {"second", {0.3, 0.1, 0.4, 0.12}, 0}};
  d.gold_spans = {{0, 0, 1}, {1, 1, 3}};
  const Document s = sort_reading_order(d);
  EXPECT_EQ(s.tokens[0].text, "first");
  EXPECT_EQ(s.tokens[2].text, "later");
  EXPECT_EQ(s.gold_spans, (std::vector<EntitySpan>{{1, 0, 2}, {0, 2, 3}}));
}

TEST(Quantize, SixDecimals) {
  EXPECT_EQ(quantize6(0.1234564), 0.123456);
  EXPECT_EQ(quantize6(0.1234566), 0.123457);
  EXPECT_EQ(quantize6(quantize6(0.7)), quantize6(0.7));
}

}  // namespace
}  // namespace nat
