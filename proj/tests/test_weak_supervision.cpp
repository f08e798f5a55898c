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


#include <fstream>

#include <gtest/gtest.h>

#include "nat/mini_invoice.hpp"
#include "nat/weak_supervision.hpp"
#include "test_support.hpp"

namespace nat {
namespace {

using testing::small_invoices;

const EntitySchema& invoice_schema() {
  static const EntitySchema s = small_invoices(1).schema;
  return s;
}

Corpus with_text(const std::vector<std::string>& words) {
  Corpus c{invoice_schema(), Provenance::unlabeled(), {}};
  Document d = testing::line_document(words.size(), "u0");
  for (std::size_t i = 0; i < words.size(); ++i) d.tokens[i].text = words[i];
  c.documents.push_back(d);
  return c;
}

WeakSourceSpec dictionary_spec(std::map<std::string, std::string> lex) {
  WeakSourceSpec s;
  s.source_id = "dict";
  s.kind = WeakSourceKind::kDictionary;
  s.lexicon = std::move(lex);
  return s;
}

TEST(Dictionary, SingleMatchBecomesOneSpan) {
  const WeakSource src = fit_weak_source(
      dictionary_spec({{"TOTAL", "total_billed_amount"}}), Corpus{invoice_schema(), {}, {}});
  EXPECT_TRUE(src.losses.empty());
  const Corpus u = with_text({"Invoice", "TOTAL", "42.00"});
  const WeakLabels w = infer_weak_labels(src, u, 0.9);
  ASSERT_EQ(w.docs.size(), 1u);
  const auto spans = decode_bioes(w.docs[0].tags).spans;
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0], (EntitySpan{invoice_schema().index_of("total_billed_amount"), 1, 2}));
  EXPECT_EQ(w.docs[0].weights, (std::vector<double>{0.95, 1.0, 0.95}));
  EXPECT_EQ(w.docs[0].provenance, Provenance::weak("dict"));
  EXPECT_EQ(w.report.spans_per_type.at("total_billed_amount"), 1u);
  EXPECT_EQ(w.report.retained_fraction, 1.0);
}

TEST(Dictionary, CaseInsensitiveLongestFirst) {
  const WeakSource src = fit_weak_source(
      dictionary_spec({{"grand total", "total_billed_amount"},
                       {"total", "line_item_amount"}}),
      Corpus{invoice_schema(), {}, {}});
  const Corpus u = with_text({"GRAND", "Total", "x", "total"});
  const Prediction p = weak_predict(src, u.documents[0]);
  const auto spans = decode_bioes(p.tags).spans;
  ASSERT_EQ(spans.size(), 2u);
  EXPECT_EQ(spans[0].begin, 0u);
  EXPECT_EQ(spans[0].end, 2u);
  EXPECT_EQ(invoice_schema().name(spans[0].type), "total_billed_amount");
  EXPECT_EQ(invoice_schema().name(spans[1].type), "line_item_amount");
  EXPECT_EQ(decode_bioes(weak_predict(src, u.documents[0]).tags).spans, spans);
}

TEST(Dictionary, LexiconFileAndErrors) {
  testing::TempDir tmp;
  std::ofstream(tmp.path() / "lex.json") << R"({"Due Date": "purchase_date"})";
  WeakSourceSpec s = dictionary_spec({});
  s.lexicon_path = tmp.path() / "lex.json";
  const WeakSource src = fit_weak_source(s, Corpus{invoice_schema(), {}, {}});
  const auto spans =
      decode_bioes(weak_predict(src, with_text({"due", "date"}).documents[0]).tags).spans;
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_THROW(fit_weak_source(dictionary_spec({}), Corpus{invoice_schema(), {}, {}}), Error);
  EXPECT_THROW(fit_weak_source(dictionary_spec({{"x", "no_such_type"}}),
                               Corpus{invoice_schema(), {}, {}}),
               Error);
}

TEST(ModelSources, EmptyHumanCorpusIsRejected) {
  WeakSourceSpec s;
  s.source_id = "m";
  s.arch = testing::tiny_arch(0);
  EXPECT_THROW(fit_weak_source(s, Corpus{invoice_schema(), {}, {}}), Error);
  s.kind = WeakSourceKind::kModelWindow;
  EXPECT_THROW(fit_weak_source(s, Corpus{invoice_schema(), {}, {}}), Error);
}

TEST(ModelSources, KindNamesRoundTrip) {
  for (auto k : {WeakSourceKind::kModelAttention, WeakSourceKind::kModelWindow,
                 WeakSourceKind::kDictionary})
    EXPECT_EQ(parse_weak_source_kind(to_string(k)), k);
  EXPECT_THROW(parse_weak_source_kind("fusion"), Error);
}

WeakSourceSpec window_spec(std::uint64_t seed) {
  WeakSourceSpec s;
  s.source_id = "window";
  s.kind = WeakSourceKind::kModelWindow;
  s.epochs = 50;
  s.seed = seed;
  s.train.adam.learning_rate = 3e-3;
  s.train.seed = seed;
  s.window_arch.vocab_size = 4096;
  return s;
}

TEST(ModelSources, WindowOverfitsTenDocuments) {
  const Corpus h = small_invoices(10);
  const WeakSource src = fit_weak_source(window_spec(1), h);
  std::size_t hit = 0, total = 0;
  for (const Document& d : h.documents) {
    const TagSequence gold = encode_bioes(d.gold_spans, d.tokens.size(), h.schema);
    const Prediction p = weak_predict(src, d);
    for (std::size_t i = 0; i < gold.size(); ++i, ++total) hit += p.tags[i] == gold[i];
  }
  EXPECT_GE(static_cast<double>(hit) / static_cast<double>(total), 0.9);
  EXPECT_EQ(src.losses.size(), 50u);
  EXPECT_LT(src.losses.back(), src.losses.front());
}

TEST(ModelSources, FittingIsDeterministic) {
  const Corpus h = small_invoices(4);
  WeakSourceSpec s = window_spec(3);
  s.epochs = 3;
  const WeakSource a = fit_weak_source(s, h), b = fit_weak_source(s, h);
  EXPECT_EQ(std::get<WindowParams>(a.model), std::get<WindowParams>(b.model));

  WeakSourceSpec t;
  t.source_id = "attention";
  t.epochs = 2;
  t.arch = testing::tiny_arch(0);
  t.seed = 3;
  const WeakSource c = fit_weak_source(t, h), d = fit_weak_source(t, h);
  EXPECT_EQ(std::get<TaggerParams>(c.model), std::get<TaggerParams>(d.model));
  EXPECT_EQ(std::get<TaggerParams>(c.model).arch.num_tags, h.schema.num_tags());
}

TEST(Inference, ThresholdOneRetainsNothing) {
  const Corpus h = small_invoices(4);
  WeakSourceSpec s = window_spec(2);
  s.epochs = 5;
  const WeakSource src = fit_weak_source(s, h);
  const WeakLabels w = infer_weak_labels(src, strip_labels(small_invoices(5, 7, 100)), 1.0);
  EXPECT_EQ(w.report.retained_fraction, 0.0);
  for (const auto& d : w.docs)
    for (double x : d.weights) EXPECT_EQ(x, 0.0);
}

TEST(Inference, WeightsAreZeroOrAboveThresholdAndTagsValid) {
  const Corpus h = small_invoices(6);
  WeakSourceSpec s = window_spec(4);
  s.epochs = 10;
  const WeakSource src = fit_weak_source(s, h);
  const Corpus u = strip_labels(small_invoices(10, 7, 200));
  for (double C : {0.3, 0.6, 0.9}) {
    const WeakLabels w = infer_weak_labels(src, u, C, 2);
    for (const auto& d : w.docs) {
      EXPECT_TRUE(is_valid_bioes(d.tags));
      EXPECT_TRUE(d.document.gold_spans.empty());
      for (double x : d.weights) EXPECT_TRUE(x == 0.0 || x >= C);
    }
    EXPECT_EQ(weighted_checksum(u.schema, w.docs),
              weighted_checksum(u.schema, infer_weak_labels(src, u, C, 1).docs));
  }
}

TEST(Inference, PrecisionIsMonotoneInThreshold) {
  const Corpus h = small_invoices(10, 11);
  const Corpus sealed = small_invoices(40, 11, 500);
  const Corpus u = strip_labels(sealed);
  double lo = 0, hi = 0;
  int counted = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    WeakSourceSpec s = window_spec(seed);
    s.epochs = 30;
    const WeakSource src = fit_weak_source(s, h);
    const auto a = score_weak_labels(infer_weak_labels(src, u, 0.5).docs, sealed).token.precision;
    const auto b = score_weak_labels(infer_weak_labels(src, u, 0.9).docs, sealed).token.precision;
    if (!a || !b) continue;
    lo += *a;
    hi += *b;
    ++counted;
  }
  ASSERT_GE(counted, 3);
  EXPECT_GE(hi / counted, lo / counted);
}

TEST(Inference, CorruptionSwapsSpanTypes) {
  const Corpus u = strip_labels(small_invoices(30, 5, 300));
  const WeakSource clean = fit_weak_source(
      dictionary_spec({{"total", "total_billed_amount"}, {"date", "purchase_date"}}),
      Corpus{invoice_schema(), {}, {}});
  WeakSource noisy = clean;
  noisy.spec.corruption = 1.0;
  const WeakLabels a = infer_weak_labels(clean, u, 0.9);
  const WeakLabels b = infer_weak_labels(noisy, u, 0.9);
  std::size_t spans = 0;
  for (std::size_t k = 0; k < a.docs.size(); ++k) {
    const auto sa = decode_bioes(a.docs[k].tags).spans;
    const auto sb = decode_bioes(b.docs[k].tags).spans;
    ASSERT_EQ(sa.size(), sb.size());
    for (std::size_t i = 0; i < sa.size(); ++i, ++spans) {
      EXPECT_EQ(sa[i].begin, sb[i].begin);
      EXPECT_EQ(sa[i].end, sb[i].end);
      EXPECT_NE(sa[i].type, sb[i].type);
    }
    EXPECT_EQ(a.docs[k].weights, b.docs[k].weights);
  }
  EXPECT_GT(spans, 10u);
  EXPECT_EQ(weighted_checksum(u.schema, b.docs),
            weighted_checksum(u.schema, infer_weak_labels(noisy, u, 0.9).docs));
}

// Scoring -----------------------------------------------------------------

std::vector<WeightedDocument> gold_as_weak(const Corpus& c) {
  std::vector<WeightedDocument> out;
  for (const Document& d : c.documents) {
    WeightedDocument w = make_weighted_from_gold(d, c.schema, Provenance::weak("g"));
    w.document.gold_spans.clear();
    out.push_back(w);
  }
  return out;
}

TEST(Scoring, PerfectLabels) {
  const Corpus c = small_invoices(5);
  const WeakLabelScore s = score_weak_labels(gold_as_weak(c), c);
  EXPECT_EQ(*s.token.precision, 1.0);
  EXPECT_EQ(*s.token.recall, 1.0);
  EXPECT_EQ(*s.span.precision, 1.0);
  EXPECT_EQ(*s.span.recall, 1.0);
}

TEST(Scoring, EverythingMasked) {
  const Corpus c = small_invoices(5);
  auto weak = gold_as_weak(c);
  for (auto& d : weak) std::fill(d.weights.begin(), d.weights.end(), 0.0);
  const WeakLabelScore s = score_weak_labels(weak, c);
  EXPECT_FALSE(s.token.precision.has_value());
  EXPECT_EQ(*s.token.recall, 0.0);
  EXPECT_FALSE(s.span.precision.has_value());
}

TEST(Scoring, HalfCorruptedTokensGiveHalfPrecision) {
  const Corpus c = small_invoices(80, 9);
  auto weak = gold_as_weak(c);
  Rng rng(4, "corrupt-oracle");
  const int n_types = static_cast<int>(c.schema.size());
  std::size_t entity_tokens = 0, kept = 0;
  for (auto& d : weak)
    for (Tag& t : d.tags) {
      if (t.is_outside()) continue;
      ++entity_tokens;
      if (rng.bernoulli(0.5))
        t.type = (t.type + 1 + static_cast<int>(rng.index(n_types - 1))) % n_types;
      else
        ++kept;
    }
  ASSERT_GE(entity_tokens, 1000u);
  const WeakLabelScore s = score_weak_labels(weak, c);
  EXPECT_NEAR(*s.token.precision, 0.5, 0.05);
  EXPECT_DOUBLE_EQ(*s.token.precision,
                   static_cast<double>(kept) / static_cast<double>(entity_tokens));
}

TEST(Scoring, IdMismatchIsAnError) {
  const Corpus c = small_invoices(2);
  auto weak = gold_as_weak(c);
  weak[0].document.id = "other";
  EXPECT_THROW(score_weak_labels(weak, c), Error);
}

}  // namespace
}  // namespace nat
