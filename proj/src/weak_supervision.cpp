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

#include "nat/weak_supervision.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nat/parallel.hpp"

namespace nat {

WeakSourceKind parse_weak_source_kind(const std::string& s) {
  if (s == "model_attention") return WeakSourceKind::kModelAttention;
  if (s == "model_window") return WeakSourceKind::kModelWindow;
  if (s == "dictionary") return WeakSourceKind::kDictionary;
  throw Error("unknown weak source kind '" + s + "'");
}

std::string to_string(WeakSourceKind k) {
  switch (k) {
    case WeakSourceKind::kModelAttention: return "model_attention";
    case WeakSourceKind::kModelWindow: return "model_window";
    case WeakSourceKind::kDictionary: return "dictionary";
  }
  return "model_attention";
}

std::map<std::string, std::string> read_lexicon(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error("cannot open lexicon " + p.string());
  try {
    return nlohmann::json::parse(in).get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed lexicon " + p.string() + ": " + e.what());
  }
}

namespace {

std::string lower(std::string s) {
  for (char& c : s)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<TrainingExample> examples_of(const std::vector<WeightedDocument>& w) {
  std::vector<TrainingExample> out;
  out.reserve(w.size());
  for (const WeightedDocument& d : w) out.push_back(d.example());
  return out;
}

CompiledLexicon compile_lexicon(const std::map<std::string, std::string>& lex,
                                const EntitySchema& schema) {
  CompiledLexicon c;
  for (const auto& [phrase, type] : lex) {
    int ti = schema.index_of(type);
    if (ti < 0) throw Error("lexicon entity type '" + type + "' not in schema");
    std::istringstream is(lower(phrase));
    CompiledLexicon::Entry e{{}, ti};
    for (std::string w; is >> w;) e.words.push_back(w);
    if (!e.words.empty()) c.entries.push_back(std::move(e));
  }
  if (c.entries.empty()) throw Error("dictionary source has an empty lexicon");
  std::stable_sort(c.entries.begin(), c.entries.end(),
                   [](const auto& a, const auto& b) {
                     return a.words.size() > b.words.size();
                   });
  return c;
}

}  // namespace

WeakSource fit_weak_source(const WeakSourceSpec& spec, const Corpus& human,
                           const Corpus* unlabeled, const TaggerParams* init) {
  WeakSource src;
  src.spec = spec;
  src.schema = human.schema;
  const EntitySchema& schema = human.schema;

  if (spec.kind == WeakSourceKind::kDictionary) {
    auto lex = spec.lexicon;
    if (!spec.lexicon_path.empty())
      for (auto& [k, v] : read_lexicon(spec.lexicon_path)) lex[k] = v;
    src.model = compile_lexicon(lex, schema);
    return src;
  }

  if (human.documents.empty())
    throw Error("weak source '" + spec.source_id +
                "' needs at least one human-labeled document");
  std::vector<WeightedDocument> hw;
  for (const Document& d : human.documents)
    hw.push_back(make_weighted_from_gold(d, schema, Provenance::human()));
  const auto examples = examples_of(hw);

  if (spec.kind == WeakSourceKind::kModelWindow) {
    WindowArch wa = spec.window_arch;
    wa.num_tags = schema.num_tags();
    WindowParams wp = init_window(wa, spec.seed);
    src.losses = train_window(wp, examples, spec.epochs, spec.train);
    src.model = std::move(wp);
    return src;
  }

  TaggerParams tp;
  if (init) {
    tp = *init;
    if (tp.arch.num_tags != schema.num_tags())
      throw Error("weak source '" + spec.source_id +
                  "': initial parameters have the wrong tag count");
  } else {
    ArchConfig arch = spec.arch;
    arch.num_tags = schema.num_tags();
    tp = init_params(arch, spec.seed);
    if (spec.pretrain_epochs > 0 && unlabeled && !unlabeled->documents.empty()) {
      PretrainConfig pc;
      pc.train = spec.train;
      pc.epochs = spec.pretrain_epochs;
      pretrain_masked(tp, unlabeled->documents, pc);
    }
  }
  Trainer trainer(tp, spec.train);
  for (int e = 0; e < spec.epochs && spec.train.proceed(); ++e)
    src.losses.push_back(trainer.epoch(examples, {}));
  src.model = std::move(tp);
  return src;
}

namespace {

Prediction dictionary_predict(const WeakSource& src, const CompiledLexicon& lex,
                              const Document& doc) {
  const std::size_t n = doc.tokens.size();
  std::vector<std::string> words;
  words.reserve(n);
  for (const Token& t : doc.tokens) words.push_back(lower(t.text));
  std::vector<EntitySpan> spans;
  std::size_t i = 0;
  while (i < n) {
    bool hit = false;
    for (const auto& e : lex.entries) {
      const std::size_t k = e.words.size();
      if (i + k > n) continue;
      if (std::equal(e.words.begin(), e.words.end(), words.begin() + static_cast<long>(i))) {
        spans.push_back({e.type, i, i + k});
        i += k;
        hit = true;
        break;
      }
    }
    if (!hit) ++i;
  }
  Prediction p;
  p.tags = encode_bioes(spans, n, src.schema);
  p.confidence.assign(n, src.spec.default_confidence);
  for (const EntitySpan& sp : spans)
    for (std::size_t t = sp.begin; t < sp.end; ++t)
      p.confidence[t] = src.spec.match_confidence;
  return p;
}

}  // namespace

Prediction weak_predict(const WeakSource& source, const Document& doc) {
  if (const auto* tp = std::get_if<TaggerParams>(&source.model))
    return predict(*tp, doc, source.schema);
  if (const auto* wp = std::get_if<WindowParams>(&source.model))
    return predict_window(*wp, doc, source.schema);
  return dictionary_predict(source, std::get<CompiledLexicon>(source.model), doc);
}

WeakLabels infer_weak_labels(const WeakSource& source, const Corpus& unlabeled,
                             double threshold, int jobs) {
  WeakLabels out;
  WeakLabelReport& rep = out.report;
  rep.source_id = source.spec.source_id;
  rep.threshold = threshold;
  for (const std::string& t : source.schema.entity_types())
    rep.spans_per_type[t] = 0;
  std::vector<ThresholdResult> results(unlabeled.documents.size());
  parallel_for(results.size(), jobs, [&](std::size_t i) {
    const Document& doc = unlabeled.documents[i];
    Prediction p = weak_predict(source, doc);
    if (source.spec.corruption > 0 && source.schema.size() > 1) {
      Rng rng(source.spec.seed, "corrupt/" + doc.id);
      std::vector<EntitySpan> spans = decode_bioes(p.tags).spans;
      for (EntitySpan& sp : spans) {
        if (!rng.bernoulli(source.spec.corruption)) continue;
        const int shift = 1 + static_cast<int>(rng.index(source.schema.size() - 1));
        sp.type = (sp.type + shift) % static_cast<int>(source.schema.size());
      }
      p.tags = encode_bioes(spans, doc.tokens.size(), source.schema);
    }
    results[i] = weight_and_threshold(doc, p.tags, p.confidence,
                                      source.spec.source_id, threshold);
    results[i].doc.document.gold_spans.clear();
  });
  std::size_t kept = 0, total = 0;
  for (ThresholdResult& tr : results) {
    const Document& doc = tr.doc.document;
    for (double w : tr.doc.weights) kept += w > 0.0;
    total += doc.tokens.size();
    for (const EntitySpan& sp : decode_bioes(tr.doc.tags).spans)
      if (tr.doc.weights[sp.begin] > 0.0)
        ++rep.spans_per_type[source.schema.name(sp.type)];
    out.docs.push_back(std::move(tr.doc));
  }
  rep.documents = out.docs.size();
  rep.retained_fraction =
      total ? static_cast<double>(kept) / static_cast<double>(total) : 0.0;
  return out;
}

namespace {

void finish(PrecisionRecall& pr) {
  pr.precision.reset();
  pr.recall.reset();
  if (pr.predicted)
    pr.precision = static_cast<double>(pr.true_pos) / static_cast<double>(pr.predicted);
  if (pr.gold)
    pr.recall = static_cast<double>(pr.true_pos) / static_cast<double>(pr.gold);
}

}  // namespace

WeakLabelScore score_weak_labels(const std::vector<WeightedDocument>& weak,
                                 const Corpus& sealed_gold) {
  std::map<std::string, const Document*> gold_by_id;
  for (const Document& d : sealed_gold.documents) gold_by_id[d.id] = &d;
  const EntitySchema& schema = sealed_gold.schema;

  WeakLabelScore s;
  for (const std::string& t : schema.entity_types()) {
    s.token_by_type[t];
    s.span_by_type[t];
  }
  for (const WeightedDocument& wd : weak) {
    auto it = gold_by_id.find(wd.document.id);
    if (it == gold_by_id.end())
      throw Error("score_weak_labels: no sealed gold for document '" +
                  wd.document.id + "'");
    const Document& gold = *it->second;
    if (gold.tokens.size() != wd.tags.size())
      throw Error("score_weak_labels: token count mismatch for '" +
                  wd.document.id + "'");
    const TagSequence gtags =
        encode_bioes(gold.gold_spans, gold.tokens.size(), schema);

    for (std::size_t i = 0; i < gtags.size(); ++i) {
      const bool retained = wd.weights[i] > 0.0;
      const int wt = wd.tags[i].is_outside() ? -1 : wd.tags[i].type;
      const int gt = gtags[i].is_outside() ? -1 : gtags[i].type;
      if (retained && wt >= 0) {
        ++s.token.predicted;
        ++s.token_by_type[schema.name(wt)].predicted;
      }
      if (gt >= 0) {
        ++s.token.gold;
        ++s.token_by_type[schema.name(gt)].gold;
      }
      if (retained && wt >= 0 && wt == gt) {
        ++s.token.true_pos;
        ++s.token_by_type[schema.name(wt)].true_pos;
      }
    }

    std::set<EntitySpan> gold_spans(gold.gold_spans.begin(), gold.gold_spans.end());
    for (const EntitySpan& g : gold.gold_spans) {
      ++s.span.gold;
      ++s.span_by_type[schema.name(g.type)].gold;
    }
    for (const EntitySpan& sp : decode_bioes(wd.tags).spans) {
      bool retained = true;
      for (std::size_t i = sp.begin; i < sp.end; ++i)
        retained = retained && wd.weights[i] > 0.0;
      if (!retained) continue;
      ++s.span.predicted;
      ++s.span_by_type[schema.name(sp.type)].predicted;
      if (gold_spans.erase(sp)) {
        ++s.span.true_pos;
        ++s.span_by_type[schema.name(sp.type)].true_pos;
      }
    }
  }
  finish(s.token);
  finish(s.span);
  for (auto& [k, v] : s.token_by_type) finish(v);
  for (auto& [k, v] : s.span_by_type) finish(v);
  return s;
}

}  // namespace nat
