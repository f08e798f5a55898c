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

#include "nat/noise_aware.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace nat {

// --- Loss primitives ------------------------------------------------------

double row_cross_entropy(const RowMatrix& logits, Eigen::Index row,
                         int target) {
  const double m = logits.row(row).maxCoeff();
  const double lse = m + std::log((logits.row(row).array() - m).exp().sum());
  return lse - logits(row, target);
}

RowMatrix softmax_rows(const RowMatrix& logits) {
  RowMatrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - m).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

LossTerms noise_aware_terms(const RowMatrix& main_logits,
                            const RowMatrix* opposite_logits,
                            std::span<const int> targets,
                            std::span<const double> weights, double lambda,
                            bool want_grads) {
  const Eigen::Index n = main_logits.rows();
  if (static_cast<std::size_t>(n) != targets.size() ||
      targets.size() != weights.size())
    throw Error("noise-aware loss: logits, targets and weights misaligned");
  const bool use_opp = lambda != 0.0;
  if (use_opp && (!opposite_logits || opposite_logits->rows() != n ||
                  opposite_logits->cols() != main_logits.cols()))
    throw Error("noise-aware loss: opposite logits missing or misshapen");
  if (!main_logits.allFinite() || (use_opp && !opposite_logits->allFinite()))
    throw Error("noise-aware loss: non-finite logits");

  LossTerms t;
  RowMatrix pm, po;
  if (want_grads) {
    t.d_main = RowMatrix::Zero(n, main_logits.cols());
    pm = softmax_rows(main_logits);
    if (use_opp) {
      t.d_opposite = RowMatrix::Zero(n, main_logits.cols());
      po = softmax_rows(*opposite_logits);
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double c = weights[static_cast<std::size_t>(i)];
    if (!(c >= 0.0 && c <= 1.0))
      throw Error("noise-aware loss: weight outside [0, 1]");
    if (c == 0.0) continue;
    const int y = targets[static_cast<std::size_t>(i)];
    if (y < 0 || y >= main_logits.cols())
      throw Error("noise-aware loss: target out of range");
    const double ce = c * row_cross_entropy(main_logits, i, y);
    t.main += ce;
    t.sum += ce;
    if (use_opp) {
      const double ce0 = row_cross_entropy(*opposite_logits, i, y);
      t.opposite += ce0;
      t.sum += lambda * ce0;
    }
    t.count += 1.0;
    if (want_grads) {
      t.d_main.row(i) = c * pm.row(i);
      t.d_main(i, y) -= c;
      if (use_opp) {
        t.d_opposite.row(i) = lambda * po.row(i);
        t.d_opposite(i, y) -= lambda;
      }
    }
  }
  return t;
}

std::vector<double> layer_extrema_sums(const ParamSet& params) {
  std::vector<double> sums;
  sums.reserve(params.size());
  for (const Tensor& t : params) {
    if (t.data.empty())
      throw Error("opposite model: layer '" + t.name + "' is empty");
    auto [mn, mx] = std::minmax_element(t.data.begin(), t.data.end());
    if (!std::isfinite(*mn) || !std::isfinite(*mx))
      throw Error("opposite model: layer '" + t.name + "' is not finite");
    sums.push_back(*mx + *mn);
  }
  return sums;
}

ParamSet reflect_layers(const ParamSet& params,
                        const std::vector<double>& sums) {
  if (sums.size() != params.size())
    throw Error("reflect_layers: one extrema sum per layer required");
  ParamSet out = params;
  for (std::size_t j = 0; j < out.size(); ++j)
    for (double& v : out[j].data) v = sums[j] - v;
  return out;
}

// --- Module operations ----------------------------------------------------

double NoiseAwareConfig::threshold_for(const std::string& source_id) const {
  auto it = thresholds.find(source_id);
  return it == thresholds.end() ? default_threshold : it->second;
}

void NoiseAwareConfig::validate() const {
  if (!(lambda >= 0.0)) throw Error("noise_aware.lambda must be >= 0");
  auto check = [](double c, const std::string& what) {
    if (!(c >= 0.0 && c <= 1.0))
      throw Error(what + " must lie in [0, 1]");
  };
  check(default_threshold, "noise_aware.threshold");
  for (const auto& [id, c] : thresholds)
    check(c, "threshold for source '" + id + "'");
}

std::vector<int> WeightedDocument::target_ids() const {
  std::vector<int> ids;
  ids.reserve(tags.size());
  for (const Tag& t : tags) ids.push_back(t.id());
  return ids;
}

TrainingExample WeightedDocument::example() const {
  return {&document, target_ids(), weights};
}

TaggerParams opposite_params(const TaggerParams& params) {
  TaggerParams out;
  out.arch = params.arch;
  out.epoch = params.epoch;
  out.params = reflect_layers(params.params, layer_extrema_sums(params.params));
  return out;
}

namespace {

std::vector<int> ids_of(const TagSequence& tags) {
  std::vector<int> ids;
  ids.reserve(tags.size());
  for (const Tag& t : tags) ids.push_back(t.id());
  return ids;
}

}  // namespace

double noise_aware_loss(const RowMatrix& main_logits,
                        const RowMatrix& opposite_logits,
                        const TagSequence& targets,
                        const std::vector<double>& weights,
                        const NoiseAwareConfig& config) {
  const auto ids = ids_of(targets);
  LossTerms t = noise_aware_terms(main_logits, &opposite_logits, ids, weights,
                                  config.lambda, false);
  return t.count > 0 ? t.sum / t.count : 0.0;
}

double cross_entropy(const RowMatrix& logits, const TagSequence& targets) {
  const auto ids = ids_of(targets);
  const std::vector<double> ones(ids.size(), 1.0);
  LossTerms t = noise_aware_terms(logits, nullptr, ids, ones, 0.0, false);
  return t.count > 0 ? t.sum / t.count : 0.0;
}

ThresholdResult weight_and_threshold(const Document& doc,
                                     const TagSequence& tags,
                                     const std::vector<double>& confidence,
                                     const std::string& source_id,
                                     double threshold) {
  const std::size_t n = doc.tokens.size();
  if (tags.size() != n || confidence.size() != n)
    throw Error("weight_and_threshold: tags/confidences misaligned with '" +
                doc.id + "'");
  ThresholdResult r;
  WeightedDocument& wd = r.doc;
  wd.document = doc;
  wd.tags = tags;
  wd.provenance = Provenance::weak(source_id);
  wd.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    wd.weights[i] = confidence[i] >= threshold ? confidence[i] : 0.0;
  for (const EntitySpan& sp : decode_bioes(tags).spans) {
    bool any_low = false;
    for (std::size_t i = sp.begin; i < sp.end; ++i)
      any_low = any_low || wd.weights[i] == 0.0;
    if (any_low)
      for (std::size_t i = sp.begin; i < sp.end; ++i) wd.weights[i] = 0.0;
  }
  std::size_t kept = 0;
  for (double w : wd.weights) kept += w > 0.0;
  r.retained_fraction = n ? static_cast<double>(kept) / static_cast<double>(n)
                          : 0.0;
  return r;
}

WeightedDocument make_weighted_from_gold(const Document& doc,
                                         const EntitySchema& schema,
                                         Provenance provenance) {
  WeightedDocument wd;
  wd.document = doc;
  wd.tags = encode_bioes(doc.gold_spans, doc.tokens.size(), schema);
  wd.weights.assign(doc.tokens.size(), 1.0);
  wd.provenance = std::move(provenance);
  return wd;
}

WeightedDocument make_human_weighted(const Document& doc,
                                     const EntitySchema& schema) {
  if (doc.gold_spans.empty())
    throw Error("make_human_weighted: document '" + doc.id +
                "' has no gold spans");
  return make_weighted_from_gold(doc, schema, Provenance::human());
}

namespace {

CorpusFile to_file(const EntitySchema& schema, const Provenance& provenance,
                   const std::vector<WeightedDocument>& docs) {
  CorpusFile f{schema, provenance, {}};
  f.records.reserve(docs.size());
  for (const WeightedDocument& wd : docs) {
    DocRecord rec{wd.document, wd.weights, wd.provenance};
    rec.doc.gold_spans = decode_bioes(wd.tags).spans;
    f.records.push_back(std::move(rec));
  }
  return f;
}

}  // namespace

void write_weighted_corpus(const EntitySchema& schema,
                           const Provenance& provenance,
                           const std::vector<WeightedDocument>& docs,
                           const std::filesystem::path& path) {
  write_corpus_file(to_file(schema, provenance, docs), path);
}

std::vector<WeightedDocument> read_weighted_corpus(
    const std::filesystem::path& path, EntitySchema* schema) {
  CorpusFile f = read_corpus_file(path);
  if (schema) *schema = f.schema;
  std::vector<WeightedDocument> out;
  for (DocRecord& r : f.records) {
    WeightedDocument wd;
    wd.tags = encode_bioes(r.doc.gold_spans, r.doc.tokens.size(), f.schema);
    wd.weights = r.weights.empty()
                     ? std::vector<double>(r.doc.tokens.size(), 1.0)
                     : r.weights;
    wd.provenance = r.provenance;
    wd.document = std::move(r.doc);
    out.push_back(std::move(wd));
  }
  return out;
}

std::uint64_t weighted_checksum(const EntitySchema& schema,
                                const std::vector<WeightedDocument>& docs) {
  CorpusFile f = to_file(schema, Provenance::human(), docs);
  std::uint64_t h = fnv1a(format_schema_line(f.schema, f.provenance));
  for (const DocRecord& r : f.records)
    h = fnv1a(format_doc_line(r, f.schema), h);
  return h;
}

}  // namespace nat
