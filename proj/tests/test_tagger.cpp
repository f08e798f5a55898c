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

#include <algorithm>
#include <chrono>
#include <fstream>
#include <cmath>

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "nat/noise_aware.hpp"
#include "nat/tagger.hpp"
#include "test_support.hpp"

namespace nat {
namespace {

using testing::line_document;
using testing::tiny_arch;

std::vector<TrainingExample> random_batch(const std::vector<Document>& docs,
                                          int num_tags, Rng& rng,
                                          double zero_weight_rate) {
  std::vector<TrainingExample> batch;
  for (const Document& d : docs) {
    TrainingExample ex;
    ex.doc = &d;
    for (std::size_t i = 0; i < d.tokens.size(); ++i) {
      ex.targets.push_back(static_cast<int>(rng.index(num_tags)));
      ex.weights.push_back(rng.bernoulli(zero_weight_rate) ? 0.0
                                                           : rng.uniform(0.2, 1.0));
    }
    batch.push_back(std::move(ex));
  }
  return batch;
}

TEST(TaggerInit, DeterministicAndBiasesZero) {
  ArchConfig arch = tiny_arch(9);
  TaggerParams a = init_params(arch, 3), b = init_params(arch, 3);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.epoch, 0);
  for (const Tensor& t : a.params)
    if (t.name.size() > 2 && t.name.substr(t.name.size() - 2) == ".b")
      for (double v : t.data) EXPECT_EQ(v, 0.0) << t.name;
  TaggerParams c = init_params(arch, 4);
  EXPECT_NE(a.params, c.params);
}

TEST(TaggerForward, SoftmaxRowsSumToOne) {
  TaggerParams p = init_params(tiny_arch(9), 1);
  Document d = line_document(11);
  ForwardResult r = forward(p, d);
  ASSERT_EQ(r.probs.rows(), 11);
  for (Eigen::Index i = 0; i < r.probs.rows(); ++i)
    EXPECT_NEAR(r.probs.row(i).sum(), 1.0, 1e-6);
}

TEST(TaggerForward, ZeroOutputLayerGivesUniformRows) {
  TaggerParams p = init_params(tiny_arch(9), 1);
  p.params.at("out.w").data.assign(p.params.at("out.w").size(), 0.0);
  Document d = line_document(5);
  ForwardResult r = forward(p, d);
  for (Eigen::Index i = 0; i < r.probs.rows(); ++i)
    for (Eigen::Index k = 0; k < r.probs.cols(); ++k)
      EXPECT_NEAR(r.probs(i, k), 1.0 / 9.0, 1e-12);
  EntitySchema schema("t", {"a", "b"});
  Prediction pr = predict(p, d, schema);
  for (double c : pr.confidence) EXPECT_NEAR(c, 1.0 / 9.0, 1e-12);
}

TEST(TaggerForward, SwappingIsolatedTokensSwapsTheirRows) {
  TaggerParams p = init_params(tiny_arch(9), 2);
  // One token per line, so no token has a same-line neighbour.
  Document d = line_document(6);
  for (std::size_t i = 0; i < 6; ++i) {
    const double y = 0.1 + 0.1 * static_cast<double>(i);
    d.tokens[i].bbox = quantize6({0.1 + 0.05 * static_cast<double>(i), y, 0.3, y + 0.02});
  }
  Document swapped = d;
  std::swap(swapped.tokens[1], swapped.tokens[4]);
  ForwardResult a = forward(p, d), b = forward(p, swapped);
  for (Eigen::Index i = 0; i < 6; ++i) {
    Eigen::Index j = i == 1 ? 4 : i == 4 ? 1 : i;
    EXPECT_LT((a.logits.row(i) - b.logits.row(j)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(TaggerForward, GeometryAndNeighboursMatter) {
  TaggerParams p = init_params(tiny_arch(9), 2);
  Document d = line_document(6);
  ForwardResult a = forward(p, d);
  Document moved = d;
  moved.tokens[2].bbox = quantize6({0.5, 0.8, 0.6, 0.82});
  ForwardResult c = forward(p, moved);
  EXPECT_GT((a.logits.row(2) - c.logits.row(2)).cwiseAbs().maxCoeff(), 1e-6);

  // Features of token 1 see the gap to token 2.
  const TokenFeatures f = featurize(d, p.arch);
  const TokenFeatures g = featurize(moved, p.arch);
  EXPECT_NE(f.geometry.row(1), g.geometry.row(1));
  EXPECT_EQ(f.geometry.row(0), g.geometry.row(0));
  for (Eigen::Index i = 0; i < f.geometry.rows(); ++i)
    for (Eigen::Index k = 0; k < f.geometry.cols(); ++k)
      EXPECT_LE(std::abs(f.geometry(i, k)), 50.0);
}

TEST(TaggerForward, RejectsOverlongDocuments) {
  ArchConfig arch = tiny_arch(9);
  arch.max_seq_len = 4;
  TaggerParams p = init_params(arch, 1);
  try {
    forward(p, line_document(5));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("chunks"), std::string::npos);
  }
}

TEST(TaggerGrad, AllZeroWeightsGiveZeroLossAndGradient) {
  TaggerParams p = init_params(tiny_arch(9), 1);
  std::vector<Document> docs = {line_document(4)};
  Rng rng(1);
  auto batch = random_batch(docs, 9, rng, 1.0);
  GradResult g = grad(p, batch, {});
  EXPECT_EQ(g.loss, 0.0);
  for (const Tensor& t : g.grads)
    for (double v : t.data) ASSERT_EQ(v, 0.0);
}

TEST(TaggerGrad, SingleTokenDocumentMatchesFiniteDifferences) {
  TaggerParams p = init_params(tiny_arch(9), 5);
  std::vector<Document> docs = {line_document(1)};
  Rng rng(2);
  auto batch = random_batch(docs, 9, rng, 0.0);
  auto checks = testing::check_gradients(p, batch, {}, 3, 11);
  for (const auto& c : checks)
    EXPECT_TRUE(c.ok) << c.tensor << "[" << c.index << "] analytic "
                      << c.analytic << " numeric " << c.numeric;
}

TEST(TaggerGrad, DuplicatedDocumentKeepsMeanLoss) {
  TaggerParams p = init_params(tiny_arch(9), 5);
  std::vector<Document> docs = {line_document(5)};
  Rng rng(3);
  auto one = random_batch(docs, 9, rng, 0.2);
  std::vector<TrainingExample> two = {one[0], one[0]};
  EXPECT_NEAR(grad(p, one, {}).loss, grad(p, two, {}).loss, 1e-14);
}

TEST(TaggerGrad, SumFormLossScalesWithWeights) {
  TaggerParams p = init_params(tiny_arch(9), 5);
  std::vector<Document> docs = {line_document(6, "a"), line_document(3, "b")};
  Rng rng(4);
  auto batch = random_batch(docs, 9, rng, 0.3);
  auto scaled = batch;
  for (auto& ex : scaled)
    for (double& w : ex.weights) w *= 0.5;
  GradResult a = grad(p, batch, {}), b = grad(p, scaled, {});
  EXPECT_NEAR(b.loss * b.retained, 0.5 * a.loss * a.retained, 1e-12);
  for (std::size_t j = 0; j < a.grads.size(); ++j)
    for (std::size_t k = 0; k < a.grads[j].size(); ++k)
      ASSERT_NEAR(b.grads[j].data[k], 0.5 * a.grads[j].data[k],
                  1e-13 + 1e-12 * std::abs(a.grads[j].data[k]));
}

TEST(TaggerGrad, ParallelAccumulationIsSchedulingIndependent) {
  TaggerParams p = init_params(tiny_arch(9), 5);
  std::vector<Document> docs = {line_document(6, "c"), line_document(3, "a"),
                                line_document(4, "b")};
  Rng rng(5);
  auto batch = random_batch(docs, 9, rng, 0.1);
  GradResult serial = grad(p, batch, {}, nullptr, 1);
  GradResult parallel = grad(p, batch, {}, nullptr, 3);
  EXPECT_EQ(serial.grads, parallel.grads);
  std::reverse(batch.begin(), batch.end());
  EXPECT_EQ(grad(p, batch, {}, nullptr, 2).grads, serial.grads);
}

TEST(TaggerTrain, ZeroLearningRateOnlyAdvancesEpoch) {
  TaggerParams p = init_params(tiny_arch(9), 5);
  const TaggerParams before = p;
  std::vector<Document> docs = {line_document(6)};
  Rng rng(6);
  auto batch = random_batch(docs, 9, rng, 0.0);
  TrainConfig cfg;
  cfg.adam.learning_rate = 0.0;
  train_epoch(p, batch, cfg);
  EXPECT_EQ(p.params, before.params);
  EXPECT_EQ(p.epoch, 1);
}

TEST(TaggerTrain, DeterministicGivenSeed) {
  std::vector<Document> docs = {line_document(6, "a"), line_document(4, "b"),
                                line_document(5, "c")};
  Rng rng(7);
  auto batch = random_batch(docs, 9, rng, 0.0);
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.seed = 9;
  TaggerParams a = init_params(tiny_arch(9), 5), b = a;
  for (int e = 0; e < 3; ++e) {
    train_epoch(a, batch, cfg);
    train_epoch(b, batch, cfg);
  }
  EXPECT_EQ(a, b);
}

TEST(TaggerCheckpoint, RoundTripsThroughFloat32) {
  testing::TempDir dir;
  TaggerParams p = init_params(tiny_arch(9), 5);
  p.epoch = 7;
  save_tagger(p, dir.path() / "m.ckpt");
  TaggerParams q = load_tagger(dir.path() / "m.ckpt");
  EXPECT_EQ(q.arch, p.arch);
  EXPECT_EQ(q.epoch, 7);
  for (std::size_t j = 0; j < p.params.size(); ++j)
    for (std::size_t k = 0; k < p.params[j].size(); ++k)
      ASSERT_EQ(q.params[j].data[k],
                static_cast<double>(static_cast<float>(p.params[j].data[k])));
  // Saving the loaded copy is byte-stable.
  EXPECT_EQ(tagger_bytes(q), tagger_bytes(p));
}

TEST(TaggerCheckpoint, DetectsCorruption) {
  testing::TempDir dir;
  TaggerParams p = init_params(tiny_arch(9), 5);
  auto bytes = tagger_bytes(p);
  bytes[bytes.size() / 2] ^= 0x40;
  {
    std::ofstream out(dir.path() / "bad.ckpt", std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
  }
  EXPECT_THROW(load_tagger(dir.path() / "bad.ckpt"), Error);
}

TEST(TaggerSpeed, DefaultArchitectureEpochTiming) {
  Corpus c = testing::small_invoices(16);
  ArchConfig arch;
  arch.num_tags = c.schema.num_tags();
  TaggerParams p = init_params(arch, 1);
  std::vector<WeightedDocument> wds;
  for (const auto& d : c.documents)
    wds.push_back(make_human_weighted(d, c.schema));
  std::vector<TrainingExample> ex;
  std::size_t tokens = 0;
  for (const auto& w : wds) {
    ex.push_back(w.example());
    tokens += w.document.tokens.size();
  }
  auto t0 = std::chrono::steady_clock::now();
  train_epoch(p, ex, {});
  double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  RecordProperty("seconds_per_doc", std::to_string(s / 16));
  std::printf("epoch over 16 docs (%zu tokens): %.3f s\n", tokens, s);
}

}  // namespace
}  // namespace nat
