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

#include "nat/window_tagger.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nat {

namespace {

int feature_width(const WindowArch& a) { return a.word_dim + kDenseFeatures; }

struct WindowCache {
  std::vector<int> ids;
  RowMatrix x;  ///< n x (2r+1)*(word_dim+kDenseFeatures)
  RowMatrix h;
};

RowMatrix run(const WindowParams& p, const Document& doc, WindowCache& c) {
  const WindowArch& a = p.arch;
  ArchConfig hash_arch;
  hash_arch.vocab_size = a.vocab_size;
  TokenFeatures f = featurize(doc, hash_arch);
  const auto n = static_cast<Eigen::Index>(doc.tokens.size());
  const int fw = feature_width(a);
  const int slots = 2 * a.radius + 1;
  c.ids = f.word_ids;
  c.x = RowMatrix::Zero(n, slots * fw);
  const ConstMatrixMap emb = p.params[0].mat();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int s = 0; s < slots; ++s) {
      const Eigen::Index j = i + s - a.radius;
      if (j < 0 || j >= n) continue;
      c.x.row(i).segment(s * fw, a.word_dim) =
          emb.row(c.ids[static_cast<std::size_t>(j)]);
      c.x.row(i).segment(s * fw + a.word_dim, kDenseFeatures) = f.geometry.row(j);
    }
  }
  c.h = c.x * p.params[1].mat();
  c.h.rowwise() += p.params[2].mat().row(0);
  c.h = c.h.array().tanh();
  RowMatrix logits = c.h * p.params[3].mat();
  logits.rowwise() += p.params[4].mat().row(0);
  return logits;
}

}  // namespace

WindowParams init_window(const WindowArch& arch, std::uint64_t seed) {
  if (arch.word_dim <= 0 || arch.hidden <= 0 || arch.radius < 0 ||
      arch.vocab_size < 2 || arch.num_tags < 1)
    throw Error("WindowArch: dimensions must be positive");
  WindowParams p;
  p.arch = arch;
  const auto in = static_cast<std::size_t>((2 * arch.radius + 1) *
                                           feature_width(arch));
  p.params.add("win.word", static_cast<std::size_t>(arch.vocab_size),
               static_cast<std::size_t>(arch.word_dim));
  p.params.add("win.hidden.w", in, static_cast<std::size_t>(arch.hidden));
  p.params.add("win.hidden.b", 1, static_cast<std::size_t>(arch.hidden));
  p.params.add("win.out.w", static_cast<std::size_t>(arch.hidden),
               static_cast<std::size_t>(arch.num_tags));
  p.params.add("win.out.b", 1, static_cast<std::size_t>(arch.num_tags));
  Rng rng(seed, "window_init");
  init_uniform(p.params, rng);
  return p;
}

RowMatrix window_logits(const WindowParams& p, const Document& doc) {
  WindowCache c;
  return run(p, doc, c);
}

GradResult window_grad(const WindowParams& p,
                       std::span<const TrainingExample> batch) {
  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return batch[a].doc->id < batch[b].doc->id;
  });
  GradResult out;
  out.grads = p.params.zeros_like();
  ParamSet& g = out.grads;
  const WindowArch& a = p.arch;
  const int fw = feature_width(a);
  double sum = 0, count = 0;
  for (std::size_t bi : order) {
    const TrainingExample& ex = batch[bi];
    WindowCache c;
    RowMatrix logits = run(p, *ex.doc, c);
    LossTerms t = noise_aware_terms(logits, nullptr, ex.targets, ex.weights,
                                    0.0, true);
    if (!std::isfinite(t.sum))
      throw Error("non-finite loss on document '" + ex.doc->id + "'");
    sum += t.sum;
    count += t.count;
    if (t.count == 0) continue;
    g[3].mat().noalias() += c.h.transpose() * t.d_main;
    g[4].mat().row(0) += t.d_main.colwise().sum();
    RowMatrix dh = t.d_main * p.params[3].mat().transpose();
    dh = dh.array() * (1.0 - c.h.array().square());
    g[1].mat().noalias() += c.x.transpose() * dh;
    g[2].mat().row(0) += dh.colwise().sum();
    RowMatrix dx = dh * p.params[1].mat().transpose();
    MatrixMap gemb = g[0].mat();
    const auto n = static_cast<Eigen::Index>(c.ids.size());
    const int slots = 2 * a.radius + 1;
    for (Eigen::Index i = 0; i < n; ++i)
      for (int s = 0; s < slots; ++s) {
        const Eigen::Index j = i + s - a.radius;
        if (j < 0 || j >= n) continue;
        gemb.row(c.ids[static_cast<std::size_t>(j)]) +=
            dx.row(i).segment(s * fw, a.word_dim);
      }
  }
  out.retained = count;
  if (count == 0) return out;
  out.loss = out.main_loss = sum / count;
  g.scale(1.0 / count);
  return out;
}

std::vector<double> train_window(WindowParams& p,
                                 std::span<const TrainingExample> examples,
                                 int epochs, const TrainConfig& config) {
  if (examples.empty()) throw Error("train_window: empty corpus");
  Adam adam(p.params, config.adam);
  std::vector<double> losses;
  for (int e = 0; e < epochs && config.proceed(); ++e) {
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(config.seed, "window/epoch/" + std::to_string(e));
    rng.shuffle(order);
    double total = 0;
    std::size_t batches = 0;
    std::vector<TrainingExample> batch;
    for (std::size_t s = 0; s < order.size(); s += config.batch_size) {
      batch.clear();
      for (std::size_t k = s; k < std::min(order.size(), s + config.batch_size);
           ++k)
        batch.push_back(examples[order[k]]);
      GradResult g = window_grad(p, batch);
      total += g.loss;
      ++batches;
      adam.step(p.params, g.grads);
    }
    losses.push_back(total / static_cast<double>(batches));
  }
  return losses;
}

Prediction predict_window(const WindowParams& p, const Document& doc,
                          const EntitySchema& schema) {
  RowMatrix probs = softmax_rows(window_logits(p, doc));
  TagSequence raw(doc.tokens.size());
  Prediction pr;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index best;
    pr.confidence.push_back(probs.row(i).maxCoeff(&best));
    raw[static_cast<std::size_t>(i)] = Tag::from_id(static_cast<int>(best));
  }
  pr.tags = repair_bioes(raw, schema);
  return pr;
}

}  // namespace nat
