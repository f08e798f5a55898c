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

// Central finite-difference oracle for tagger gradients. Loss values are
// recomputed from forward passes and a local cross-entropy, independent of
// the analytic backward pass.

#include <cmath>
#include <string>
#include <vector>

#include "nat/noise_aware.hpp"
#include "nat/tagger.hpp"

namespace nat::testing {

struct CoordCheck {
  std::string tensor;
  std::size_t index = 0;
  double analytic = 0;
  double numeric = 0;
  bool ok = false;
};

/// Loss the oracle differentiates. `sums` freezes the reflection extrema.
inline double oracle_loss(const TaggerParams& params,
                          const std::vector<TrainingExample>& batch,
                          const LossSpec& spec, const std::vector<double>& sums,
                          bool include_opposite) {
  TaggerParams opp;
  const bool na = spec.kind == LossKind::kNoiseAware && spec.lambda != 0;
  if (na && include_opposite) {
    opp = params;
    for (std::size_t j = 0; j < opp.params.size(); ++j)
      for (double& v : opp.params[j].data) v = sums[j] - v;
  }
  double total = 0, count = 0;
  for (const TrainingExample& ex : batch) {
    ForwardResult m = forward(params, *ex.doc);
    ForwardResult o;
    if (na && include_opposite) o = forward(opp, *ex.doc);
    for (std::size_t i = 0; i < ex.targets.size(); ++i) {
      const double c = ex.weights[i];
      if (c == 0) continue;
      const auto r = static_cast<Eigen::Index>(i);
      total += -c * std::log(m.probs(r, ex.targets[i]));
      if (na && include_opposite)
        total += -spec.lambda * std::log(o.probs(r, ex.targets[i]));
      count += 1;
    }
  }
  return count > 0 ? total / count : 0.0;
}

/// Checks `per_tensor` coordinates of every tensor (embedding rows used by
/// the batch are preferred). Returns one record per coordinate.
inline std::vector<CoordCheck> check_gradients(
    const TaggerParams& params, const std::vector<TrainingExample>& batch,
    const LossSpec& spec, std::size_t per_tensor, std::uint64_t seed,
    double step = 1e-4, double rtol = 1e-3, double atol = 1e-6) {
  const std::vector<double> sums = layer_extrema_sums(params.params);
  const bool na = spec.kind == LossKind::kNoiseAware && spec.lambda != 0;
  const bool include_opp = na && spec.mode == GradientMode::kFlowThrough;
  ParamSet opposite = reflect_layers(params.params, sums);
  GradResult g = grad(params, batch, spec, na ? &opposite : nullptr);

  std::vector<int> used_rows;
  for (const auto& ex : batch)
    for (int id : featurize(*ex.doc, params.arch).word_ids)
      used_rows.push_back(id);

  Rng rng(seed, "gradcheck");
  std::vector<CoordCheck> out;
  TaggerParams probe = params;
  for (std::size_t j = 0; j < params.params.size(); ++j) {
    const Tensor& t = params.params[j];
    for (std::size_t k = 0; k < per_tensor; ++k) {
      std::size_t idx;
      if (t.name == "embed.word") {
        const auto row = static_cast<std::size_t>(rng.pick(used_rows));
        idx = row * t.cols + rng.index(t.cols);
      } else {
        idx = rng.index(t.size());
      }
      const double orig = t.data[idx];
      probe.params[j].data[idx] = orig + step;
      const double up = oracle_loss(probe, batch, spec, sums, include_opp);
      probe.params[j].data[idx] = orig - step;
      const double down = oracle_loss(probe, batch, spec, sums, include_opp);
      probe.params[j].data[idx] = orig;
      CoordCheck c;
      c.tensor = t.name;
      c.index = idx;
      c.analytic = g.grads[j].data[idx];
      c.numeric = (up - down) / (2 * step);
      c.ok = std::abs(c.analytic - c.numeric) <=
             atol + rtol * std::max(std::abs(c.analytic), std::abs(c.numeric));
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace nat::testing
