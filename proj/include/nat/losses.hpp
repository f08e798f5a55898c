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

#include <span>

#include "nat/params.hpp"

namespace nat {

enum class LossKind { kCrossEntropy, kNoiseAware };

/// How the opposite-model term reaches the parameters.
enum class GradientMode {
  kDetached,     ///< L0 is reported but sends no gradient
  kFlowThrough,  ///< gradient flows through p' = (max + min) - p
};

struct LossSpec {
  LossKind kind = LossKind::kCrossEntropy;
  double lambda = 0.1;
  GradientMode mode = GradientMode::kDetached;
};

/// Sum-form loss terms over one sequence. Tokens with weight 0 are excluded
/// from both terms and from `count`.
struct LossTerms {
  double sum = 0;      ///< sum of c*CE(main) + lambda*CE(opposite)
  double main = 0;     ///< sum of c*CE(main)
  double opposite = 0; ///< sum of CE(opposite) over retained tokens
  double count = 0;    ///< number of retained tokens
  RowMatrix d_main;    ///< d sum / d main logits
  RowMatrix d_opposite;
};

/// Cross-entropy of a logits row against `target`, via log-sum-exp.
double row_cross_entropy(const RowMatrix& logits, Eigen::Index row,
                         int target);

/// Row-wise softmax.
RowMatrix softmax_rows(const RowMatrix& logits);

/// `opposite` may be null when lambda is 0.
LossTerms noise_aware_terms(const RowMatrix& main_logits,
                            const RowMatrix* opposite_logits,
                            std::span<const int> targets,
                            std::span<const double> weights, double lambda,
                            bool want_grads);

/// Per-layer extrema sums (max + min), one per tensor.
std::vector<double> layer_extrema_sums(const ParamSet& params);

/// p' = m_j - p for each tensor j, with m_j taken from `sums`.
ParamSet reflect_layers(const ParamSet& params, const std::vector<double>& sums);

}  // namespace nat
