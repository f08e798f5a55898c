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

#include "nat/tagger.hpp"

namespace nat {

/// Windowed feed-forward tagger: each token is classified from its own
/// features concatenated with those of its +-`radius` reading-order
/// neighbours (zero padded). Architecturally unrelated to the attention
/// tagger, which is the point of using it as a second weak source.
struct WindowArch {
  int word_dim = 32;
  int hidden = 64;
  int radius = 2;
  int vocab_size = 8192;
  int num_tags = 0;

  bool operator==(const WindowArch&) const = default;
};

struct WindowParams {
  WindowArch arch;
  ParamSet params;
  bool operator==(const WindowParams&) const = default;
};

WindowParams init_window(const WindowArch& arch, std::uint64_t seed);

RowMatrix window_logits(const WindowParams& p, const Document& doc);

/// Weighted cross-entropy over the batch, normalized by retained tokens.
GradResult window_grad(const WindowParams& p,
                       std::span<const TrainingExample> batch);

/// Trains for `epochs` with Adam; returns per-epoch mean batch loss.
std::vector<double> train_window(WindowParams& p,
                                 std::span<const TrainingExample> examples,
                                 int epochs, const TrainConfig& config);

Prediction predict_window(const WindowParams& p, const Document& doc,
                          const EntitySchema& schema);

}  // namespace nat
