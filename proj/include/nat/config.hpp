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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nat/mini_invoice.hpp"
#include "nat/noise_aware.hpp"
#include "nat/weak_supervision.hpp"

namespace nat {

enum class PhaseOneMode { kPretrain, kCheckpoint, kRandom };

struct DataConfig {
  /// Canonical corpus files. When `human` is empty the mini-invoice
  /// benchmark is generated instead.
  std::filesystem::path human, unlabeled, unlabeled_gold, test;
  MiniInvoiceConfig benchmark;  ///< n_documents unused; sizes below
  std::size_t bench_human = 30;
  std::size_t bench_unlabeled = 100;
  std::size_t bench_test = 100;
  std::uint64_t bench_seed = 1;
};

/// Desk-scale tagger used by the pipeline defaults.
inline ArchConfig desk_arch() {
  ArchConfig a;
  a.word_dim = 32;
  a.geo_dim = 16;
  a.model_dim = 64;
  a.heads = 4;
  a.layers = 2;
  a.ff_dim = 128;
  a.vocab_size = 4096;
  return a;
}

struct PipelineConfig {
  std::uint64_t seed = 0;
  double t_max = 1800;
  int jobs = 1;

  DataConfig data;
  ArchConfig arch = desk_arch();
  AdamConfig adam{3e-3};
  std::size_t batch_size = 8;

  PhaseOneMode phase1 = PhaseOneMode::kPretrain;
  int phase1_epochs = 10;
  double mask_rate = 0.15;
  std::filesystem::path phase1_checkpoint;

  std::vector<WeakSourceSpec> weak_sources;
  NoiseAwareConfig noise_aware;
  /// Confidence re-weighting and the opposite-model term in Phase II.
  bool noise_aware_training = true;
  /// Default label corruption of the shipped weak sources.
  double weak_corruption = 0.2;

  bool phase2 = true;
  int phase2_epochs = 8;
  bool phase3 = true;
  int phase3_epochs = 3;
  std::filesystem::path rules;  ///< empty: built-in invoice rules
  bool drop_identity = false;

  int tx_epochs = 60;
  int st_rounds = 3;

  std::vector<std::uint64_t> ablation_seeds = {0, 1, 2, 3, 4};
  int trials = 9;
  std::vector<std::size_t> curve_sizes = {5, 10, 20, 30};
  int curve_trials = 5;

  void validate() const;
};

/// The full configuration tree with every key at its default.
nlohmann::json default_config_json();

/// Layers a user document over the defaults. Unknown keys and type
/// mismatches throw Error naming the dotted key.
nlohmann::json merge_config(const nlohmann::json& base, const nlohmann::json& user);

/// Applies "a.b.c=value". The value is parsed as JSON when it parses,
/// otherwise taken as a string; it must match the type already at that key.
void apply_override(nlohmann::json& config, const std::string& assignment);

PipelineConfig config_from_json(const nlohmann::json& j);

/// Defaults, then `path` (when non-empty), then overrides.
nlohmann::json load_config_json(const std::filesystem::path& path,
                                const std::vector<std::string>& overrides);

}  // namespace nat
