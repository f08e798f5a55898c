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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nat/doc_model.hpp"
#include "nat/losses.hpp"
#include "nat/params.hpp"

namespace nat {

/// Compact layout-aware tagger: hashed word embeddings plus projected box
/// geometry feed a pre-norm self-attention encoder and a linear tag head.
/// Token order only matters through the geometry (no index embeddings).
struct ArchConfig {
  int word_dim = 64;
  int geo_dim = 16;
  int model_dim = 128;
  int heads = 4;
  int layers = 2;
  int ff_dim = 256;
  int vocab_size = 8192;
  int num_tags = 0;
  int max_seq_len = 512;

  void validate() const;
  bool operator==(const ArchConfig&) const = default;
};

std::string arch_to_json(const ArchConfig& arch);
ArchConfig arch_from_json(const std::string& s);

struct TaggerParams {
  ArchConfig arch;
  ParamSet params;
  std::int64_t epoch = 0;

  bool operator==(const TaggerParams&) const = default;
};

/// Hashed word ids and normalized geometry for each token.
/// Per-token dense inputs: box corners mapped to [-1, 1], scaled width and
/// height, digit and letter fractions, leading capital, trailing colon, and
/// the horizontal gaps to the previous and next token in reading order.
constexpr int kDenseFeatures = 12;

struct TokenFeatures {
  std::vector<int> word_ids;
  RowMatrix geometry;  ///< n x kDenseFeatures
};

/// Id 0 is reserved for the mask token.
constexpr int kMaskId = 0;

/// Lowercases and maps every digit to '0' before hashing into [1, vocab).
int hash_word(const std::string& text, int vocab_size);
TokenFeatures featurize(const Document& doc, const ArchConfig& arch);

TaggerParams init_params(const ArchConfig& arch, std::uint64_t seed);

struct ForwardResult {
  RowMatrix logits;  ///< n x num_tags
  RowMatrix probs;
};

/// Throws Error when the document exceeds arch.max_seq_len tokens.
ForwardResult forward(const TaggerParams& params, const Document& doc);

struct TrainingExample {
  const Document* doc = nullptr;
  std::vector<int> targets;     ///< tag ids, one per token
  std::vector<double> weights;  ///< per-token weight in [0, 1]
};

struct GradResult {
  double loss = 0;           ///< normalized by the retained-token count
  double main_loss = 0;      ///< weighted CE part, same normalization
  double opposite_loss = 0;  ///< mean opposite CE over retained tokens
  double retained = 0;       ///< tokens with non-zero weight
  ParamSet grads;
};

/// Loss and gradient over a batch. Per token the contribution is
/// c*CE(main) (+ lambda*CE(opposite) for the noise-aware loss); the batch
/// loss divides the sum by the number of tokens with c > 0. For the
/// noise-aware loss, `opposite` is the reflected parameter set (built from
/// `params` when null).
GradResult grad(const TaggerParams& params,
                std::span<const TrainingExample> batch, const LossSpec& spec,
                const ParamSet* opposite = nullptr, int jobs = 1);

struct TrainConfig {
  AdamConfig adam;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  int jobs = 1;
  /// Consulted before every epoch of the built-in training loops; returning
  /// false ends training early.
  std::function<bool()> keep_going;

  bool proceed() const { return !keep_going || keep_going(); }
};

/// Owns the optimizer state across the epochs of one fine-tuning stage.
class Trainer {
 public:
  Trainer(TaggerParams& params, TrainConfig config);

  /// One pass over `examples` in shuffled mini-batches. For the noise-aware
  /// loss the opposite model is rebuilt once at the start of the epoch.
  /// Returns the mean batch loss; increments params.epoch.
  double epoch(std::span<const TrainingExample> examples, const LossSpec& spec);

 private:
  TaggerParams& params_;
  TrainConfig cfg_;
  Adam adam_;
};

/// Single epoch with a fresh optimizer.
double train_epoch(TaggerParams& params,
                   std::span<const TrainingExample> examples,
                   const TrainConfig& config, const LossSpec& spec = {});

struct PretrainConfig {
  TrainConfig train;
  int epochs = 20;
  double mask_rate = 0.15;
};

struct PretrainReport {
  std::vector<double> epoch_losses;
};

/// Masked-token pre-training on unlabeled documents. A reconstruction head
/// is trained with the encoder and discarded; the tag head is untouched.
PretrainReport pretrain_masked(TaggerParams& params,
                               std::span<const Document> docs,
                               const PretrainConfig& config);

/// Masked-token reconstruction accuracy of a freshly trained head is not
/// observable after the head is discarded, so pre-training can return it.
struct MaskedEval {
  double accuracy = 0;
  std::size_t masked = 0;
};

/// Pre-trains like pretrain_masked, then scores the reconstruction head on
/// `held_out` with masks drawn from `eval_seed`.
MaskedEval pretrain_and_score(TaggerParams& params,
                              std::span<const Document> train,
                              std::span<const Document> held_out,
                              const PretrainConfig& config,
                              std::uint64_t eval_seed);

struct Prediction {
  TagSequence tags;                ///< BIOES-valid
  std::vector<double> confidence;  ///< softmax probability of the argmax tag
};

Prediction predict(const TaggerParams& params, const Document& doc,
                   const EntitySchema& schema);

/// Fraction of tokens whose predicted tag id equals the target.
double token_accuracy(const TaggerParams& params,
                      std::span<const TrainingExample> examples);

void save_tagger(const TaggerParams& params, const std::filesystem::path& p);
TaggerParams load_tagger(const std::filesystem::path& p);
std::vector<unsigned char> tagger_bytes(const TaggerParams& params);

}  // namespace nat
