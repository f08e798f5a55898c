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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nat/rng.hpp"

namespace nat {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

/// A named, fixed-shape, row-major parameter tensor.
struct Tensor {
  std::string name;
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::string name, std::size_t rows, std::size_t cols)
      : name(std::move(name)), rows(rows), cols(cols), data(rows * cols, 0.0) {}

  std::size_t size() const { return data.size(); }
  MatrixMap mat() {
    return MatrixMap(data.data(), static_cast<Eigen::Index>(rows),
                     static_cast<Eigen::Index>(cols));
  }
  ConstMatrixMap mat() const {
    return ConstMatrixMap(data.data(), static_cast<Eigen::Index>(rows),
                          static_cast<Eigen::Index>(cols));
  }
  bool operator==(const Tensor&) const = default;
};

/// Ordered collection of tensors. Order is insertion order and is stable.
class ParamSet {
 public:
  Tensor& add(std::string name, std::size_t rows, std::size_t cols);

  std::size_t index_of(const std::string& name) const;
  Tensor& operator[](std::size_t i) { return tensors_[i]; }
  const Tensor& operator[](std::size_t i) const { return tensors_[i]; }
  Tensor& at(const std::string& name) { return tensors_[index_of(name)]; }
  const Tensor& at(const std::string& name) const {
    return tensors_[index_of(name)];
  }
  bool contains(const std::string& name) const;

  std::size_t size() const { return tensors_.size(); }
  std::size_t num_values() const;
  auto begin() { return tensors_.begin(); }
  auto end() { return tensors_.end(); }
  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }

  /// Same names and shapes, all zeros.
  ParamSet zeros_like() const;
  void set_zero();
  /// this += scale * other (shapes must match).
  void axpy(double scale, const ParamSet& other);
  void scale(double s);
  bool all_finite() const;
  bool same_shape(const ParamSet& other) const;

  bool operator==(const ParamSet&) const = default;

 private:
  std::vector<Tensor> tensors_;
};

/// Adaptive-moment gradient descent.
struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(const ParamSet& like, AdamConfig config);
  /// One update of `params` against `grads`.
  void step(ParamSet& params, const ParamSet& grads);
  std::int64_t steps() const { return t_; }

 private:
  AdamConfig cfg_;
  ParamSet m_, v_;
  std::int64_t t_ = 0;
};

/// Fills every tensor whose name does not end in a bias/offset suffix with
/// U(-a, a), a = sqrt(6 / (rows + cols)); ".b" tensors are zero, ".g"
/// (layer-norm gains) are one.
void init_uniform(ParamSet& params, Rng& rng);

// --- Checkpoint container -----------------------------------------------
//
//   magic "NATCKPT1" | u32 header length | header JSON (architecture and
//   epoch) | u32 tensor count | per tensor: u32 name length, name bytes,
//   u64 rows, u64 cols, rows*cols little-endian float32 |
//   u64 FNV-1a checksum of every preceding byte.

struct Checkpoint {
  std::string header_json;
  ParamSet params;
};

void write_checkpoint(const std::filesystem::path& path,
                      const std::string& header_json, const ParamSet& params);
Checkpoint read_checkpoint(const std::filesystem::path& path);
std::vector<unsigned char> checkpoint_bytes(const std::string& header_json,
                                            const ParamSet& params);

}  // namespace nat
