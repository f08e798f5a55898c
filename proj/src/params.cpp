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

#include "nat/params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace nat {

Tensor& ParamSet::add(std::string name, std::size_t rows, std::size_t cols) {
  if (contains(name)) throw Error("duplicate tensor name '" + name + "'");
  tensors_.emplace_back(std::move(name), rows, cols);
  return tensors_.back();
}

std::size_t ParamSet::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < tensors_.size(); ++i)
    if (tensors_[i].name == name) return i;
  throw Error("no tensor named '" + name + "'");
}

bool ParamSet::contains(const std::string& name) const {
  for (const Tensor& t : tensors_)
    if (t.name == name) return true;
  return false;
}

std::size_t ParamSet::num_values() const {
  std::size_t n = 0;
  for (const Tensor& t : tensors_) n += t.size();
  return n;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  for (const Tensor& t : tensors_) out.add(t.name, t.rows, t.cols);
  return out;
}

void ParamSet::set_zero() {
  for (Tensor& t : tensors_) std::fill(t.data.begin(), t.data.end(), 0.0);
}

bool ParamSet::same_shape(const ParamSet& other) const {
  if (size() != other.size()) return false;
  for (std::size_t i = 0; i < size(); ++i)
    if (tensors_[i].name != other[i].name || tensors_[i].rows != other[i].rows ||
        tensors_[i].cols != other[i].cols)
      return false;
  return true;
}

void ParamSet::axpy(double scale, const ParamSet& other) {
  if (!same_shape(other)) throw Error("ParamSet::axpy: shape mismatch");
  for (std::size_t i = 0; i < size(); ++i) {
    double* a = tensors_[i].data.data();
    const double* b = other[i].data.data();
    const std::size_t n = tensors_[i].size();
    for (std::size_t k = 0; k < n; ++k) a[k] += scale * b[k];
  }
}

void ParamSet::scale(double s) {
  for (Tensor& t : tensors_)
    for (double& v : t.data) v *= s;
}

bool ParamSet::all_finite() const {
  for (const Tensor& t : tensors_)
    for (double v : t.data)
      if (!std::isfinite(v)) return false;
  return true;
}

Adam::Adam(const ParamSet& like, AdamConfig config)
    : cfg_(config), m_(like.zeros_like()), v_(like.zeros_like()) {}

void Adam::step(ParamSet& params, const ParamSet& grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const double lr = cfg_.learning_rate;
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params[i].data.data();
    const double* g = grads[i].data.data();
    double* m = m_[i].data.data();
    double* v = v_[i].data.data();
    const std::size_t n = params[i].size();
    for (std::size_t k = 0; k < n; ++k) {
      m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g[k];
      v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      p[k] -= lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    }
  }
}

namespace {

bool ends_with(const std::string& s, std::string_view suf) {
  return s.size() >= suf.size() &&
         s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

}  // namespace

void init_uniform(ParamSet& params, Rng& rng) {
  for (Tensor& t : params) {
    if (ends_with(t.name, ".b")) {
      std::fill(t.data.begin(), t.data.end(), 0.0);
    } else if (ends_with(t.name, ".g")) {
      std::fill(t.data.begin(), t.data.end(), 1.0);
    } else {
      const double a =
          std::sqrt(6.0 / static_cast<double>(t.rows + t.cols));
      for (double& v : t.data) v = rng.uniform(-a, a);
    }
  }
}

// --- Checkpoints ----------------------------------------------------------

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::vector<unsigned char>& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.insert(out.end(), b, b + sizeof(T));
}

class Reader {
 public:
  Reader(const std::vector<unsigned char>& buf, std::size_t limit,
         const std::string& name)
      : buf_(buf), limit_(limit), name_(name) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + at_, sizeof(T));
    at_ += sizeof(T);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(buf_.data() + at_), n);
    at_ += n;
    return s;
  }
  std::size_t pos() const { return at_; }

 private:
  void need(std::size_t n) {
    if (at_ + n > limit_) throw Error("checkpoint " + name_ + " is truncated");
  }
  const std::vector<unsigned char>& buf_;
  std::size_t limit_;
  const std::string& name_;
  std::size_t at_ = 0;
};

constexpr char kMagic[8] = {'N', 'A', 'T', 'C', 'K', 'P', 'T', '1'};

}  // namespace

std::vector<unsigned char> checkpoint_bytes(const std::string& header_json,
                                            const ParamSet& params) {
  std::vector<unsigned char> out(kMagic, kMagic + 8);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(header_json.size()));
  out.insert(out.end(), header_json.begin(), header_json.end());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const Tensor& t : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    put<std::uint64_t>(out, t.rows);
    put<std::uint64_t>(out, t.cols);
    for (double v : t.data) put<float>(out, static_cast<float>(v));
  }
  std::string_view all(reinterpret_cast<const char*>(out.data()), out.size());
  put<std::uint64_t>(out, fnv1a(all));
  return out;
}

void write_checkpoint(const std::filesystem::path& path,
                      const std::string& header_json, const ParamSet& params) {
  auto bytes = checkpoint_bytes(header_json, params);
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  const std::string name = path.string();
  if (buf.size() < 8 + 8 || !std::equal(kMagic, kMagic + 8, buf.begin()))
    throw Error("checkpoint " + name + " has a bad magic number");
  const std::size_t body = buf.size() - 8;
  std::uint64_t stored;
  std::memcpy(&stored, buf.data() + body, 8);
  std::string_view all(reinterpret_cast<const char*>(buf.data()), body);
  if (fnv1a(all) != stored)
    throw Error("checkpoint " + name + " failed its checksum");

  Reader r(buf, body, name);
  r.bytes(8);
  Checkpoint ck;
  ck.header_json = r.bytes(r.get<std::uint32_t>());
  const auto n = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string tname = r.bytes(r.get<std::uint32_t>());
    const auto rows = r.get<std::uint64_t>();
    const auto cols = r.get<std::uint64_t>();
    Tensor& t = ck.params.add(std::move(tname), rows, cols);
    for (double& v : t.data) v = static_cast<double>(r.get<float>());
  }
  if (r.pos() != body)
    throw Error("checkpoint " + name + " has trailing bytes");
  return ck;
}

}  // namespace nat
