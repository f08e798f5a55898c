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

#include "nat/tagger.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <thread>

#include <json.hpp>

namespace nat {

void ArchConfig::validate() const {
  if (word_dim <= 0 || geo_dim <= 0 || model_dim <= 0 || heads <= 0 ||
      layers < 0 || ff_dim <= 0 || vocab_size < 2 || num_tags < 1 ||
      max_seq_len < 1)
    throw Error("ArchConfig: dimensions must be positive");
  if (model_dim % heads != 0)
    throw Error("ArchConfig: model_dim must be divisible by heads");
}

std::string arch_to_json(const ArchConfig& a) {
  nlohmann::json j = {{"word_dim", a.word_dim},   {"geo_dim", a.geo_dim},
                      {"model_dim", a.model_dim}, {"heads", a.heads},
                      {"layers", a.layers},       {"ff_dim", a.ff_dim},
                      {"vocab_size", a.vocab_size},
                      {"num_tags", a.num_tags},
                      {"max_seq_len", a.max_seq_len}};
  return j.dump();
}

ArchConfig arch_from_json(const std::string& s) {
  auto j = nlohmann::json::parse(s);
  ArchConfig a;
  a.word_dim = j.at("word_dim");
  a.geo_dim = j.at("geo_dim");
  a.model_dim = j.at("model_dim");
  a.heads = j.at("heads");
  a.layers = j.at("layers");
  a.ff_dim = j.at("ff_dim");
  a.vocab_size = j.at("vocab_size");
  a.num_tags = j.at("num_tags");
  a.max_seq_len = j.at("max_seq_len");
  a.validate();
  return a;
}

int hash_word(const std::string& text, int vocab_size) {
  std::string norm;
  norm.reserve(text.size());
  for (unsigned char c : text) {
    if (std::isdigit(c)) norm += '0';
    else norm += static_cast<char>(std::tolower(c));
  }
  return 1 + static_cast<int>(fnv1a(norm) %
                              static_cast<std::uint64_t>(vocab_size - 1));
}

namespace {

// Horizontal gap to a reading-order neighbour in units of the token height,
// or a fixed "far" value when the neighbour sits on another line.
double neighbour_gap(const BBox& a, const BBox& left_box) {
  constexpr double kFar = 4.0;
  const double h = std::max(a.height(), 1e-6);
  if (std::abs(a.y0 - left_box.y0) > 0.5 * h) return kFar;
  return std::clamp((a.x0 - left_box.x1) / h, -kFar, kFar);
}

}  // namespace

TokenFeatures featurize(const Document& doc, const ArchConfig& arch) {
  TokenFeatures f;
  const auto n = static_cast<Eigen::Index>(doc.tokens.size());
  f.word_ids.reserve(doc.tokens.size());
  f.geometry.resize(n, kDenseFeatures);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    const Token& t = doc.tokens[u];
    f.word_ids.push_back(hash_word(t.text, arch.vocab_size));
    const BBox& b = t.bbox;
    double digits = 0, alpha = 0;
    for (unsigned char c : t.text) {
      digits += std::isdigit(c) != 0;
      alpha += std::isalpha(c) != 0;
    }
    const double len = std::max<double>(1.0, static_cast<double>(t.text.size()));
    const bool cap = !t.text.empty() && std::isupper(static_cast<unsigned char>(t.text[0]));
    const bool colon = !t.text.empty() && t.text.back() == ':';
    const double gap_prev = u > 0 ? neighbour_gap(b, doc.tokens[u - 1].bbox) : 4.0;
    const double gap_next =
        u + 1 < doc.tokens.size() ? neighbour_gap(doc.tokens[u + 1].bbox, b) : 4.0;
    f.geometry.row(i) << 2 * b.x0 - 1, 2 * b.y0 - 1, 2 * b.x1 - 1, 2 * b.y1 - 1,
        10 * b.width(), 50 * b.height(), digits / len, alpha / len,
        cap ? 1.0 : 0.0, colon ? 1.0 : 0.0, gap_prev / 4, gap_next / 4;
  }
  return f;
}

TaggerParams init_params(const ArchConfig& arch, std::uint64_t seed) {
  arch.validate();
  TaggerParams tp;
  tp.arch = arch;
  ParamSet& p = tp.params;
  const auto V = static_cast<std::size_t>(arch.vocab_size);
  const auto Dw = static_cast<std::size_t>(arch.word_dim);
  const auto Dg = static_cast<std::size_t>(arch.geo_dim);
  const auto Dm = static_cast<std::size_t>(arch.model_dim);
  const auto Df = static_cast<std::size_t>(arch.ff_dim);
  p.add("embed.word", V, Dw);
  p.add("embed.geo.w", kDenseFeatures, Dg);
  p.add("embed.geo.b", 1, Dg);
  p.add("embed.proj.w", Dw + Dg, Dm);
  p.add("embed.proj.b", 1, Dm);
  for (int k = 0; k < arch.layers; ++k) {
    const std::string b = "block" + std::to_string(k) + ".";
    p.add(b + "ln1.g", 1, Dm);
    p.add(b + "ln1.b", 1, Dm);
    for (const char* m : {"q", "k", "v", "o"}) {
      p.add(b + "attn." + m + ".w", Dm, Dm);
      p.add(b + "attn." + m + ".b", 1, Dm);
    }
    p.add(b + "ln2.g", 1, Dm);
    p.add(b + "ln2.b", 1, Dm);
    p.add(b + "ff1.w", Dm, Df);
    p.add(b + "ff1.b", 1, Df);
    p.add(b + "ff2.w", Df, Dm);
    p.add(b + "ff2.b", 1, Dm);
  }
  p.add("final_ln.g", 1, Dm);
  p.add("final_ln.b", 1, Dm);
  p.add("out.w", Dm, static_cast<std::size_t>(arch.num_tags));
  p.add("out.b", 1, static_cast<std::size_t>(arch.num_tags));
  Rng rng(seed, "init");
  init_uniform(p, rng);
  return tp;
}

// ---------------------------------------------------------------------------
// Encoder forward/backward

namespace {

constexpr double kLnEps = 1e-5;
const double kGeluC = std::sqrt(2.0 / M_PI);

struct LnCache {
  RowMatrix xhat;
  Eigen::VectorXd rstd;
};

RowMatrix layer_norm(const RowMatrix& x, const Tensor& g, const Tensor& b,
                     LnCache& c) {
  const Eigen::Index n = x.rows(), d = x.cols();
  c.xhat.resize(n, d);
  c.rstd.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = x.row(i).mean();
    auto diff = (x.row(i).array() - mu).eval();
    const double var = diff.square().mean();
    const double r = 1.0 / std::sqrt(var + kLnEps);
    c.rstd(i) = r;
    c.xhat.row(i) = diff * r;
  }
  RowMatrix y = c.xhat.array().rowwise() * g.mat().row(0).array();
  y.rowwise() += b.mat().row(0);
  return y;
}

RowMatrix layer_norm_backward(const RowMatrix& dy, const Tensor& g,
                              const LnCache& c, Tensor& dg, Tensor& db) {
  dg.mat().row(0) += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  db.mat().row(0) += dy.colwise().sum();
  RowMatrix dxhat = dy.array().rowwise() * g.mat().row(0).array();
  RowMatrix dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const double m1 = dxhat.row(i).mean();
    const double m2 = (dxhat.row(i).array() * c.xhat.row(i).array()).mean();
    dx.row(i) =
        c.rstd(i) * (dxhat.row(i).array() - m1 - c.xhat.row(i).array() * m2)
                        .matrix();
  }
  return dx;
}

RowMatrix affine(const RowMatrix& x, const Tensor& w, const Tensor& b) {
  RowMatrix y = x * w.mat();
  y.rowwise() += b.mat().row(0);
  return y;
}

// dy -> dx, accumulating dW and db.
RowMatrix affine_backward(const RowMatrix& x, const RowMatrix& dy,
                          const Tensor& w, Tensor& dw, Tensor& db) {
  dw.mat().noalias() += x.transpose() * dy;
  db.mat().row(0) += dy.colwise().sum();
  return dy * w.mat().transpose();
}

void softmax_inplace(RowMatrix& s) {
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const double m = s.row(i).maxCoeff();
    s.row(i) = (s.row(i).array() - m).exp();
    s.row(i) /= s.row(i).sum();
  }
}

/// Tensor indices resolved once per parameter set.
struct BlockIdx {
  std::size_t ln1g, ln1b, qw, qb, kw, kb, vw, vb, ow, ob, ln2g, ln2b, f1w, f1b,
      f2w, f2b;
};
struct Layout {
  std::size_t word, geow, geob, projw, projb, lnfg, lnfb, outw, outb;
  std::vector<BlockIdx> blocks;
};

Layout resolve(const ParamSet& p, const ArchConfig& arch) {
  Layout l;
  l.word = p.index_of("embed.word");
  l.geow = p.index_of("embed.geo.w");
  l.geob = p.index_of("embed.geo.b");
  l.projw = p.index_of("embed.proj.w");
  l.projb = p.index_of("embed.proj.b");
  for (int k = 0; k < arch.layers; ++k) {
    const std::string b = "block" + std::to_string(k) + ".";
    l.blocks.push_back({p.index_of(b + "ln1.g"), p.index_of(b + "ln1.b"),
                        p.index_of(b + "attn.q.w"), p.index_of(b + "attn.q.b"),
                        p.index_of(b + "attn.k.w"), p.index_of(b + "attn.k.b"),
                        p.index_of(b + "attn.v.w"), p.index_of(b + "attn.v.b"),
                        p.index_of(b + "attn.o.w"), p.index_of(b + "attn.o.b"),
                        p.index_of(b + "ln2.g"), p.index_of(b + "ln2.b"),
                        p.index_of(b + "ff1.w"), p.index_of(b + "ff1.b"),
                        p.index_of(b + "ff2.w"), p.index_of(b + "ff2.b")});
  }
  l.lnfg = p.index_of("final_ln.g");
  l.lnfb = p.index_of("final_ln.b");
  l.outw = p.index_of("out.w");
  l.outb = p.index_of("out.b");
  return l;
}

struct BlockCache {
  RowMatrix h_in, u1, q, k, v, o, h1, u2, f_pre, f_act;
  std::vector<RowMatrix> attn;
  LnCache ln1, ln2;
};

struct EncoderCache {
  std::vector<int> ids;
  RowMatrix geo_in, geo_act, cat;
  std::vector<BlockCache> blocks;
  LnCache lnf;
  RowMatrix z;  ///< final normalized hidden states, n x Dm
};

void encode(const ParamSet& p, const Layout& L, const ArchConfig& arch,
            std::vector<int> ids, const RowMatrix& geometry, EncoderCache& c) {
  const auto n = static_cast<Eigen::Index>(ids.size());
  const int Dw = arch.word_dim;
  c.ids = std::move(ids);
  c.geo_in = geometry;
  c.geo_act = affine(geometry, p[L.geow], p[L.geob]).array().tanh();
  c.cat.resize(n, Dw + arch.geo_dim);
  const ConstMatrixMap emb = p[L.word].mat();
  for (Eigen::Index i = 0; i < n; ++i)
    c.cat.row(i).head(Dw) = emb.row(c.ids[static_cast<std::size_t>(i)]);
  c.cat.rightCols(arch.geo_dim) = c.geo_act;
  RowMatrix h = affine(c.cat, p[L.projw], p[L.projb]);

  const int H = arch.heads;
  const int dh = arch.model_dim / H;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  c.blocks.resize(L.blocks.size());
  for (std::size_t k = 0; k < L.blocks.size(); ++k) {
    const BlockIdx& B = L.blocks[k];
    BlockCache& bc = c.blocks[k];
    bc.h_in = h;
    bc.u1 = layer_norm(h, p[B.ln1g], p[B.ln1b], bc.ln1);
    bc.q = affine(bc.u1, p[B.qw], p[B.qb]);
    bc.k = affine(bc.u1, p[B.kw], p[B.kb]);
    bc.v = affine(bc.u1, p[B.vw], p[B.vb]);
    bc.o.resize(n, arch.model_dim);
    bc.attn.resize(static_cast<std::size_t>(H));
    for (int hd = 0; hd < H; ++hd) {
      RowMatrix s = bc.q.middleCols(hd * dh, dh) *
                    bc.k.middleCols(hd * dh, dh).transpose() * scale;
      softmax_inplace(s);
      bc.o.middleCols(hd * dh, dh) = s * bc.v.middleCols(hd * dh, dh);
      bc.attn[static_cast<std::size_t>(hd)] = std::move(s);
    }
    bc.h1 = h + affine(bc.o, p[B.ow], p[B.ob]);
    bc.u2 = layer_norm(bc.h1, p[B.ln2g], p[B.ln2b], bc.ln2);
    bc.f_pre = affine(bc.u2, p[B.f1w], p[B.f1b]);
    bc.f_act = bc.f_pre.unaryExpr([](double x) {
      return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + 0.044715 * x * x * x)));
    });
    h = bc.h1 + affine(bc.f_act, p[B.f2w], p[B.f2b]);
  }
  c.z = layer_norm(h, p[L.lnfg], p[L.lnfb], c.lnf);
}

/// Backpropagates dL/dz through the encoder into `g`.
void encode_backward(const ParamSet& p, const Layout& L, const ArchConfig& arch,
                     const EncoderCache& c, const RowMatrix& dz, ParamSet& g) {
  RowMatrix dh = layer_norm_backward(dz, p[L.lnfg], c.lnf, g[L.lnfg], g[L.lnfb]);
  const int H = arch.heads;
  const int dh_sz = arch.model_dim / H;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh_sz));

  for (std::size_t kk = L.blocks.size(); kk-- > 0;) {
    const BlockIdx& B = L.blocks[kk];
    const BlockCache& bc = c.blocks[kk];
    // h = h1 + ff2(gelu(ff1(ln2(h1))))
    RowMatrix d_act = affine_backward(bc.f_act, dh, p[B.f2w], g[B.f2w], g[B.f2b]);
    RowMatrix d_pre = d_act.binaryExpr(bc.f_pre, [](double d, double x) {
      const double inner = kGeluC * (x + 0.044715 * x * x * x);
      const double t = std::tanh(inner);
      const double dinner = kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
      return d * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner);
    });
    RowMatrix d_u2 = affine_backward(bc.u2, d_pre, p[B.f1w], g[B.f1w], g[B.f1b]);
    RowMatrix d_h1 = dh + layer_norm_backward(d_u2, p[B.ln2g], bc.ln2,
                                              g[B.ln2g], g[B.ln2b]);
    // h1 = h_in + attn(ln1(h_in))
    RowMatrix d_o = affine_backward(bc.o, d_h1, p[B.ow], g[B.ow], g[B.ob]);
    RowMatrix dq(bc.q.rows(), bc.q.cols()), dk(dq.rows(), dq.cols()),
        dv(dq.rows(), dq.cols());
    for (int hd = 0; hd < H; ++hd) {
      const RowMatrix& a = bc.attn[static_cast<std::size_t>(hd)];
      const auto cols = [&](const RowMatrix& m) {
        return m.middleCols(hd * dh_sz, dh_sz);
      };
      RowMatrix d_oh = d_o.middleCols(hd * dh_sz, dh_sz);
      RowMatrix da = d_oh * cols(bc.v).transpose();
      dv.middleCols(hd * dh_sz, dh_sz) = a.transpose() * d_oh;
      Eigen::VectorXd row_dot = (da.array() * a.array()).rowwise().sum();
      RowMatrix ds = a.array() * (da.colwise() - row_dot).array();
      dq.middleCols(hd * dh_sz, dh_sz) = ds * cols(bc.k) * scale;
      dk.middleCols(hd * dh_sz, dh_sz) = ds.transpose() * cols(bc.q) * scale;
    }
    RowMatrix d_u1 = affine_backward(bc.u1, dq, p[B.qw], g[B.qw], g[B.qb]);
    d_u1 += affine_backward(bc.u1, dk, p[B.kw], g[B.kw], g[B.kb]);
    d_u1 += affine_backward(bc.u1, dv, p[B.vw], g[B.vw], g[B.vb]);
    dh = d_h1 + layer_norm_backward(d_u1, p[B.ln1g], bc.ln1, g[B.ln1g],
                                    g[B.ln1b]);
  }

  RowMatrix d_cat = affine_backward(c.cat, dh, p[L.projw], g[L.projw], g[L.projb]);
  const int Dw = arch.word_dim;
  MatrixMap gemb = g[L.word].mat();
  for (std::size_t i = 0; i < c.ids.size(); ++i)
    gemb.row(c.ids[i]) += d_cat.row(static_cast<Eigen::Index>(i)).head(Dw);
  RowMatrix d_geo_act = d_cat.rightCols(arch.geo_dim);
  RowMatrix d_geo_pre =
      d_geo_act.array() * (1.0 - c.geo_act.array().square());
  affine_backward(c.geo_in, d_geo_pre, p[L.geow], g[L.geow], g[L.geob]);
}

void check_length(const ArchConfig& arch, const Document& doc) {
  if (doc.tokens.empty())
    throw Error("document '" + doc.id + "' has no tokens");
  if (static_cast<int>(doc.tokens.size()) > arch.max_seq_len)
    throw Error("document '" + doc.id + "' has " +
                std::to_string(doc.tokens.size()) +
                " tokens, above the maximum sequence length " +
                std::to_string(arch.max_seq_len) +
                "; split it into chunks before tagging");
}

RowMatrix tag_logits(const ParamSet& p, const Layout& L, const ArchConfig& arch,
                     const Document& doc, EncoderCache& cache) {
  TokenFeatures f = featurize(doc, arch);
  encode(p, L, arch, std::move(f.word_ids), f.geometry, cache);
  return affine(cache.z, p[L.outw], p[L.outb]);
}

}  // namespace

ForwardResult forward(const TaggerParams& params, const Document& doc) {
  check_length(params.arch, doc);
  Layout L = resolve(params.params, params.arch);
  EncoderCache cache;
  ForwardResult r;
  r.logits = tag_logits(params.params, L, params.arch, doc, cache);
  r.probs = softmax_rows(r.logits);
  return r;
}

// ---------------------------------------------------------------------------
// Gradients

namespace {

/// Sum-form loss terms for one document; adds unnormalized gradients to g.
LossTerms doc_grad(const TaggerParams& tp, const Layout& L,
                   const TrainingExample& ex, const LossSpec& spec,
                   const ParamSet* opposite, ParamSet& g,
                   ParamSet* g_opposite) {
  const Document& doc = *ex.doc;
  check_length(tp.arch, doc);
  if (ex.targets.size() != doc.tokens.size() ||
      ex.weights.size() != doc.tokens.size())
    throw Error("training example '" + doc.id +
                "' has targets/weights misaligned with its tokens");

  EncoderCache main_cache;
  RowMatrix logits = tag_logits(tp.params, L, tp.arch, doc, main_cache);
  const bool na = spec.kind == LossKind::kNoiseAware && spec.lambda != 0.0;
  EncoderCache opp_cache;
  RowMatrix opp_logits;
  if (na) opp_logits = tag_logits(*opposite, L, tp.arch, doc, opp_cache);

  LossTerms t = noise_aware_terms(logits, na ? &opp_logits : nullptr,
                                  ex.targets, ex.weights,
                                  na ? spec.lambda : 0.0, true);
  if (!std::isfinite(t.sum))
    throw Error("non-finite loss on document '" + doc.id + "'");
  if (t.count == 0) return t;

  RowMatrix dz = affine_backward(main_cache.z, t.d_main, tp.params[L.outw],
                                 g[L.outw], g[L.outb]);
  encode_backward(tp.params, L, tp.arch, main_cache, dz, g);

  if (na && spec.mode == GradientMode::kFlowThrough && g_opposite) {
    RowMatrix dzo = affine_backward(opp_cache.z, t.d_opposite, (*opposite)[L.outw],
                                    (*g_opposite)[L.outw], (*g_opposite)[L.outb]);
    encode_backward(*opposite, L, tp.arch, opp_cache, dzo, *g_opposite);
  }
  return t;
}

}  // namespace

GradResult grad(const TaggerParams& params,
                std::span<const TrainingExample> batch, const LossSpec& spec,
                const ParamSet* opposite, int jobs) {
  const Layout L = resolve(params.params, params.arch);
  const bool na = spec.kind == LossKind::kNoiseAware && spec.lambda != 0.0;
  ParamSet owned_opposite;
  if (na && !opposite) {
    owned_opposite =
        reflect_layers(params.params, layer_extrema_sums(params.params));
    opposite = &owned_opposite;
  }
  const bool flow = na && spec.mode == GradientMode::kFlowThrough;

  // Accumulate in document-id order so results do not depend on scheduling.
  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return batch[a].doc->id < batch[b].doc->id;
  });

  GradResult out;
  out.grads = params.params.zeros_like();
  ParamSet g_opp_total;
  if (flow) g_opp_total = params.params.zeros_like();

  const std::size_t n = batch.size();
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(jobs > 0 ? jobs : 1, n));
  // Process in waves of `workers` documents, each into its own buffer.
  std::vector<ParamSet> bufs(workers, params.params.zeros_like());
  std::vector<ParamSet> obufs;
  if (flow) obufs.assign(workers, params.params.zeros_like());
  std::vector<LossTerms> terms(workers);
  std::vector<std::exception_ptr> errors(workers);

  double sum = 0, main_sum = 0, opp_sum = 0, count = 0;
  for (std::size_t start = 0; start < n; start += workers) {
    const std::size_t wave = std::min(workers, n - start);
    auto run = [&](std::size_t w) {
      try {
        bufs[w].set_zero();
        if (flow) obufs[w].set_zero();
        terms[w] = doc_grad(params, L, batch[order[start + w]], spec, opposite,
                            bufs[w], flow ? &obufs[w] : nullptr);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    };
    if (wave == 1) {
      run(0);
    } else {
      std::vector<std::thread> threads;
      for (std::size_t w = 0; w < wave; ++w) threads.emplace_back(run, w);
      for (auto& t : threads) t.join();
    }
    for (std::size_t w = 0; w < wave; ++w) {
      if (errors[w]) std::rethrow_exception(errors[w]);
      sum += terms[w].sum;
      main_sum += terms[w].main;
      opp_sum += terms[w].opposite;
      count += terms[w].count;
      out.grads.axpy(1.0, bufs[w]);
      if (flow) g_opp_total.axpy(1.0, obufs[w]);
    }
  }

  out.retained = count;
  if (count == 0) return out;
  out.loss = sum / count;
  out.main_loss = main_sum / count;
  out.opposite_loss = opp_sum / count;
  // d/dp of a term in p' = m - p is minus its d/dp'.
  if (flow) out.grads.axpy(-1.0, g_opp_total);
  out.grads.scale(1.0 / count);
  return out;
}

// ---------------------------------------------------------------------------
// Training

Trainer::Trainer(TaggerParams& params, TrainConfig config)
    : params_(params), cfg_(config), adam_(params.params, config.adam) {
  if (cfg_.batch_size == 0) throw Error("TrainConfig: batch_size must be > 0");
}

double Trainer::epoch(std::span<const TrainingExample> examples,
                      const LossSpec& spec) {
  if (examples.empty()) throw Error("train_epoch: empty corpus");
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(cfg_.seed, "epoch/" + std::to_string(params_.epoch));
  rng.shuffle(order);

  const bool na = spec.kind == LossKind::kNoiseAware && spec.lambda != 0.0;
  ParamSet opposite;
  if (na)
    opposite = reflect_layers(params_.params,
                              layer_extrema_sums(params_.params));

  double total = 0;
  std::size_t batches = 0;
  std::vector<TrainingExample> batch;
  for (std::size_t s = 0; s < order.size(); s += cfg_.batch_size) {
    batch.clear();
    for (std::size_t k = s; k < std::min(order.size(), s + cfg_.batch_size); ++k)
      batch.push_back(examples[order[k]]);
    GradResult g =
        grad(params_, batch, spec, na ? &opposite : nullptr, cfg_.jobs);
    total += g.loss;
    ++batches;
    adam_.step(params_.params, g.grads);
  }
  if (!params_.params.all_finite())
    throw Error("training produced non-finite parameters");
  ++params_.epoch;
  return total / static_cast<double>(batches);
}

double train_epoch(TaggerParams& params,
                   std::span<const TrainingExample> examples,
                   const TrainConfig& config, const LossSpec& spec) {
  Trainer t(params, config);
  return t.epoch(examples, spec);
}

// ---------------------------------------------------------------------------
// Masked-token pre-training

namespace {

struct MaskedDoc {
  std::vector<int> ids;     ///< with masks applied
  std::vector<int> masked;  ///< positions
  std::vector<int> original;
  RowMatrix geometry;
};

MaskedDoc mask_document(const Document& doc, const ArchConfig& arch,
                        double rate, Rng& rng) {
  TokenFeatures f = featurize(doc, arch);
  MaskedDoc m;
  m.ids = f.word_ids;
  m.geometry = std::move(f.geometry);
  const std::size_t n = m.ids.size();
  const auto k = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
  std::vector<int> pos(n);
  std::iota(pos.begin(), pos.end(), 0);
  rng.shuffle(pos);
  pos.resize(std::min(k, n));
  std::sort(pos.begin(), pos.end());
  for (int p : pos) {
    m.masked.push_back(p);
    m.original.push_back(m.ids[static_cast<std::size_t>(p)]);
    m.ids[static_cast<std::size_t>(p)] = kMaskId;
  }
  return m;
}

ParamSet make_mlm_head(const ArchConfig& arch, std::uint64_t seed) {
  ParamSet head;
  head.add("mlm.w", static_cast<std::size_t>(arch.model_dim),
           static_cast<std::size_t>(arch.vocab_size));
  head.add("mlm.b", 1, static_cast<std::size_t>(arch.vocab_size));
  Rng rng(seed, "mlm_head");
  init_uniform(head, rng);
  return head;
}

void run_pretraining(TaggerParams& params, ParamSet& head,
                     std::span<const Document> docs,
                     const PretrainConfig& cfg, PretrainReport& report) {
  if (docs.empty()) return;
  const ArchConfig& arch = params.arch;
  const Layout L = resolve(params.params, arch);
  Adam adam_enc(params.params, cfg.train.adam);
  Adam adam_head(head, cfg.train.adam);

  std::vector<std::size_t> by_id(docs.size());
  std::iota(by_id.begin(), by_id.end(), 0);
  std::stable_sort(by_id.begin(), by_id.end(), [&](std::size_t a, std::size_t b) {
    return docs[a].id < docs[b].id;
  });

  for (int e = 0; e < cfg.epochs && cfg.train.proceed(); ++e) {
    Rng erng(cfg.train.seed, "pretrain/epoch/" + std::to_string(e));
    std::vector<std::size_t> order = by_id;
    erng.shuffle(order);
    double total = 0;
    std::size_t batches = 0;
    for (std::size_t s = 0; s < order.size(); s += cfg.train.batch_size) {
      const std::size_t stop = std::min(order.size(), s + cfg.train.batch_size);
      std::vector<std::size_t> batch(order.begin() + static_cast<long>(s),
                                     order.begin() + static_cast<long>(stop));
      std::sort(batch.begin(), batch.end(), [&](std::size_t a, std::size_t b) {
        return docs[a].id < docs[b].id;
      });
      ParamSet g = params.params.zeros_like();
      ParamSet gh = head.zeros_like();
      double loss = 0, count = 0;
      for (std::size_t di : batch) {
        const Document& doc = docs[di];
        check_length(arch, doc);
        Rng mrng(cfg.train.seed, "pretrain/mask/" + std::to_string(e) + "/" + doc.id);
        MaskedDoc md = mask_document(doc, arch, cfg.mask_rate, mrng);
        if (md.masked.empty()) continue;
        EncoderCache cache;
        encode(params.params, L, arch, md.ids, md.geometry, cache);
        RowMatrix zm(static_cast<Eigen::Index>(md.masked.size()), arch.model_dim);
        for (std::size_t k = 0; k < md.masked.size(); ++k)
          zm.row(static_cast<Eigen::Index>(k)) = cache.z.row(md.masked[k]);
        RowMatrix logits = affine(zm, head[0], head[1]);
        RowMatrix probs = softmax_rows(logits);
        for (std::size_t k = 0; k < md.masked.size(); ++k) {
          const auto r = static_cast<Eigen::Index>(k);
          loss += row_cross_entropy(logits, r, md.original[k]);
          probs(r, md.original[k]) -= 1.0;
        }
        count += static_cast<double>(md.masked.size());
        RowMatrix dzm = affine_backward(zm, probs, head[0], gh[0], gh[1]);
        RowMatrix dz = RowMatrix::Zero(cache.z.rows(), cache.z.cols());
        for (std::size_t k = 0; k < md.masked.size(); ++k)
          dz.row(md.masked[k]) += dzm.row(static_cast<Eigen::Index>(k));
        encode_backward(params.params, L, arch, cache, dz, g);
      }
      if (count > 0) {
        g.scale(1.0 / count);
        gh.scale(1.0 / count);
        total += loss / count;
        adam_enc.step(params.params, g);
        adam_head.step(head, gh);
      }
      ++batches;
    }
    if (!std::isfinite(total)) throw Error("non-finite masked-token loss");
    report.epoch_losses.push_back(batches ? total / static_cast<double>(batches)
                                          : 0.0);
  }
}

}  // namespace

PretrainReport pretrain_masked(TaggerParams& params,
                               std::span<const Document> docs,
                               const PretrainConfig& config) {
  PretrainReport report;
  ParamSet head = make_mlm_head(params.arch, config.train.seed);
  run_pretraining(params, head, docs, config, report);
  return report;
}

MaskedEval pretrain_and_score(TaggerParams& params,
                              std::span<const Document> train,
                              std::span<const Document> held_out,
                              const PretrainConfig& config,
                              std::uint64_t eval_seed) {
  PretrainReport report;
  ParamSet head = make_mlm_head(params.arch, config.train.seed);
  run_pretraining(params, head, train, config, report);

  const Layout L = resolve(params.params, params.arch);
  MaskedEval ev;
  std::size_t hits = 0;
  for (const Document& doc : held_out) {
    Rng mrng(eval_seed, "eval_mask/" + doc.id);
    MaskedDoc md = mask_document(doc, params.arch, config.mask_rate, mrng);
    if (md.masked.empty()) continue;
    EncoderCache cache;
    encode(params.params, L, params.arch, md.ids, md.geometry, cache);
    for (std::size_t k = 0; k < md.masked.size(); ++k) {
      Eigen::RowVectorXd logits =
          cache.z.row(md.masked[k]) * head[0].mat() + head[1].mat().row(0);
      Eigen::Index best;
      logits.maxCoeff(&best);
      hits += best == md.original[k];
      ++ev.masked;
    }
  }
  ev.accuracy = ev.masked ? static_cast<double>(hits) / static_cast<double>(ev.masked)
                          : 0.0;
  return ev;
}

// ---------------------------------------------------------------------------
// Prediction

Prediction predict(const TaggerParams& params, const Document& doc,
                   const EntitySchema& schema) {
  ForwardResult fr = forward(params, doc);
  TagSequence raw(doc.tokens.size());
  Prediction p;
  p.confidence.reserve(raw.size());
  for (Eigen::Index i = 0; i < fr.probs.rows(); ++i) {
    Eigen::Index best;
    p.confidence.push_back(fr.probs.row(i).maxCoeff(&best));
    raw[static_cast<std::size_t>(i)] = Tag::from_id(static_cast<int>(best));
  }
  p.tags = repair_bioes(raw, schema);
  return p;
}

double token_accuracy(const TaggerParams& params,
                      std::span<const TrainingExample> examples) {
  std::size_t hit = 0, total = 0;
  for (const TrainingExample& ex : examples) {
    ForwardResult fr = forward(params, *ex.doc);
    for (Eigen::Index i = 0; i < fr.logits.rows(); ++i) {
      Eigen::Index best;
      fr.logits.row(i).maxCoeff(&best);
      hit += best == ex.targets[static_cast<std::size_t>(i)];
      ++total;
    }
  }
  return total ? static_cast<double>(hit) / static_cast<double>(total) : 0.0;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

std::string tagger_header(const TaggerParams& params) {
  nlohmann::json j;
  j["model"] = "layout_tagger";
  j["arch"] = nlohmann::json::parse(arch_to_json(params.arch));
  j["epoch"] = params.epoch;
  return j.dump();
}

}  // namespace

std::vector<unsigned char> tagger_bytes(const TaggerParams& params) {
  return checkpoint_bytes(tagger_header(params), params.params);
}

void save_tagger(const TaggerParams& params, const std::filesystem::path& p) {
  write_checkpoint(p, tagger_header(params), params.params);
}

TaggerParams load_tagger(const std::filesystem::path& p) {
  Checkpoint ck = read_checkpoint(p);
  auto j = nlohmann::json::parse(ck.header_json);
  if (j.value("model", "") != "layout_tagger")
    throw Error("checkpoint " + p.string() + " does not hold a layout tagger");
  TaggerParams tp;
  tp.arch = arch_from_json(j.at("arch").dump());
  tp.epoch = j.at("epoch").get<std::int64_t>();
  tp.params = std::move(ck.params);
  TaggerParams shape = init_params(tp.arch, 0);
  if (!shape.params.same_shape(tp.params))
    throw Error("checkpoint " + p.string() +
                " tensors do not match its architecture");
  return tp;
}

}  // namespace nat
