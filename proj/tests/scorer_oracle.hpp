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

// Brute-force span scorer used as an oracle for the evaluation module. It
// compares token-index sets directly and never shares code with the library.

#include <cstdint>
#include <set>
#include <vector>

#include "nat/corpus_io.hpp"

namespace nat::testing {

struct OracleCase {
  Corpus gold;
  std::vector<Document> predicted;
};

inline std::set<std::size_t> token_set(const EntitySpan& s) {
  std::set<std::size_t> out;
  for (std::size_t i = s.begin; i < s.end; ++i) out.insert(i);
  return out;
}

/// Macro-F1 over types that occur in gold or prediction anywhere.
inline double brute_force_macro_f1(const OracleCase& c) {
  const std::size_t k = c.gold.schema.size();
  std::vector<std::int64_t> tp(k), fp(k), fn(k);
  for (const Document& p : c.predicted) {
    const Document* g = nullptr;
    for (const Document& d : c.gold.documents)
      if (d.id == p.id) g = &d;
    std::vector<bool> used(g->gold_spans.size(), false);
    for (const EntitySpan& ps : p.gold_spans) {
      bool hit = false;
      for (std::size_t j = 0; j < g->gold_spans.size() && !hit; ++j) {
        const EntitySpan& gs = g->gold_spans[j];
        if (!used[j] && gs.type == ps.type && token_set(gs) == token_set(ps)) {
          used[j] = true;
          hit = true;
        }
      }
      (hit ? tp : fp)[ps.type] += 1;
    }
    for (std::size_t j = 0; j < g->gold_spans.size(); ++j)
      if (!used[j]) fn[g->gold_spans[j].type] += 1;
  }
  double sum = 0;
  int n = 0;
  for (std::size_t t = 0; t < k; ++t) {
    if (tp[t] + fp[t] + fn[t] == 0) continue;
    sum += static_cast<double>(2 * tp[t]) / static_cast<double>(2 * tp[t] + fp[t] + fn[t]);
    ++n;
  }
  return n ? sum / n : 0.0;
}

/// Random corpus of up to four documents with at most eight tokens each.
inline OracleCase random_oracle_case(Rng& rng) {
  OracleCase c;
  c.gold.schema = EntitySchema("x", {"a", "b", "c"});
  const std::size_t n_docs = 1 + rng.index(4);
  auto random_spans = [&](std::size_t n) {
    std::vector<EntitySpan> spans;
    std::size_t at = 0;
    while (at < n) {
      if (rng.bernoulli(0.4)) {
        ++at;
        continue;
      }
      const std::size_t len = 1 + rng.index(std::min<std::size_t>(3, n - at));
      spans.push_back({static_cast<int>(rng.index(3)), at, at + len});
      at += len;
    }
    return spans;
  };
  for (std::size_t d = 0; d < n_docs; ++d) {
    const std::size_t n = rng.index(9);
    Document g;
    g.id = "d" + std::to_string(d);
    for (std::size_t i = 0; i < n; ++i)
      g.tokens.push_back({"t", {0.1, 0.1, 0.2, 0.2}, 0});
    g.gold_spans = random_spans(n);
    Document p = g;
    if (rng.bernoulli(0.5)) {
      p.gold_spans = random_spans(n);
    } else {
      // Perturb a copy of the gold so that many spans match.
      for (EntitySpan& s : p.gold_spans)
        if (rng.bernoulli(0.3)) s.type = static_cast<int>(rng.index(3));
    }
    c.gold.documents.push_back(g);
    c.predicted.push_back(p);
  }
  return c;
}

}  // namespace nat::testing
