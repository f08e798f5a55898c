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

#include "nat/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

namespace nat {

SpanScores& SpanScores::operator+=(const SpanScores& o) {
  if (by_type.size() < o.by_type.size()) by_type.resize(o.by_type.size());
  for (std::size_t t = 0; t < o.by_type.size(); ++t) {
    by_type[t].tp += o.by_type[t].tp;
    by_type[t].fp += o.by_type[t].fp;
    by_type[t].fn += o.by_type[t].fn;
  }
  return *this;
}

SpanScores span_scores(const std::vector<EntitySpan>& pred,
                       const std::vector<EntitySpan>& gold,
                       const EntitySchema& schema) {
  SpanScores s(schema.size());
  std::multiset<EntitySpan> open(gold.begin(), gold.end());
  for (const EntitySpan& p : pred) {
    auto it = open.find(p);
    if (it != open.end()) {
      ++s.by_type.at(p.type).tp;
      open.erase(it);
    } else {
      ++s.by_type.at(p.type).fp;
    }
  }
  for (const EntitySpan& g : open) ++s.by_type.at(g.type).fn;
  return s;
}

double macro_f1(const SpanScores& scores) {
  double sum = 0;
  std::size_t n = 0;
  for (const TypeCounts& c : scores.by_type)
    if (c.present()) {
      sum += c.f1();
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

std::vector<EntityScore> entity_scores(const SpanScores& scores,
                                       const EntitySchema& schema) {
  std::vector<EntityScore> out;
  for (std::size_t t = 0; t < schema.size(); ++t) {
    const TypeCounts c = t < scores.by_type.size() ? scores.by_type[t] : TypeCounts{};
    out.push_back({schema.name(static_cast<int>(t)), c.precision(), c.recall(),
                   c.f1(), c.tp, c.fp, c.fn, c.present()});
  }
  return out;
}

SpanScores score_corpus(const std::vector<Document>& predicted,
                        const Corpus& gold) {
  std::map<std::string, const Document*> by_id;
  for (const Document& d : gold.documents) by_id[d.id] = &d;
  SpanScores total(gold.schema.size());
  for (const Document& p : predicted) {
    auto it = by_id.find(p.id);
    if (it == by_id.end())
      throw Error("score_corpus: no gold document '" + p.id + "'");
    total += span_scores(p.gold_spans, it->second->gold_spans, gold.schema);
  }
  return total;
}

std::pair<double, double> mean_and_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1))};
}

TrialReport summarize_trials(std::vector<TrialResult> trials) {
  TrialReport r;
  r.trials = std::move(trials);
  std::vector<double> f1;
  for (const auto& t : r.trials) f1.push_back(t.macro_f1);
  std::tie(r.mean, r.stddev) = mean_and_std(f1);
  if (!r.trials.empty()) {
    r.entities = r.trials.front().entities;
    for (std::size_t e = 0; e < r.entities.size(); ++e) {
      EntityScore& acc = r.entities[e];
      acc = {acc.type, 0, 0, 0, 0, 0, 0, false};
      std::size_t n = 0;
      for (const auto& t : r.trials) {
        if (e >= t.entities.size() || !t.entities[e].included) continue;
        const EntityScore& s = t.entities[e];
        acc.precision += s.precision;
        acc.recall += s.recall;
        acc.f1 += s.f1;
        acc.tp += s.tp;
        acc.fp += s.fp;
        acc.fn += s.fn;
        ++n;
      }
      if (n) {
        acc.included = true;
        acc.precision /= double(n);
        acc.recall /= double(n);
        acc.f1 /= double(n);
      }
    }
  }
  return r;
}

TrialReport run_trials(const TrialFn& fn, int n_trials, std::uint64_t base_seed) {
  if (n_trials < 1) throw Error("run_trials: n_trials must be >= 1");
  std::vector<TrialResult> done;
  for (int i = 0; i < n_trials; ++i) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
    try {
      TrialResult r = fn(seed);
      r.seed = seed;
      done.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw TrialAbort("trial with seed " + std::to_string(seed) +
                           " failed: " + e.what(),
                       summarize_trials(done));
    }
  }
  return summarize_trials(std::move(done));
}

std::vector<CurvePoint> label_efficiency_curve(const CurveFn& fn,
                                               std::vector<std::size_t> sizes,
                                               int n_trials,
                                               std::uint64_t base_seed) {
  if (n_trials < 1) throw Error("label_efficiency_curve: n_trials must be >= 1");
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  std::vector<CurvePoint> out;
  for (std::size_t h : sizes) {
    CurvePoint p;
    p.h_size = h;
    for (int i = 0; i < n_trials; ++i)
      p.values.push_back(fn(h, base_seed + static_cast<std::uint64_t>(i)));
    std::tie(p.mean, p.stddev) = mean_and_std(p.values);
    out.push_back(std::move(p));
  }
  return out;
}

std::optional<double> size_to_reach(const std::vector<CurvePoint>& curve,
                                    double target) {
  if (curve.empty()) return std::nullopt;
  if (curve.front().mean >= target) return double(curve.front().h_size);
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const CurvePoint& a = curve[i - 1];
    const CurvePoint& b = curve[i];
    if (b.mean >= target) {
      const double t = (target - a.mean) / (b.mean - a.mean);
      return double(a.h_size) + t * (double(b.h_size) - double(a.h_size));
    }
  }
  return std::nullopt;
}

std::optional<SavedLabels> saved_labels(const std::vector<CurvePoint>& curve,
                                        const std::vector<CurvePoint>& baseline) {
  for (auto it = curve.rbegin(); it != curve.rend(); ++it) {
    auto s = size_to_reach(baseline, it->mean);
    if (!s) continue;
    SavedLabels r;
    r.h_size = it->h_size;
    r.target_f1 = it->mean;
    r.baseline_size = *s;
    r.saved_fraction = *s > 0 ? 1.0 - double(it->h_size) / *s : 0.0;
    return r;
  }
  return std::nullopt;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * double(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error("spearman: length mismatch");
  if (x.size() < 2) return 0.0;
  const auto rx = ranks(x), ry = ranks(y);
  const auto [mx, sx] = mean_and_std(rx);
  const auto [my, sy] = mean_and_std(ry);
  if (sx == 0 || sy == 0) return 0.0;
  double cov = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) cov += (rx[i] - mx) * (ry[i] - my);
  cov /= double(rx.size() - 1);
  return cov / (sx * sy);
}

double curve_spearman(const std::vector<CurvePoint>& curve) {
  std::vector<double> x, y;
  for (const auto& p : curve)
    for (double v : p.values) {
      x.push_back(double(p.h_size));
      y.push_back(v);
    }
  return spearman(x, y);
}

std::string curve_csv(const std::vector<CurvePoint>& curve) {
  std::ostringstream os;
  os << "h_size,mean_f1,std_f1\n";
  char buf[96];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f\n", p.h_size, p.mean, p.stddev);
    os << buf;
  }
  return os.str();
}

namespace {

nlohmann::json entities_json(const std::vector<EntityScore>& es) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& e : es)
    a.push_back({{"type", e.type},
                 {"precision", e.precision},
                 {"recall", e.recall},
                 {"f1", e.f1},
                 {"tp", e.tp},
                 {"fp", e.fp},
                 {"fn", e.fn},
                 {"included", e.included}});
  return a;
}

}  // namespace

std::string trial_report_json(const TrialReport& r) {
  nlohmann::json j;
  j["n_trials"] = r.n_trials();
  j["mean_macro_f1"] = r.mean;
  j["std_macro_f1"] = r.stddev;
  j["entities"] = entities_json(r.entities);
  j["trials"] = nlohmann::json::array();
  for (const auto& t : r.trials)
    j["trials"].push_back({{"seed", t.seed},
                           {"macro_f1", t.macro_f1},
                           {"entities", entities_json(t.entities)}});
  return j.dump(2) + "\n";
}

std::string trial_report_text(const TrialReport& r) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-24s %9s %9s %9s\n", "entity", "precision",
                "recall", "f1");
  os << buf;
  for (const auto& e : r.entities) {
    if (!e.included) {
      std::snprintf(buf, sizeof buf, "%-24s %9s %9s %9s\n", e.type.c_str(), "-",
                    "-", "-");
    } else {
      std::snprintf(buf, sizeof buf, "%-24s %9.4f %9.4f %9.4f\n", e.type.c_str(),
                    e.precision, e.recall, e.f1);
    }
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "macro-F1 %.4f +/- %.4f over %zu trial(s)\n",
                r.mean, r.stddev, r.n_trials());
  os << buf;
  return os.str();
}

}  // namespace nat
