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

#include "nat/augmentation.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nat/mini_invoice.hpp"
#include "nat/parallel.hpp"

namespace nat {

namespace {

using nlohmann::json;

std::string lower(std::string s) {
  for (char& c : s)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

void check_unit(double v, const std::string& key) {
  if (!(v >= 0.0 && v <= 1.0))
    throw Error("rule set: " + key + " must lie in [0, 1]");
}

struct Edit {
  std::size_t begin, end;
  std::vector<std::string> words;
};

bool span_compatible(const Document& doc, std::size_t b, std::size_t e) {
  for (const EntitySpan& s : doc.gold_spans) {
    const bool outside = e <= s.begin || b >= s.end;
    const bool inside = b >= s.begin && e <= s.end;
    if (!outside && !inside) return false;
  }
  return true;
}

// Replaces token ranges with new words laid out over the old region and
// re-projects the gold spans. Edits are sorted and disjoint.
Document apply_edits(const Document& doc, const std::vector<Edit>& edits) {
  Document out = doc;
  out.tokens.clear();
  const std::size_t n = doc.tokens.size();
  std::vector<std::size_t> newpos(n + 1, 0);
  std::size_t i = 0;
  auto copy_until = [&](std::size_t stop) {
    for (; i < stop; ++i) {
      newpos[i] = out.tokens.size();
      out.tokens.push_back(doc.tokens[i]);
    }
  };
  for (const Edit& e : edits) {
    copy_until(e.begin);
    const std::size_t start = out.tokens.size();
    BBox region = doc.tokens[e.begin].bbox;
    for (std::size_t k = e.begin; k < e.end; ++k) {
      const BBox& b = doc.tokens[k].bbox;
      region = {std::min(region.x0, b.x0), std::min(region.y0, b.y0),
                std::max(region.x1, b.x1), std::max(region.y1, b.y1)};
    }
    double total = 0;
    for (const auto& w : e.words) total += static_cast<double>(w.size());
    double x = region.x0;
    for (std::size_t k = 0; k < e.words.size(); ++k) {
      const double frac = static_cast<double>(e.words[k].size()) / total;
      double x1 = k + 1 == e.words.size() ? region.x1
                                          : x + frac * region.width();
      out.tokens.push_back({e.words[k],
                            quantize6(BBox{x, region.y0, x1, region.y1}),
                            doc.tokens[e.begin].page});
      x = x1;
    }
    for (std::size_t k = e.begin; k < e.end; ++k) newpos[k] = start;
    i = e.end;
  }
  copy_until(n);
  newpos[n] = out.tokens.size();
  for (EntitySpan& s : out.gold_spans) {
    s.begin = newpos[s.begin];
    s.end = newpos[s.end];
  }
  return out;
}

SyntheticDocument finish(Document d, const Document& src, const std::string& rule) {
  SyntheticDocument out;
  out.identity = d.tokens == src.tokens && d.gold_spans == src.gold_spans;
  d.meta["aug.rule"] = rule;
  d.meta["aug.identity"] = out.identity ? "1" : "0";
  out.document = std::move(d);
  return out;
}

}  // namespace

void AugmentationRuleSet::validate() const {
  for (std::size_t i = 0; i < synonyms.size(); ++i) {
    const auto key = "synonyms[" + std::to_string(i) + "]";
    if (synonyms[i].phrases.empty())
      throw Error("rule set: " + key + ".phrases is empty");
    if (synonyms[i].synonyms.empty())
      throw Error("rule set: " + key + ".synonyms is empty");
    for (const auto& s : synonyms[i].synonyms)
      if (split_words(s).empty())
        throw Error("rule set: " + key + ".synonyms has a blank entry");
    for (const auto& s : synonyms[i].phrases)
      if (split_words(s).empty())
        throw Error("rule set: " + key + ".phrases has a blank entry");
  }
  for (const auto& [type, fmts] : formats) {
    if (fmts.empty()) throw Error("rule set: formats." + type + " is empty");
    for (const auto& f : fmts)
      if ((f.kind != "date" && f.kind != "amount") || f.pattern.empty())
        throw Error("rule set: formats." + type +
                    " entries need kind date|amount and a pattern");
  }
  check_unit(format_probability, "format_probability");
  check_unit(coordinate.max_shift, "coordinate.max_shift");
  check_unit(coordinate.probability, "coordinate.probability");
  check_unit(bbox.max_expand, "bbox.max_expand");
  check_unit(bbox.probability, "bbox.probability");
  if (n_passes < 0) throw Error("rule set: n_passes must be >= 0");
}

std::vector<std::string> AugmentationRuleSet::rule_ids() const {
  std::vector<std::string> ids;
  if (!synonyms.empty()) ids.push_back("synonym");
  if (!formats.empty()) ids.push_back("format");
  if (coordinate.enabled) ids.push_back("coordinate");
  if (bbox.enabled) ids.push_back("bbox");
  return ids;
}

AugmentationRuleSet parse_rule_set(const std::string& text) {
  AugmentationRuleSet r;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("rule set: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error("rule set: top level must be an object");
  static const std::vector<std::string> kKeys = {
      "n_passes", "synonyms", "formats", "format_probability", "coordinate",
      "bbox"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(kKeys.begin(), kKeys.end(), it.key()) == kKeys.end())
      throw Error("rule set: unknown key '" + it.key() + "'");
  std::string where;
  try {
    where = "n_passes";
    r.n_passes = j.value("n_passes", r.n_passes);
    where = "format_probability";
    r.format_probability = j.value("format_probability", r.format_probability);
    where = "synonyms";
    for (const auto& s : j.value("synonyms", json::array()))
      r.synonyms.push_back({s.at("phrases").get<std::vector<std::string>>(),
                            s.at("synonyms").get<std::vector<std::string>>()});
    where = "formats";
    const json formats = j.value("formats", json::object());
    for (const auto& [type, arr] : formats.items()) {
      where = "formats." + type;
      auto& v = r.formats[type];
      for (const auto& f : arr)
        v.push_back({f.at("kind").get<std::string>(),
                     f.at("pattern").get<std::string>()});
    }
    if (j.contains("coordinate")) {
      where = "coordinate";
      const json& c = j.at("coordinate");
      r.coordinate.enabled = c.value("enabled", r.coordinate.enabled);
      r.coordinate.max_shift = c.value("max_shift", r.coordinate.max_shift);
      r.coordinate.probability = c.value("probability", r.coordinate.probability);
      r.coordinate.per_token = c.value("per_token", r.coordinate.per_token);
    }
    if (j.contains("bbox")) {
      where = "bbox";
      const json& b = j.at("bbox");
      r.bbox.enabled = b.value("enabled", r.bbox.enabled);
      r.bbox.max_expand = b.value("max_expand", r.bbox.max_expand);
      r.bbox.probability = b.value("probability", r.bbox.probability);
    }
  } catch (const json::exception& e) {
    throw Error("rule set: bad value for '" + where + "': " + e.what());
  }
  r.validate();
  return r;
}

AugmentationRuleSet read_rule_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open rule set " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_rule_set(ss.str());
}

std::string rule_set_to_json(const AugmentationRuleSet& r) {
  json j;
  j["n_passes"] = r.n_passes;
  j["format_probability"] = r.format_probability;
  j["synonyms"] = json::array();
  for (const auto& s : r.synonyms)
    j["synonyms"].push_back({{"phrases", s.phrases}, {"synonyms", s.synonyms}});
  j["formats"] = json::object();
  for (const auto& [type, fmts] : r.formats) {
    json arr = json::array();
    for (const auto& f : fmts) arr.push_back({{"kind", f.kind}, {"pattern", f.pattern}});
    j["formats"][type] = arr;
  }
  j["coordinate"] = {{"enabled", r.coordinate.enabled},
                     {"max_shift", r.coordinate.max_shift},
                     {"probability", r.coordinate.probability},
                     {"per_token", r.coordinate.per_token}};
  j["bbox"] = {{"enabled", r.bbox.enabled},
               {"max_expand", r.bbox.max_expand},
               {"probability", r.bbox.probability}};
  return j.dump(2) + "\n";
}

AugmentationRuleSet default_invoice_rules() {
  const InvoicePhrases& ph = invoice_phrases();
  AugmentationRuleSet r;
  std::vector<std::string> total_keys;
  // "Amount" doubles as a table header, so it is a target but not a key.
  for (const auto& k : ph.total_keys)
    if (k != "Amount") total_keys.push_back(k);
  r.synonyms.push_back({total_keys, ph.total_keys});
  r.synonyms.push_back({ph.date_keys, ph.date_keys});
  r.synonyms.push_back({ph.invoice_keys, ph.invoice_keys});
  for (const auto& p : ph.date_patterns)
    r.formats["purchase_date"].push_back({"date", p});
  for (const auto& p : ph.amount_patterns) {
    r.formats["total_billed_amount"].push_back({"amount", p});
    r.formats["line_item_amount"].push_back({"amount", p});
  }
  return r;
}

SyntheticDocument synonym_substitute(const Document& doc,
                                     const AugmentationRuleSet& rules, Rng& rng) {
  struct Key {
    std::vector<std::string> words;
    std::size_t rule;
  };
  std::vector<Key> keys;
  for (std::size_t r = 0; r < rules.synonyms.size(); ++r)
    for (const auto& p : rules.synonyms[r].phrases)
      keys.push_back({split_words(lower(p)), r});
  std::stable_sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
    return a.words.size() > b.words.size();
  });

  const std::size_t n = doc.tokens.size();
  std::vector<std::string> words(n);
  for (std::size_t i = 0; i < n; ++i) words[i] = lower(doc.tokens[i].text);

  std::vector<Edit> edits;
  std::size_t i = 0;
  while (i < n) {
    const Key* hit = nullptr;
    for (const Key& k : keys) {
      const std::size_t len = k.words.size();
      if (i + len > n || !span_compatible(doc, i, i + len)) continue;
      if (std::equal(k.words.begin(), k.words.end(),
                     words.begin() + static_cast<long>(i))) {
        hit = &k;
        break;
      }
    }
    if (!hit) {
      ++i;
      continue;
    }
    const std::size_t len = hit->words.size();
    edits.push_back({i, i + len, split_words(rng.pick(rules.synonyms[hit->rule].synonyms))});
    i += len;
  }
  Document out = apply_edits(doc, edits);
  SyntheticDocument s = finish(std::move(out), doc, "synonym");
  s.document.meta["aug.substitutions"] = std::to_string(edits.size());
  return s;
}

SyntheticDocument format_substitute(const Document& doc,
                                    const EntitySchema& schema,
                                    const AugmentationRuleSet& rules, Rng& rng) {
  std::vector<EntitySpan> spans = doc.gold_spans;
  std::sort(spans.begin(), spans.end(),
            [](const EntitySpan& a, const EntitySpan& b) { return a.begin < b.begin; });
  std::vector<Edit> edits;
  std::size_t unparseable = 0;
  for (const EntitySpan& s : spans) {
    auto it = rules.formats.find(schema.name(s.type));
    if (it == rules.formats.end()) continue;
    std::string text;
    std::vector<std::string> old_words;
    for (std::size_t k = s.begin; k < s.end; ++k) {
      old_words.push_back(doc.tokens[k].text);
      text += (k > s.begin ? " " : "") + doc.tokens[k].text;
    }
    std::optional<ParsedValue> value;
    for (const ValueFormat& f : it->second)
      if ((value = parse_value(text, f))) break;
    if (!value) {
      ++unparseable;
      continue;
    }
    if (rules.format_probability < 1.0 && !rng.bernoulli(rules.format_probability))
      continue;
    const ValueFormat& f = rng.pick(it->second);
    auto words = split_words(render_value(*value, f));
    if (words != old_words) edits.push_back({s.begin, s.end, std::move(words)});
  }
  SyntheticDocument out = finish(apply_edits(doc, edits), doc, "format");
  out.document.meta["aug.substitutions"] = std::to_string(edits.size());
  out.document.meta["aug.unparseable"] = std::to_string(unparseable);
  return out;
}

SyntheticDocument transform_coordinates(const Document& doc,
                                        const CoordinateRule& rule, Rng& rng) {
  Document out = doc;
  auto shift = [&](const std::vector<std::size_t>& toks) {
    double dx = quantize6(rng.uniform(-rule.max_shift, rule.max_shift));
    double dy = quantize6(rng.uniform(-rule.max_shift, rule.max_shift));
    double lo_x = 1, hi_x = 0, lo_y = 1, hi_y = 0;
    for (std::size_t t : toks) {
      const BBox& b = doc.tokens[t].bbox;
      lo_x = std::min(lo_x, b.x0);
      hi_x = std::max(hi_x, b.x1);
      lo_y = std::min(lo_y, b.y0);
      hi_y = std::max(hi_y, b.y1);
    }
    dx = std::clamp(dx, -lo_x, 1.0 - hi_x);
    dy = std::clamp(dy, -lo_y, 1.0 - hi_y);
    for (std::size_t t : toks) {
      BBox& b = out.tokens[t].bbox;
      b = quantize6(BBox{b.x0 + dx, b.y0 + dy, b.x1 + dx, b.y1 + dy});
    }
  };
  std::size_t moved = 0;
  if (rule.per_token) {
    for (const EntitySpan& s : doc.gold_spans)
      for (std::size_t t = s.begin; t < s.end; ++t)
        if (rng.bernoulli(rule.probability)) {
          shift({t});
          ++moved;
        }
  } else {
    for (const EntitySpan& s : doc.gold_spans)
      if (rng.bernoulli(rule.probability)) {
        std::vector<std::size_t> toks;
        for (std::size_t t = s.begin; t < s.end; ++t) toks.push_back(t);
        shift(toks);
        ++moved;
      }
  }
  SyntheticDocument r = finish(std::move(out), doc, "coordinate");
  r.document.meta["aug.mode"] = rule.per_token ? "token" : "span";
  r.document.meta["aug.shifted"] = std::to_string(moved);
  return r;
}

BBox expand_box(const BBox& b, double ex, double ey) {
  BBox r = b;
  if (ex > 0) {
    const double cx = 0.5 * (b.x0 + b.x1), hw = 0.5 * b.width() * (1 + ex);
    r.x0 = std::max(0.0, cx - hw);
    r.x1 = std::min(1.0, cx + hw);
  }
  if (ey > 0) {
    const double cy = 0.5 * (b.y0 + b.y1), hh = 0.5 * b.height() * (1 + ey);
    r.y0 = std::max(0.0, cy - hh);
    r.y1 = std::min(1.0, cy + hh);
  }
  return quantize6(r);
}

SyntheticDocument expand_bboxes(const Document& doc, const BBoxRule& rule,
                                Rng& rng) {
  Document out = doc;
  std::size_t expanded = 0;
  for (const EntitySpan& s : doc.gold_spans) {
    if (!rng.bernoulli(rule.probability)) continue;
    ++expanded;
    for (std::size_t t = s.begin; t < s.end; ++t) {
      const double ex = rng.uniform(0, rule.max_expand);
      const double ey = rng.uniform(0, rule.max_expand);
      out.tokens[t].bbox = expand_box(doc.tokens[t].bbox, ex, ey);
    }
  }
  SyntheticDocument r = finish(std::move(out), doc, "bbox");
  r.document.meta["aug.expanded"] = std::to_string(expanded);
  return r;
}

SyntheticDocument apply_rule(const std::string& rule_id, const Document& doc,
                             const EntitySchema& schema,
                             const AugmentationRuleSet& rules, Rng& rng) {
  if (rule_id == "synonym") return synonym_substitute(doc, rules, rng);
  if (rule_id == "format") return format_substitute(doc, schema, rules, rng);
  if (rule_id == "coordinate") return transform_coordinates(doc, rules.coordinate, rng);
  if (rule_id == "bbox") return expand_bboxes(doc, rules.bbox, rng);
  throw Error("unknown augmentation rule '" + rule_id + "'");
}

Corpus build_synthetic_corpus(const Corpus& human,
                              const AugmentationRuleSet& rules,
                              std::uint64_t seed, int jobs) {
  rules.validate();
  const auto ids = rules.rule_ids();
  const std::size_t nh = human.documents.size(), nr = ids.size();
  const std::size_t passes = static_cast<std::size_t>(rules.n_passes);
  Corpus out{human.schema, Provenance::synthetic(), {}};
  out.documents.resize(passes * nr * nh);
  parallel_for(out.documents.size(), jobs, [&](std::size_t k) {
    const std::size_t p = k / (nr * nh), r = (k / nh) % nr, i = k % nh;
    const Document& src = human.documents[i];
    const std::string stream = "augment/pass" + std::to_string(p + 1) + "/" +
                               ids[r] + "/" + src.id;
    Rng rng(seed, stream);
    SyntheticDocument s = apply_rule(ids[r], src, human.schema, rules, rng);
    Document& d = s.document;
    d.id = src.id + "/p" + std::to_string(p + 1) + "/" + ids[r];
    d.meta["aug.source"] = src.id;
    d.meta["aug.pass"] = std::to_string(p + 1);
    d.meta["aug.seed"] = std::to_string(derive_seed(seed, stream));
    auto v = validate_document(d, human.schema);
    if (!v.empty())
      throw Error("augmentation produced an invalid document " + d.id + ": " +
                  v.front().message);
    out.documents[k] = std::move(d);
  });
  return out;
}

Corpus drop_identity_outputs(const Corpus& synthetic) {
  Corpus out{synthetic.schema, synthetic.provenance, {}};
  for (const Document& d : synthetic.documents) {
    auto it = d.meta.find("aug.identity");
    if (it == d.meta.end() || it->second != "1") out.documents.push_back(d);
  }
  return out;
}

}  // namespace nat
