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

#include "nat/corpus_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include <json.hpp>

namespace nat {

namespace fs = std::filesystem;
using nlohmann::json;

std::string Provenance::str() const {
  switch (kind) {
    case Kind::kHuman: return "human";
    case Kind::kUnlabeled: return "unlabeled";
    case Kind::kWeak: return "weak:" + source;
    case Kind::kSynthetic: return "synthetic";
  }
  return "human";
}

Provenance Provenance::parse(const std::string& s) {
  if (s == "human") return human();
  if (s == "unlabeled") return unlabeled();
  if (s == "synthetic") return synthetic();
  if (s.rfind("weak:", 0) == 0 && s.size() > 5) return weak(s.substr(5));
  throw Error("unknown provenance '" + s + "'");
}

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  // -0.000000 would not round-trip to the same bits as 0.
  if (std::string_view(buf) == "-0.000000") return "0.000000";
  return buf;
}

}  // namespace

std::string format_schema_line(const EntitySchema& schema,
                               const Provenance& provenance) {
  json j;
  j["kind"] = "schema";
  j["doc_type"] = schema.doc_type();
  j["entity_types"] = schema.entity_types();
  j["provenance"] = provenance.str();
  return j.dump();
}

std::string format_doc_line(const DocRecord& rec, const EntitySchema& schema) {
  const Document& d = rec.doc;
  std::string s = "{\"kind\":\"doc\",\"id\":" + json(d.id).dump() +
                  ",\"page_width\":" + json(d.page_width).dump() +
                  ",\"page_height\":" + json(d.page_height).dump() +
                  ",\"tokens\":[";
  for (std::size_t i = 0; i < d.tokens.size(); ++i) {
    const Token& t = d.tokens[i];
    if (i) s += ',';
    s += "{\"text\":" + json(t.text).dump() + ",\"x0\":" + fixed6(t.bbox.x0) +
         ",\"y0\":" + fixed6(t.bbox.y0) + ",\"x1\":" + fixed6(t.bbox.x1) +
         ",\"y1\":" + fixed6(t.bbox.y1) + ",\"page\":" + std::to_string(t.page) +
         "}";
  }
  s += "],\"spans\":[";
  for (std::size_t i = 0; i < d.gold_spans.size(); ++i) {
    const EntitySpan& sp = d.gold_spans[i];
    if (i) s += ',';
    s += "{\"type\":" + json(schema.name(sp.type)).dump() +
         ",\"start\":" + std::to_string(sp.begin) +
         ",\"end\":" + std::to_string(sp.end) + "}";
  }
  s += "]";
  if (!rec.weights.empty()) s += ",\"weights\":" + json(rec.weights).dump();
  s += ",\"provenance\":" + json(rec.provenance.str()).dump();
  if (!d.meta.empty()) s += ",\"meta\":" + json(d.meta).dump();
  s += "}";
  return s;
}

namespace {

[[noreturn]] void fail_line(const std::string& name, std::size_t line,
                            const std::string& what) {
  throw Error(name + ":" + std::to_string(line) + ": " + what);
}

DocRecord parse_doc(const json& j, const EntitySchema& schema) {
  DocRecord rec;
  Document& d = rec.doc;
  d.id = j.at("id").get<std::string>();
  d.page_width = j.at("page_width").get<double>();
  d.page_height = j.at("page_height").get<double>();
  for (const json& t : j.at("tokens")) {
    Token tok;
    tok.text = t.at("text").get<std::string>();
    tok.bbox = {t.at("x0").get<double>(), t.at("y0").get<double>(),
                t.at("x1").get<double>(), t.at("y1").get<double>()};
    tok.page = t.value("page", 0);
    d.tokens.push_back(std::move(tok));
  }
  for (const json& sj : j.at("spans")) {
    const std::string type = sj.at("type").get<std::string>();
    int ti = schema.index_of(type);
    if (ti < 0) throw Error("entity type '" + type + "' not in schema");
    d.gold_spans.push_back({ti, sj.at("start").get<std::size_t>(),
                            sj.at("end").get<std::size_t>()});
  }
  if (j.contains("weights")) {
    rec.weights = j.at("weights").get<std::vector<double>>();
    if (rec.weights.size() != d.tokens.size())
      throw Error("weights length does not match token count");
  }
  rec.provenance = Provenance::parse(j.value("provenance", "human"));
  if (j.contains("meta"))
    d.meta = j.at("meta").get<std::map<std::string, std::string>>();
  return rec;
}

}  // namespace

CorpusFile parse_corpus_file(std::istream& in, const std::string& name) {
  CorpusFile out;
  std::string line;
  std::size_t lineno = 0;
  bool have_schema = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail_line(name, lineno, std::string("malformed record: ") + e.what());
    }
    try {
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "schema") {
        if (have_schema) fail_line(name, lineno, "duplicate schema record");
        out.schema = EntitySchema(j.at("doc_type").get<std::string>(),
                                  j.at("entity_types")
                                      .get<std::vector<std::string>>());
        out.provenance = Provenance::parse(j.value("provenance", "human"));
        have_schema = true;
      } else if (kind == "doc") {
        if (!have_schema)
          fail_line(name, lineno, "document record before schema record");
        out.records.push_back(parse_doc(j, out.schema));
      } else {
        fail_line(name, lineno, "unknown record kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      fail_line(name, lineno, std::string("malformed record: ") + e.what());
    } catch (const Error& e) {
      if (std::string_view(e.what()).rfind(name + ":", 0) == 0) throw;
      fail_line(name, lineno, e.what());
    }
  }
  if (!have_schema) throw Error(name + ": missing schema record");
  return out;
}

CorpusFile read_corpus_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file " + path.string());
  return parse_corpus_file(in, path.string());
}

void write_corpus_file(const CorpusFile& file, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write corpus file " + path.string());
  out << format_schema_line(file.schema, file.provenance) << '\n';
  for (const DocRecord& r : file.records)
    out << format_doc_line(r, file.schema) << '\n';
}

namespace {

CorpusFile to_file(const Corpus& c) {
  CorpusFile f{c.schema, c.provenance, {}};
  f.records.reserve(c.size());
  for (const Document& d : c.documents)
    f.records.push_back({d, {}, c.provenance});
  return f;
}

}  // namespace

Corpus read_corpus(const fs::path& path) {
  CorpusFile f = read_corpus_file(path);
  Corpus c{f.schema, f.provenance, {}};
  for (DocRecord& r : f.records) c.documents.push_back(std::move(r.doc));
  return c;
}

void write_corpus(const Corpus& corpus, const fs::path& path) {
  write_corpus_file(to_file(corpus), path);
}

std::string corpus_to_string(const Corpus& corpus) {
  std::string s = format_schema_line(corpus.schema, corpus.provenance) + "\n";
  for (const DocRecord& r : to_file(corpus).records)
    s += format_doc_line(r, corpus.schema) + "\n";
  return s;
}

std::uint64_t corpus_checksum(const Corpus& corpus) {
  return fnv1a(corpus_to_string(corpus));
}

// --- FUNSD --------------------------------------------------------------

namespace {

std::optional<std::pair<double, double>> png_size(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  unsigned char h[24];
  if (!in.read(reinterpret_cast<char*>(h), sizeof h)) return std::nullopt;
  static constexpr unsigned char kSig[8] = {0x89, 'P', 'N', 'G',
                                            0x0d, 0x0a, 0x1a, 0x0a};
  if (!std::equal(kSig, kSig + 8, h)) return std::nullopt;
  auto be32 = [&](int o) {
    return (std::uint32_t{h[o]} << 24) | (std::uint32_t{h[o + 1]} << 16) |
           (std::uint32_t{h[o + 2]} << 8) | std::uint32_t{h[o + 3]};
  };
  return std::pair<double, double>(be32(16), be32(20));
}

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

Document load_funsd_file(const fs::path& file, const fs::path& image_dir,
                         const EntitySchema& schema) {
  std::ifstream in(file);
  if (!in) throw Error("cannot open FUNSD annotation " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("corrupt FUNSD annotation " + file.string() + ": " + e.what());
  }

  struct RawWord {
    std::string text;
    double box[4];
  };
  std::vector<RawWord> words;
  std::vector<EntitySpan> blocks;
  double max_x = 1, max_y = 1;
  try {
    for (const json& block : j.at("form")) {
      const std::string label = block.at("label").get<std::string>();
      int ti = schema.index_of(label);
      if (ti < 0)
        throw Error("unknown FUNSD label '" + label + "' in " + file.string());
      const std::size_t first = words.size();
      for (const json& w : block.at("words")) {
        std::string text = trim(w.at("text").get<std::string>());
        if (text.empty()) continue;
        auto box = w.at("box").get<std::vector<double>>();
        if (box.size() != 4) throw Error("word box must have 4 values");
        max_x = std::max({max_x, box[0], box[2]});
        max_y = std::max({max_y, box[1], box[3]});
        words.push_back({std::move(text), {box[0], box[1], box[2], box[3]}});
      }
      if (words.size() > first) blocks.push_back({ti, first, words.size()});
    }
  } catch (const json::exception& e) {
    throw Error("corrupt FUNSD annotation " + file.string() + ": " + e.what());
  }

  Document doc;
  doc.id = file.stem().string();
  auto dims = png_size(image_dir / (doc.id + ".png"));
  doc.page_width = dims ? dims->first : max_x;
  doc.page_height = dims ? dims->second : max_y;

  auto norm = [](double v, double extent) {
    return std::clamp(v / extent, 0.0, 1.0);
  };
  for (const RawWord& w : words) {
    double x0 = w.box[0], x1 = w.box[2], y0 = w.box[1], y1 = w.box[3];
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    doc.tokens.push_back(
        {w.text,
         quantize6(BBox{norm(x0, doc.page_width), norm(y0, doc.page_height),
                        norm(x1, doc.page_width), norm(y1, doc.page_height)}),
         0});
  }
  // Blocks are contiguous in annotation order; reading-order sorting splits
  // a block wherever its lines interleave with another block.
  doc.gold_spans = std::move(blocks);
  doc = sort_reading_order(doc);
  return doc;
}

}  // namespace

Corpus load_funsd(const fs::path& path) {
  fs::path ann = path;
  fs::path img = path.parent_path() / "images";
  if (fs::is_directory(path / "annotations")) {
    ann = path / "annotations";
    img = path / "images";
  }
  if (!fs::is_directory(ann))
    throw Error("FUNSD path " + path.string() + " is not a directory");

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(ann))
    if (e.is_regular_file() && e.path().extension() == ".json")
      files.push_back(e.path());
  if (files.empty())
    throw Error("no annotation files found in " + ann.string());
  std::sort(files.begin(), files.end());

  Corpus c{EntitySchema("form", {"header", "question", "answer", "other"}),
           Provenance::human(),
           {}};
  for (const fs::path& f : files)
    c.documents.push_back(load_funsd_file(f, img, c.schema));
  return c;
}

namespace {

std::mutex& adapter_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, DatasetAdapter>& adapters() {
  static std::map<std::string, DatasetAdapter> m = {
      {"funsd", [](const fs::path& p) { return load_funsd(p); }},
      {"canonical", [](const fs::path& p) { return read_corpus(p); }},
  };
  return m;
}

}  // namespace

void register_dataset_adapter(const std::string& name, DatasetAdapter adapter) {
  std::lock_guard lock(adapter_mutex());
  adapters()[name] = std::move(adapter);
}

Corpus load_dataset(const std::string& name, const fs::path& path) {
  DatasetAdapter fn;
  {
    std::lock_guard lock(adapter_mutex());
    auto it = adapters().find(name);
    if (it == adapters().end())
      throw Error("no dataset adapter named '" + name + "'");
    fn = it->second;
  }
  return fn(path);
}

// --- Splitting ----------------------------------------------------------

Corpus strip_labels(const Corpus& corpus) {
  Corpus out = corpus;
  out.provenance = Provenance::unlabeled();
  for (Document& d : out.documents) d.gold_spans.clear();
  return out;
}

std::vector<SplitPart> split_corpus(const Corpus& corpus,
                                    const std::vector<std::size_t>& sizes,
                                    std::uint64_t seed,
                                    const std::vector<bool>& unlabeled) {
  std::size_t total = 0;
  for (std::size_t s : sizes) total += s;
  if (total > corpus.size())
    throw Error("split_corpus: requested " + std::to_string(total) +
                " documents from a corpus of " + std::to_string(corpus.size()));
  if (!unlabeled.empty() && unlabeled.size() != sizes.size())
    throw Error("split_corpus: unlabeled flags do not match part count");

  // Shuffle a canonical id order so the result is independent of input order.
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return corpus.documents[a].id < corpus.documents[b].id;
  });
  Rng rng(seed, "split");
  rng.shuffle(order);

  std::vector<SplitPart> parts;
  std::size_t at = 0;
  for (std::size_t p = 0; p < sizes.size(); ++p) {
    Corpus part{corpus.schema, corpus.provenance, {}};
    for (std::size_t k = 0; k < sizes[p]; ++k)
      part.documents.push_back(corpus.documents[order[at++]]);
    std::sort(part.documents.begin(), part.documents.end(),
              [](const Document& a, const Document& b) { return a.id < b.id; });
    SplitPart sp;
    if (!unlabeled.empty() && unlabeled[p]) {
      sp.sealed = part;
      sp.corpus = strip_labels(part);
    } else {
      sp.corpus = std::move(part);
    }
    parts.push_back(std::move(sp));
  }
  return parts;
}

}  // namespace nat
