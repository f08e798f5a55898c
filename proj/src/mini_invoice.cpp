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

#include "nat/mini_invoice.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nat/value_formats.hpp"

namespace nat {

const std::vector<std::string>& mini_invoice_entity_types() {
  static const std::vector<std::string> kTypes = {
      "vendor_name",           "invoice_number",
      "purchase_date",         "total_billed_amount",
      "line_item_description", "line_item_amount"};
  return kTypes;
}

const InvoicePhrases& invoice_phrases() {
  static const InvoicePhrases kPhrases = {
      {"Total", "Tot.", "Amount", "Total Amount", "Amount Due", "Grand Total"},
      {"Date:", "Invoice Date:", "Dated", "Date of Purchase:"},
      {"Invoice No:", "Invoice #", "Inv. No.", "Bill No:"},
      {"%m/%d/%y", "%m-%d-%y", "%o %b, %y", "%Y-%m-%d", "%b %e, %Y"},
      {"$#,##0.00", "0.00", "USD #,##0.00"},
  };
  return kPhrases;
}

namespace {

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

std::string make_word(Rng& rng, int syllables) {
  static const std::vector<std::string> kSyl = {
      "ka", "lo", "mer", "tan", "vi", "sol", "bra", "den", "ri", "xo",
      "pel", "qua", "ston", "fi", "gor", "hal", "ju", "nex", "or", "zen",
      "mar", "tek", "lu", "cor", "ven", "dra", "sil", "bo", "ne", "wel"};
  std::string w;
  for (int i = 0; i < syllables; ++i) w += rng.pick(kSyl);
  w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
  return w;
}

struct Template {
  double vendor_x, vendor_y, vendor_h;
  double meta_x, meta_y;
  bool date_first;
  double table_y;
  double qty_x, price_x, amount_x;
  double summary_key_x;
  std::size_t total_key, date_key, invoice_key;
  std::size_t date_pattern, amount_pattern;
  std::string desc_header, amount_header;
  std::string invoice_prefix;
  std::string footer;
  std::string vendor_suffix;
};

Template make_template(Rng rng) {
  const InvoicePhrases& ph = invoice_phrases();
  Template t;
  static const double kVendorX[] = {0.06, 0.35, 0.58};
  t.vendor_x = kVendorX[rng.index(3)];
  t.vendor_y = rng.uniform(0.04, 0.07);
  t.vendor_h = rng.uniform(0.024, 0.034);
  t.meta_x = rng.bernoulli(0.5) ? 0.06 : 0.55;
  t.meta_y = rng.uniform(0.17, 0.23);
  t.date_first = rng.bernoulli(0.5);
  t.table_y = rng.uniform(0.31, 0.37);
  t.qty_x = rng.uniform(0.44, 0.49);
  t.price_x = rng.uniform(0.56, 0.62);
  t.amount_x = rng.uniform(0.74, 0.80);
  t.summary_key_x = rng.uniform(0.48, 0.58);
  t.total_key = rng.index(ph.total_keys.size());
  t.date_key = rng.index(ph.date_keys.size());
  t.invoice_key = rng.index(ph.invoice_keys.size());
  t.date_pattern = rng.index(ph.date_patterns.size());
  t.amount_pattern = rng.index(ph.amount_patterns.size());
  static const std::vector<std::string> kDesc = {"Description", "Item",
                                                 "Details", "Product"};
  static const std::vector<std::string> kAmt = {"Amount", "Line Total",
                                                "Ext. Price", "Sum"};
  t.desc_header = rng.pick(kDesc);
  t.amount_header = rng.pick(kAmt);
  static const std::vector<std::string> kPrefix = {"INV-", "#", "", "N"};
  t.invoice_prefix = rng.pick(kPrefix);
  static const std::vector<std::string> kFooter = {
      "Thank you for your business", "Payment due within 30 days",
      "Please remit payment to the address above"};
  t.footer = rng.pick(kFooter);
  static const std::vector<std::string> kSuffix = {"Inc.", "LLC", "Co.",
                                                   "Ltd", ""};
  t.vendor_suffix = rng.pick(kSuffix);
  return t;
}

class PageWriter {
 public:
  PageWriter(Document& doc, const EntitySchema& schema)
      : doc_(doc), schema_(schema),
        aspect_(doc.page_height / doc.page_width) {}

  double text_width(const std::string& phrase, double h) const {
    double cw = 0.5 * h * aspect_;
    double w = 0;
    auto words = split_words(phrase);
    for (std::size_t i = 0; i < words.size(); ++i)
      w += cw * static_cast<double>(words[i].size()) + (i ? cw : 0);
    return w;
  }

  /// Places `phrase` left-aligned at (x, y); returns [first, last) tokens.
  std::pair<std::size_t, std::size_t> put(const std::string& phrase, double x,
                                          double y, double h) {
    const double cw = 0.5 * h * aspect_;
    std::size_t first = doc_.tokens.size();
    for (const std::string& w : split_words(phrase)) {
      double x1 = x + cw * static_cast<double>(w.size());
      BBox b{std::clamp(x, 0.0, 1.0), std::clamp(y, 0.0, 1.0),
             std::clamp(x1, 0.0, 1.0), std::clamp(y + h, 0.0, 1.0)};
      doc_.tokens.push_back({w, quantize6(b), 0});
      x = x1 + cw;
    }
    return {first, doc_.tokens.size()};
  }

  std::pair<std::size_t, std::size_t> put_right(const std::string& phrase,
                                                double right, double y,
                                                double h) {
    return put(phrase, right - text_width(phrase, h), y, h);
  }

  void label(const std::string& type, std::pair<std::size_t, std::size_t> r) {
    int ti = schema_.index_of(type);
    if (ti < 0 || r.first == r.second) return;
    doc_.gold_spans.push_back({ti, r.first, r.second});
  }

 private:
  Document& doc_;
  const EntitySchema& schema_;
  double aspect_;
};

}  // namespace

Corpus generate_mini_invoices(const MiniInvoiceConfig& cfg,
                              std::uint64_t seed) {
  if (cfg.vendor_templates < 1)
    throw Error("MiniInvoiceConfig: vendor_templates must be >= 1");
  if (cfg.vendor_pool < 1 || cfg.item_pool < 1 || cfg.max_line_items < 1)
    throw Error("MiniInvoiceConfig: vocabulary pools must be non-empty");
  std::vector<std::string> types = cfg.entity_types;
  if (types.empty()) types = mini_invoice_entity_types();
  for (const std::string& t : types)
    if (std::find(mini_invoice_entity_types().begin(),
                  mini_invoice_entity_types().end(),
                  t) == mini_invoice_entity_types().end())
      throw Error("MiniInvoiceConfig: unknown entity type '" + t + "'");

  Corpus corpus{EntitySchema("invoice", types), Provenance::human(), {}};
  const InvoicePhrases& ph = invoice_phrases();

  std::vector<Template> templates;
  for (std::size_t k = 0; k < cfg.vendor_templates; ++k)
    templates.push_back(make_template(Rng(seed, "template/" + std::to_string(k))));

  Rng vocab(seed, "vocab");
  std::vector<std::string> vendor_words, item_words;
  for (std::size_t i = 0; i < cfg.vendor_pool; ++i)
    vendor_words.push_back(make_word(vocab, 2 + static_cast<int>(vocab.index(2))));
  static const std::vector<std::string> kItems = {
      "Widget", "Bolt",   "Cable", "Service", "Repair", "Paper", "Toner",
      "Labor",  "Filter", "Valve", "License", "Support", "Shipping", "Panel"};
  for (std::size_t i = 0; i < cfg.item_pool; ++i)
    item_words.push_back(i < kItems.size() ? kItems[i]
                                           : make_word(vocab, 2));

  const double body_h = 0.013;
  for (std::size_t n = 0; n < cfg.n_documents; ++n) {
    const std::size_t num = cfg.id_offset + n;
    Rng rng(seed, "doc/" + std::to_string(num));
    const Template& t = templates[rng.index(templates.size())];

    Document doc;
    char idbuf[64];
    std::snprintf(idbuf, sizeof idbuf, "%s%06zu", cfg.id_prefix.c_str(), num);
    doc.id = idbuf;
    doc.page_width = cfg.page_width;
    doc.page_height = cfg.page_height;
    PageWriter pw(doc, corpus.schema);

    const double jx = rng.uniform(-cfg.layout_jitter, cfg.layout_jitter);
    const double jy = rng.uniform(-cfg.layout_jitter, cfg.layout_jitter);
    auto jit = [&] {
      return rng.uniform(-0.5 * cfg.layout_jitter, 0.5 * cfg.layout_jitter);
    };

    auto vary = [&](std::size_t fixed, std::size_t n_options) {
      return rng.bernoulli(cfg.key_phrase_variation) ? rng.index(n_options)
                                                     : fixed;
    };
    auto vary_fmt = [&](std::size_t fixed, std::size_t n_options) {
      return rng.bernoulli(cfg.format_variation) ? rng.index(n_options)
                                                 : fixed;
    };
    const std::string date_pat =
        ph.date_patterns[vary_fmt(t.date_pattern, ph.date_patterns.size())];
    const std::string amt_pat =
        ph.amount_patterns[vary_fmt(t.amount_pattern,
                                    ph.amount_patterns.size())];

    // Vendor block.
    std::string vendor = rng.pick(vendor_words);
    if (rng.bernoulli(0.5)) vendor += " " + rng.pick(vendor_words);
    if (!t.vendor_suffix.empty() && rng.bernoulli(0.7))
      vendor += " " + t.vendor_suffix;
    double vx = t.vendor_x + jx + jit();
    double vy = t.vendor_y + jy + jit();
    pw.label("vendor_name", pw.put(vendor, vx, vy, t.vendor_h));
    double y = vy + t.vendor_h + 0.012;
    pw.put(std::to_string(100 + rng.index(9900)) + " " +
               rng.pick(vendor_words) + " St",
           vx, y, body_h);
    y += 0.018;
    pw.put(rng.pick(vendor_words) + ", CA " +
               std::to_string(90000 + rng.index(9999)),
           vx, y, body_h);
    y += 0.018;
    pw.put("Tel: 555-" + std::to_string(1000 + rng.index(9000)), vx, y,
           body_h);

    // Invoice meta block.
    const double mx = t.meta_x + jx + jit();
    double my = std::max(t.meta_y + jy + jit(), y + 0.03);
    Date date{1990 + static_cast<int>(rng.index(35)),
              1 + static_cast<int>(rng.index(12)),
              1 + static_cast<int>(rng.index(28))};
    auto put_invoice_no = [&] {
      if (rng.bernoulli(cfg.field_drop)) return;
      auto key = ph.invoice_keys[vary(t.invoice_key, ph.invoice_keys.size())];
      auto kr = pw.put(key, mx, my, body_h);
      double kx = doc.tokens[kr.second - 1].bbox.x1 + 0.015;
      pw.label("invoice_number",
               pw.put(t.invoice_prefix + std::to_string(10000 + rng.index(90000)),
                      kx, my, body_h));
      my += 0.022;
    };
    auto put_date = [&] {
      auto key = ph.date_keys[vary(t.date_key, ph.date_keys.size())];
      auto kr = pw.put(key, mx, my, body_h);
      double kx = doc.tokens[kr.second - 1].bbox.x1 + 0.015;
      pw.label("purchase_date", pw.put(format_date(date, date_pat), kx, my,
                                       body_h));
      my += 0.022;
    };
    if (t.date_first) {
      put_date();
      put_invoice_no();
    } else {
      put_invoice_no();
      put_date();
    }

    // Line-item table.
    const double tx = 0.06 + jx;
    double ty = std::max(t.table_y + jy + jit(), my + 0.03);
    const double qx = t.qty_x + jx, px = t.price_x + jx, ax = t.amount_x + jx;
    pw.put(t.desc_header, tx, ty, body_h);
    pw.put_right("Qty", qx, ty, body_h);
    pw.put_right("Price", px, ty, body_h);
    pw.put_right(t.amount_header, ax + 0.08, ty, body_h);
    ty += 0.03;
    std::int64_t subtotal = 0;
    const std::size_t n_items = 1 + rng.index(cfg.max_line_items);
    for (std::size_t i = 0; i < n_items; ++i) {
      std::string desc = rng.pick(item_words);
      std::size_t extra = rng.index(3);
      for (std::size_t k = 0; k < extra; ++k) desc += " " + rng.pick(item_words);
      const int qty = 1 + static_cast<int>(rng.index(9));
      const std::int64_t price = 100 + static_cast<std::int64_t>(rng.index(20000));
      const std::int64_t amount = qty * price;
      subtotal += amount;
      pw.label("line_item_description", pw.put(desc, tx, ty, body_h));
      pw.put_right(std::to_string(qty), qx, ty, body_h);
      pw.put_right(format_amount(price, "0.00"), px, ty, body_h);
      pw.label("line_item_amount",
               pw.put_right(format_amount(amount, amt_pat), ax + 0.08, ty,
                            body_h));
      ty += 0.025;
    }

    // Summary block.
    const std::int64_t tax =
        static_cast<std::int64_t>(std::llround(subtotal * rng.uniform(0.05, 0.1)));
    double sy = ty + 0.035;
    const double kx = t.summary_key_x + jx;
    pw.put("Subtotal", kx, sy, body_h);
    pw.put_right(format_amount(subtotal, amt_pat), ax + 0.08, sy, body_h);
    sy += 0.022;
    pw.put("Tax", kx, sy, body_h);
    pw.put_right(format_amount(tax, amt_pat), ax + 0.08, sy, body_h);
    sy += 0.022;
    pw.put(ph.total_keys[vary(t.total_key, ph.total_keys.size())], kx, sy,
           body_h);
    pw.label("total_billed_amount",
             pw.put_right(format_amount(subtotal + tax, amt_pat), ax + 0.08,
                          sy, body_h));

    pw.put(t.footer, 0.06 + jx, 0.93 + jy + jit(), body_h);

    corpus.documents.push_back(sort_reading_order(doc));
  }
  return corpus;
}

}  // namespace nat
