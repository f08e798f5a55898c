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

#include "nat/value_formats.hpp"

#include <array>
#include <cctype>
#include <cstdio>

#include "nat/rng.hpp"

namespace nat {

namespace {

constexpr std::array<const char*, 12> kMonths = {
    "Jan", "Feb", "Mar", "Apr", "May", "Jun",
    "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

std::string two(int v) {
  char b[8];
  std::snprintf(b, sizeof b, "%02d", v % 100);
  return b;
}

std::string ordinal_suffix(int d) {
  if (d % 100 >= 11 && d % 100 <= 13) return "th";
  switch (d % 10) {
    case 1: return "st";
    case 2: return "nd";
    case 3: return "rd";
    default: return "th";
  }
}

// Reads up to `max_digits` digits (at least `min_digits`).
bool read_int(std::string_view s, std::size_t& at, int min_digits,
              int max_digits, int& out) {
  int n = 0, v = 0;
  while (at < s.size() && n < max_digits &&
         std::isdigit(static_cast<unsigned char>(s[at]))) {
    v = v * 10 + (s[at] - '0');
    ++at;
    ++n;
  }
  out = v;
  return n >= min_digits;
}

bool days_ok(const Date& d) {
  static constexpr int kDays[] = {31, 29, 31, 30, 31, 30,
                                  31, 31, 30, 31, 30, 31};
  return d.month >= 1 && d.month <= 12 && d.day >= 1 &&
         d.day <= kDays[d.month - 1];
}

}  // namespace

std::string format_date(const Date& d, std::string_view pattern) {
  std::string out;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (pattern[i] != '%' || i + 1 == pattern.size()) {
      out += pattern[i];
      continue;
    }
    switch (pattern[++i]) {
      case 'd': out += two(d.day); break;
      case 'e': out += std::to_string(d.day); break;
      case 'o': out += std::to_string(d.day) + ordinal_suffix(d.day); break;
      case 'm': out += two(d.month); break;
      case 'b': out += kMonths[d.month - 1]; break;
      case 'y': out += two(d.year); break;
      case 'Y': out += std::to_string(d.year); break;
      case '%': out += '%'; break;
      default: throw Error(std::string("bad date pattern directive %") +
                           pattern[i]);
    }
  }
  return out;
}

std::optional<Date> parse_date(std::string_view s, std::string_view pattern) {
  Date d;
  std::size_t at = 0;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (pattern[i] != '%' || i + 1 == pattern.size()) {
      if (at >= s.size() || s[at] != pattern[i]) return std::nullopt;
      ++at;
      continue;
    }
    int v = 0;
    switch (pattern[++i]) {
      case 'd':
      case 'e':
        if (!read_int(s, at, 1, 2, v)) return std::nullopt;
        d.day = v;
        break;
      case 'o': {
        if (!read_int(s, at, 1, 2, v)) return std::nullopt;
        d.day = v;
        std::string suf = ordinal_suffix(v);
        if (s.substr(at, 2) != suf) return std::nullopt;
        at += 2;
        break;
      }
      case 'm':
        if (!read_int(s, at, 1, 2, v)) return std::nullopt;
        d.month = v;
        break;
      case 'b': {
        bool hit = false;
        for (std::size_t m = 0; m < kMonths.size(); ++m) {
          if (s.substr(at, 3) == kMonths[m]) {
            d.month = static_cast<int>(m) + 1;
            at += 3;
            hit = true;
            break;
          }
        }
        if (!hit) return std::nullopt;
        break;
      }
      case 'y':
        if (!read_int(s, at, 2, 2, v)) return std::nullopt;
        d.year = v < 50 ? 2000 + v : 1900 + v;
        break;
      case 'Y':
        if (!read_int(s, at, 4, 4, v)) return std::nullopt;
        d.year = v;
        break;
      case '%':
        if (at >= s.size() || s[at] != '%') return std::nullopt;
        ++at;
        break;
      default:
        return std::nullopt;
    }
  }
  if (at != s.size() || !days_ok(d)) return std::nullopt;
  return d;
}

namespace {

struct AmountPattern {
  std::string prefix, suffix;
  bool grouped = false;
};

AmountPattern split_amount_pattern(std::string_view p) {
  auto b = p.find_first_of("#0");
  auto e = p.find_last_of("#0");
  if (b == std::string_view::npos) throw Error("bad amount pattern");
  AmountPattern out;
  out.prefix = std::string(p.substr(0, b));
  std::string_view num = p.substr(b, e - b + 1);
  out.suffix = std::string(p.substr(e + 1));
  out.grouped = num.find(',') != std::string_view::npos;
  return out;
}

}  // namespace

std::string format_amount(std::int64_t cents, std::string_view pattern) {
  AmountPattern ap = split_amount_pattern(pattern);
  const bool neg = cents < 0;
  if (neg) cents = -cents;
  std::string whole = std::to_string(cents / 100);
  if (ap.grouped) {
    std::string g;
    int k = 0;
    for (auto it = whole.rbegin(); it != whole.rend(); ++it) {
      if (k && k % 3 == 0) g += ',';
      g += *it;
      ++k;
    }
    whole.assign(g.rbegin(), g.rend());
  }
  return ap.prefix + (neg ? "-" : "") + whole + "." + two(cents % 100) +
         ap.suffix;
}

std::optional<std::int64_t> parse_amount(std::string_view s,
                                         std::string_view pattern) {
  AmountPattern ap = split_amount_pattern(pattern);
  if (s.size() < ap.prefix.size() + ap.suffix.size()) return std::nullopt;
  if (s.substr(0, ap.prefix.size()) != ap.prefix) return std::nullopt;
  if (s.substr(s.size() - ap.suffix.size()) != ap.suffix) return std::nullopt;
  std::string_view num =
      s.substr(ap.prefix.size(), s.size() - ap.prefix.size() - ap.suffix.size());
  bool neg = !num.empty() && num.front() == '-';
  if (neg) num.remove_prefix(1);
  auto dot = num.rfind('.');
  if (dot == std::string_view::npos || num.size() - dot != 3)
    return std::nullopt;
  std::int64_t whole = 0;
  int digits = 0;
  for (std::size_t i = 0; i < dot; ++i) {
    char c = num[i];
    if (c == ',') {
      if (!ap.grouped) return std::nullopt;
      continue;
    }
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    whole = whole * 10 + (c - '0');
    ++digits;
  }
  if (digits == 0) return std::nullopt;
  if (!std::isdigit(static_cast<unsigned char>(num[dot + 1])) ||
      !std::isdigit(static_cast<unsigned char>(num[dot + 2])))
    return std::nullopt;
  std::int64_t cents =
      whole * 100 + (num[dot + 1] - '0') * 10 + (num[dot + 2] - '0');
  if (neg) cents = -cents;
  // Grouped patterns require canonical grouping so rendering round-trips.
  if (ap.grouped && format_amount(cents, pattern) != s) return std::nullopt;
  return cents;
}

std::optional<ParsedValue> parse_value(std::string_view text,
                                       const ValueFormat& fmt) {
  ParsedValue v;
  v.kind = fmt.kind;
  if (fmt.kind == "date") {
    auto d = parse_date(text, fmt.pattern);
    if (!d) return std::nullopt;
    v.date = *d;
    return v;
  }
  if (fmt.kind == "amount") {
    auto c = parse_amount(text, fmt.pattern);
    if (!c) return std::nullopt;
    v.cents = *c;
    return v;
  }
  throw Error("unknown value format kind '" + fmt.kind + "'");
}

std::string render_value(const ParsedValue& v, const ValueFormat& fmt) {
  if (fmt.kind != v.kind)
    throw Error("cannot render a " + v.kind + " value as " + fmt.kind);
  if (fmt.kind == "date") return format_date(v.date, fmt.pattern);
  return format_amount(v.cents, fmt.pattern);
}

}  // namespace nat
