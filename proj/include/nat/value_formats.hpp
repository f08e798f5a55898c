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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nat {

struct Date {
  int year = 2000, month = 1, day = 1;
  bool operator==(const Date&) const = default;
};

// Date patterns are strftime-like:
//   %d  day, two digits           %e  day, no padding
//   %o  ordinal day ("19th")      %m  month, two digits
//   %b  month abbreviation        %y  two-digit year
//   %Y  four-digit year           %%  literal percent
// Anything else is literal. Example: "%o %b, %y" renders "19th Nov, 90".

std::string format_date(const Date& d, std::string_view pattern);
/// Two-digit years 50..99 map to the 1900s, 00..49 to the 2000s.
std::optional<Date> parse_date(std::string_view text, std::string_view pattern);

// Amount patterns: literal prefix and suffix around one number field,
//   "#,##0.00"  thousands-grouped, two decimals
//   "0.00"      ungrouped, two decimals
// Example: "USD #,##0.00" renders "USD 1,234.50".

std::string format_amount(std::int64_t cents, std::string_view pattern);
std::optional<std::int64_t> parse_amount(std::string_view text,
                                         std::string_view pattern);

/// A typed value format: "date" or "amount" plus its pattern.
struct ValueFormat {
  std::string kind;
  std::string pattern;
  bool operator==(const ValueFormat&) const = default;
};

/// Canonical value carried between formats.
struct ParsedValue {
  std::string kind;
  Date date;
  std::int64_t cents = 0;
};

std::optional<ParsedValue> parse_value(std::string_view text,
                                       const ValueFormat& fmt);
std::string render_value(const ParsedValue& v, const ValueFormat& fmt);

}  // namespace nat
