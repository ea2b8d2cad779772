/*
 * Copyright 2026 The fneval Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <compare>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fneval {

enum class ErrorKind {
  kMalformedLine,
  kDuplicateEntry,
  kRankGap,
  kMixedRunTags,
  kInvalidLabel,
  kConflictingLabel,
  kNoKnownPositive,
  kEmptyIntersection,
  kMissingProvenance,
  kUnknownReference,
  kInvalidArgument,
  kIo,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kMalformedLine: return "MalformedLine";
    case ErrorKind::kDuplicateEntry: return "DuplicateEntry";
    case ErrorKind::kRankGap: return "RankGap";
    case ErrorKind::kMixedRunTags: return "MixedRunTags";
    case ErrorKind::kInvalidLabel: return "InvalidLabel";
    case ErrorKind::kConflictingLabel: return "ConflictingLabel";
    case ErrorKind::kNoKnownPositive: return "NoKnownPositive";
    case ErrorKind::kEmptyIntersection: return "EmptyIntersection";
    case ErrorKind::kMissingProvenance: return "MissingProvenance";
    case ErrorKind::kUnknownReference: return "UnknownReference";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kIo: return "Io";
  }
  return "Unknown";
}

// Every failure raised by the library. `line` is 1-based, 0 when not tied
// to an input line.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::size_t line = 0)
      : std::runtime_error(format(kind, message, line)), kind_(kind), line_(line), message_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& message() const noexcept { return message_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(ErrorKind kind, const std::string& message, std::size_t line) {
    std::string out(to_string(kind));
    if (line > 0) out += " at line " + std::to_string(line);
    out += ": " + message;
    return out;
  }

  ErrorKind kind_;
  std::size_t line_;
  std::string message_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(ErrorKind::kInvalidArgument, message);
}

// Opaque identifier token. Tag keeps query and item ids from mixing.
template <typename Tag>
class Id {
 public:
  Id() = default;
  explicit Id(std::string value) : value_(std::move(value)) {}

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  friend auto operator<=>(const Id&, const Id&) = default;
  friend bool operator==(const Id&, const Id&) = default;

 private:
  std::string value_;
};

using QueryId = Id<struct QueryTag>;
using ItemId = Id<struct ItemTag>;

// A caption-video pair.
struct PairKey {
  QueryId query;
  ItemId item;

  friend auto operator<=>(const PairKey&, const PairKey&) = default;
  friend bool operator==(const PairKey&, const PairKey&) = default;
};

// Stable textual pair identifier used by label logs and the HTTP API.
inline std::string pair_id(const PairKey& pair) { return pair.query.str() + "|" + pair.item.str(); }

inline std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) fields.emplace_back(line.substr(start, i - start));
  }
  return fields;
}

inline std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == sep) {
      parts.emplace_back(text.substr(start, i - start));
      start = i + 1;
    }
  }
  return parts;
}

// Shortest decimal text that round-trips the double.
inline std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10) << value;
  std::string text = out.str();
  for (int precision = 1; precision < std::numeric_limits<double>::max_digits10; ++precision) {
    std::ostringstream trial;
    trial << std::setprecision(precision) << value;
    if (std::stod(trial.str()) == value) return trial.str();
  }
  return text;
}

// Three significant figures, matching "67.4", "0.800", "25.0".
inline std::string format_sig3(double value) {
  if (value == 0.0) return "0.0";
  int magnitude = static_cast<int>(std::floor(std::log10(std::fabs(value))));
  int decimals = std::max(0, 2 - magnitude);
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", decimals, value);
  return buffer;
}

}  // namespace fneval

template <typename Tag>
struct std::hash<fneval::Id<Tag>> {
  std::size_t operator()(const fneval::Id<Tag>& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};

template <>
struct std::hash<fneval::PairKey> {
  std::size_t operator()(const fneval::PairKey& pair) const noexcept {
    std::size_t h = std::hash<std::string>{}(pair.query.str());
    return h ^ (std::hash<std::string>{}(pair.item.str()) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  }
};
