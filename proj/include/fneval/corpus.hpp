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

// Data model and text file IO for queries, items, runs and judgments.
//
// Run file:       query_id item_id rank score run_tag
// Judgment file:  query_id item_id label source        (label in {0,1})
// Query file:     query_id<TAB>split<TAB>caption text   (split in {train,test})
// Item file:      item_id                               (one per line)
//
// Lines starting with '#' and blank lines are ignored everywhere.

#pragma once

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "fneval/common.hpp"

namespace fneval {

enum class Split { kTrain, kTest };

inline std::string_view to_string(Split split) { return split == Split::kTrain ? "train" : "test"; }

struct Query {
  QueryId id;
  Split split = Split::kTest;
  std::string text;
};

struct RunEntry {
  ItemId item;
  double score = 0.0;
  int rank = 0;
};

struct RankedRun {
  std::string system;
  std::map<QueryId, std::vector<RunEntry>> entries;  // each list ordered by rank
  std::vector<std::string> warnings;

  std::vector<ItemId> ranked_items(const QueryId& query) const {
    std::vector<ItemId> items;
    if (auto it = entries.find(query); it != entries.end()) {
      items.reserve(it->second.size());
      for (const auto& entry : it->second) items.push_back(entry.item);
    }
    return items;
  }

  std::size_t size() const {
    std::size_t total = 0;
    for (const auto& [query, list] : entries) total += list.size();
    return total;
  }
};

struct Judgment {
  bool relevant = false;
  std::string source;
};

inline constexpr std::string_view kOriginalSource = "original";
inline constexpr std::string_view kMergedSource = "merged";
inline constexpr std::string_view kPooledPrefix = "pooled:";

// Systems encoded in a `pooled:<sys>[,<sys>...]` source tag; empty otherwise.
inline std::vector<std::string> pooled_systems(std::string_view source) {
  if (source.substr(0, kPooledPrefix.size()) != kPooledPrefix) return {};
  std::vector<std::string> systems;
  for (auto& part : split(source.substr(kPooledPrefix.size()), ',')) {
    if (!part.empty()) systems.push_back(std::move(part));
  }
  return systems;
}

inline std::string pooled_source(const std::set<std::string>& systems) {
  std::string source(kPooledPrefix);
  bool first = true;
  for (const auto& system : systems) {
    if (!first) source += ',';
    source += system;
    first = false;
  }
  return source;
}

// Resolved binary relevance labels. Absent pairs are unjudged.
class JudgmentSet {
 public:
  using QueryLabels = std::map<ItemId, Judgment>;

  // Adds a label; re-adding the same label is a no-op, a different label throws.
  void add(const QueryId& query, const ItemId& item, bool relevant, std::string source) {
    auto& labels = labels_[query];
    auto [it, inserted] = labels.try_emplace(item, Judgment{relevant, std::move(source)});
    if (!inserted && it->second.relevant != relevant) {
      throw Error(ErrorKind::kConflictingLabel,
                  "conflicting labels for (" + query.str() + ", " + item.str() + ")");
    }
  }

  // Replaces any existing label.
  void set(const QueryId& query, const ItemId& item, Judgment judgment) {
    labels_[query][item] = std::move(judgment);
  }

  const Judgment* find(const QueryId& query, const ItemId& item) const {
    auto q = labels_.find(query);
    if (q == labels_.end()) return nullptr;
    auto it = q->second.find(item);
    return it == q->second.end() ? nullptr : &it->second;
  }

  bool is_relevant(const QueryId& query, const ItemId& item) const {
    const Judgment* judgment = find(query, item);
    return judgment != nullptr && judgment->relevant;
  }

  bool has_query(const QueryId& query) const { return labels_.contains(query); }

  // Relevant items for `query`, sorted.
  std::vector<ItemId> positives(const QueryId& query) const {
    std::vector<ItemId> out;
    if (auto q = labels_.find(query); q != labels_.end()) {
      for (const auto& [item, judgment] : q->second) {
        if (judgment.relevant) out.push_back(item);
      }
    }
    return out;
  }

  std::vector<QueryId> queries() const {
    std::vector<QueryId> out;
    out.reserve(labels_.size());
    for (const auto& [query, labels] : labels_) out.push_back(query);
    return out;
  }

  std::size_t size() const {
    std::size_t total = 0;
    for (const auto& [query, labels] : labels_) total += labels.size();
    return total;
  }

  std::size_t num_relevant() const {
    std::size_t total = 0;
    for (const auto& [query, labels] : labels_) {
      for (const auto& [item, judgment] : labels) total += judgment.relevant ? 1 : 0;
    }
    return total;
  }

  const std::map<QueryId, QueryLabels>& by_query() const noexcept { return labels_; }

  friend bool operator==(const JudgmentSet& a, const JudgmentSet& b) {
    if (a.labels_.size() != b.labels_.size()) return false;
    for (auto ia = a.labels_.begin(), ib = b.labels_.begin(); ia != a.labels_.end(); ++ia, ++ib) {
      if (ia->first != ib->first || ia->second.size() != ib->second.size()) return false;
      for (auto ja = ia->second.begin(), jb = ib->second.begin(); ja != ia->second.end(); ++ja, ++jb) {
        if (ja->first != jb->first || ja->second.relevant != jb->second.relevant ||
            ja->second.source != jb->second.source) {
          return false;
        }
      }
    }
    return true;
  }

 private:
  std::map<QueryId, QueryLabels> labels_;
};

struct Collection {
  std::set<ItemId> items;
  std::map<QueryId, Query> queries;

  // Throws UnknownReference for the first id not present in the collection.
  void validate(const RankedRun& run) const {
    for (const auto& [query, list] : run.entries) {
      check_query(query);
      for (const auto& entry : list) check_item(entry.item);
    }
  }

  void validate(const JudgmentSet& judgments) const {
    for (const auto& [query, labels] : judgments.by_query()) {
      check_query(query);
      for (const auto& [item, judgment] : labels) check_item(item);
    }
  }

 private:
  void check_query(const QueryId& query) const {
    if (!queries.empty() && !queries.contains(query)) {
      throw Error(ErrorKind::kUnknownReference, "query not in collection: " + query.str());
    }
  }
  void check_item(const ItemId& item) const {
    if (!items.empty() && !items.contains(item)) {
      throw Error(ErrorKind::kUnknownReference, "item not in collection: " + item.str());
    }
  }
};

namespace detail {

inline bool is_skippable(std::string_view line) {
  auto first = line.find_first_not_of(" \t\r");
  return first == std::string_view::npos || line[first] == '#';
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view text) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

// strtod handles the forms from_chars<double> may reject on older toolchains.
inline std::optional<double> parse_real(const std::string& text) {
  if (text.empty()) return std::nullopt;
  char* end = nullptr;
  double value = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size()) return std::nullopt;
  return value;
}

}  // namespace detail

// Parses a run. Strict mode rejects rank gaps and duplicate ranks; duplicate
// (query, item) pairs are always rejected. Entries are ordered by the rank
// column, never by score.
inline RankedRun parse_run(std::istream& in, bool strict = true) {
  RankedRun run;
  std::map<QueryId, std::set<ItemId>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_skippable(line)) continue;
    auto fields = split_ws(line);
    if (fields.size() != 5) {
      throw Error(ErrorKind::kMalformedLine, "expected 'query_id item_id rank score run_tag'", line_no);
    }
    auto rank = detail::parse_number<int>(fields[2]);
    auto score = detail::parse_real(fields[3]);
    if (!rank || *rank < 1) throw Error(ErrorKind::kMalformedLine, "rank must be a positive integer", line_no);
    if (!score) throw Error(ErrorKind::kMalformedLine, "score must be a real number", line_no);
    if (run.system.empty()) {
      run.system = fields[4];
    } else if (run.system != fields[4]) {
      throw Error(ErrorKind::kMixedRunTags, "run tag '" + fields[4] + "' differs from '" + run.system + "'",
                  line_no);
    }
    QueryId query(fields[0]);
    ItemId item(fields[1]);
    if (!seen[query].insert(item).second) {
      throw Error(ErrorKind::kDuplicateEntry, "duplicate (" + fields[0] + ", " + fields[1] + ")", line_no);
    }
    run.entries[query].push_back(RunEntry{std::move(item), *score, *rank});
  }

  for (auto& [query, list] : run.entries) {
    std::stable_sort(list.begin(), list.end(), [](const RunEntry& a, const RunEntry& b) { return a.rank < b.rank; });
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (list[i].rank != static_cast<int>(i) + 1) {
        std::string message = "ranks for query " + query.str() + " are not 1..n contiguous";
        if (strict) throw Error(ErrorKind::kRankGap, message);
        run.warnings.push_back(message);
        break;
      }
    }
    for (std::size_t i = 1; i < list.size(); ++i) {
      if (list[i].score > list[i - 1].score) {
        run.warnings.push_back("scores increase with rank for query " + query.str());
        break;
      }
    }
  }
  return run;
}

inline RankedRun parse_run(const std::filesystem::path& path, bool strict = true) {
  auto in = detail::open_input(path);
  return parse_run(in, strict);
}

inline JudgmentSet parse_judgments(std::istream& in) {
  JudgmentSet judgments;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_skippable(line)) continue;
    auto fields = split_ws(line);
    if (fields.size() != 4) {
      throw Error(ErrorKind::kMalformedLine, "expected 'query_id item_id label source'", line_no);
    }
    if (fields[2] != "0" && fields[2] != "1") {
      throw Error(ErrorKind::kInvalidLabel, "label must be 0 or 1, got '" + fields[2] + "'", line_no);
    }
    try {
      judgments.add(QueryId(fields[0]), ItemId(fields[1]), fields[2] == "1", fields[3]);
    } catch (const Error& e) {
      throw Error(e.kind(), "conflicting labels for (" + fields[0] + ", " + fields[1] + ")", line_no);
    }
  }
  return judgments;
}

inline JudgmentSet parse_judgments(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_judgments(in);
}

inline std::vector<Query> parse_queries(std::istream& in) {
  std::vector<Query> queries;
  std::set<QueryId> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::is_skippable(line)) continue;
    auto first_tab = line.find('\t');
    auto second_tab = first_tab == std::string::npos ? std::string::npos : line.find('\t', first_tab + 1);
    if (second_tab == std::string::npos) {
      throw Error(ErrorKind::kMalformedLine, "expected 'query_id<TAB>split<TAB>caption'", line_no);
    }
    Query query;
    query.id = QueryId(line.substr(0, first_tab));
    std::string split_name = line.substr(first_tab + 1, second_tab - first_tab - 1);
    if (split_name == "train") {
      query.split = Split::kTrain;
    } else if (split_name == "test") {
      query.split = Split::kTest;
    } else {
      throw Error(ErrorKind::kMalformedLine, "split must be train or test", line_no);
    }
    query.text = line.substr(second_tab + 1);
    if (query.id.empty() || split_ws(query.id.str()).size() != 1) {
      throw Error(ErrorKind::kMalformedLine, "query id must be a non-empty token", line_no);
    }
    if (!seen.insert(query.id).second) {
      throw Error(ErrorKind::kDuplicateEntry, "duplicate query " + query.id.str(), line_no);
    }
    queries.push_back(std::move(query));
  }
  return queries;
}

inline std::vector<Query> parse_queries(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_queries(in);
}

inline std::set<ItemId> parse_items(std::istream& in) {
  std::set<ItemId> items;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_skippable(line)) continue;
    auto fields = split_ws(line);
    if (fields.size() != 1) throw Error(ErrorKind::kMalformedLine, "expected one item id", line_no);
    if (!items.insert(ItemId(fields[0])).second) {
      throw Error(ErrorKind::kDuplicateEntry, "duplicate item " + fields[0], line_no);
    }
  }
  return items;
}

inline Collection make_collection(std::vector<Query> queries, std::set<ItemId> items = {}) {
  Collection collection;
  collection.items = std::move(items);
  for (auto& query : queries) {
    QueryId id = query.id;
    collection.queries.emplace(std::move(id), std::move(query));
  }
  return collection;
}

// Canonical form: sorted by query then rank.
inline void write_run(std::ostream& out, const RankedRun& run) {
  for (const auto& [query, list] : run.entries) {
    for (const auto& entry : list) {
      out << query.str() << ' ' << entry.item.str() << ' ' << entry.rank << ' ' << format_double(entry.score) << ' '
          << run.system << '\n';
    }
  }
}

inline void write_judgments(std::ostream& out, const JudgmentSet& judgments) {
  for (const auto& [query, labels] : judgments.by_query()) {
    for (const auto& [item, judgment] : labels) {
      out << query.str() << ' ' << item.str() << ' ' << (judgment.relevant ? 1 : 0) << ' ' << judgment.source << '\n';
    }
  }
}

inline void write_queries(std::ostream& out, const std::vector<Query>& queries) {
  for (const auto& query : queries) {
    out << query.id.str() << '\t' << to_string(query.split) << '\t' << query.text << '\n';
  }
}

enum class MergePolicy { kRelevantWins, kErrorOnConflict };

// Union of two judgment sets. Pairs labeled in both take source "merged";
// pairs labeled in one keep their source.
inline JudgmentSet merge_judgments(const JudgmentSet& a, const JudgmentSet& b,
                                   MergePolicy policy = MergePolicy::kRelevantWins) {
  JudgmentSet merged = a;
  for (const auto& [query, labels] : b.by_query()) {
    for (const auto& [item, judgment] : labels) {
      const Judgment* existing = a.find(query, item);
      if (existing == nullptr) {
        merged.set(query, item, judgment);
        continue;
      }
      if (existing->relevant != judgment.relevant && policy == MergePolicy::kErrorOnConflict) {
        throw Error(ErrorKind::kConflictingLabel,
                    "conflicting labels for (" + query.str() + ", " + item.str() + ")");
      }
      merged.set(query, item, Judgment{existing->relevant || judgment.relevant, std::string(kMergedSource)});
    }
  }
  return merged;
}

}  // namespace fneval
