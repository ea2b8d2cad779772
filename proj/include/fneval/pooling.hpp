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

// System pooling and multi-rater label resolution.
//
// A pool is the union of every run's top-`depth` pairs minus the pairs the
// seed judgments already label. Raters label each pair once; a sampled
// fraction gets a second label, and a disagreeing second label triggers a
// third. Resolution is a strict majority over non-escalated labels.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "fneval/common.hpp"
#include "fneval/corpus.hpp"
#include "fneval/rng.hpp"
#include "json.hpp"

namespace fneval {

inline constexpr int kDefaultPoolDepth = 10;
inline constexpr double kDefaultDoubleLabelFraction = 0.10;
inline constexpr std::string_view kPoolRunTag = "POOL";

struct Pool {
  std::vector<PairKey> pairs;  // sorted (query, item)
  int depth = kDefaultPoolDepth;
  std::set<std::string> contributing_systems;
  std::size_t excluded = 0;  // distinct top-depth pairs already labeled in the seed
  // Systems whose top-depth contained the pair at build time.
  std::map<PairKey, std::set<std::string>> attribution;
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return pairs.size(); }
};

inline Pool build_pool(std::span<const RankedRun> runs, const JudgmentSet& seed, int depth = kDefaultPoolDepth) {
  require(depth >= 1, "pool depth must be >= 1");
  require(!runs.empty(), "at least one run is required to build a pool");

  Pool pool;
  pool.depth = depth;
  std::set<PairKey> skipped;
  for (const auto& run : runs) {
    pool.contributing_systems.insert(run.system);
    for (const auto& [query, list] : run.entries) {
      std::size_t limit = std::min<std::size_t>(static_cast<std::size_t>(depth), list.size());
      for (std::size_t i = 0; i < limit; ++i) {
        PairKey pair{query, list[i].item};
        if (seed.find(pair.query, pair.item) != nullptr) {
          skipped.insert(pair);
          continue;
        }
        pool.attribution[pair].insert(run.system);
      }
    }
    for (const auto& query : seed.queries()) {
      if (!run.entries.contains(query)) {
        pool.warnings.push_back("run '" + run.system + "' has no list for query " + query.str());
      }
    }
  }
  pool.excluded = skipped.size();
  pool.pairs.reserve(pool.attribution.size());
  for (const auto& [pair, systems] : pool.attribution) pool.pairs.push_back(pair);
  return pool;
}

// Pool in run-file grammar with tag POOL; rank is the position within the
// query's lexicographic item order, score is 0.
inline void write_pool(std::ostream& out, const Pool& pool) {
  QueryId current;
  int rank = 0;
  for (const auto& pair : pool.pairs) {
    rank = pair.query == current ? rank + 1 : 1;
    current = pair.query;
    out << pair.query.str() << ' ' << pair.item.str() << ' ' << rank << " 0 " << kPoolRunTag << '\n';
  }
}

// Provenance companion file: `query_id item_id sysA[,sysB...]`.
inline void write_provenance(std::ostream& out, const Pool& pool) {
  for (const auto& pair : pool.pairs) {
    out << pair.query.str() << ' ' << pair.item.str() << ' ';
    bool first = true;
    for (const auto& system : pool.attribution.at(pair)) {
      if (!first) out << ',';
      out << system;
      first = false;
    }
    out << '\n';
  }
}

inline std::map<PairKey, std::set<std::string>> parse_provenance(std::istream& in) {
  std::map<PairKey, std::set<std::string>> attribution;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_skippable(line)) continue;
    auto fields = split_ws(line);
    if (fields.size() != 3) throw Error(ErrorKind::kMalformedLine, "expected 'query_id item_id systems'", line_no);
    auto& systems = attribution[PairKey{QueryId(fields[0]), ItemId(fields[1])}];
    for (auto& system : split(fields[2], ',')) {
      if (!system.empty()) systems.insert(std::move(system));
    }
    if (systems.empty()) throw Error(ErrorKind::kMissingProvenance, "empty system list", line_no);
  }
  return attribution;
}

// Reads a pool export (and optional provenance) back into a Pool.
inline Pool parse_pool(std::istream& pool_in, std::istream* provenance_in = nullptr) {
  RankedRun run = parse_run(pool_in, /*strict=*/false);
  Pool pool;
  for (const auto& [query, list] : run.entries) {
    for (const auto& entry : list) pool.pairs.push_back(PairKey{query, entry.item});
  }
  std::sort(pool.pairs.begin(), pool.pairs.end());
  if (provenance_in != nullptr) {
    pool.attribution = parse_provenance(*provenance_in);
    for (const auto& [pair, systems] : pool.attribution) {
      pool.contributing_systems.insert(systems.begin(), systems.end());
    }
  }
  return pool;
}

struct PlannedJob {
  std::string job_id;
  PairKey pair;
  int pass = 1;
};

inline std::string job_id_for(std::size_t sequence) { return "j" + std::to_string(sequence); }

// Number of pairs that receive a second label: floor(fraction * n), with a
// small epsilon so that e.g. 0.29 * 100 yields 29.
inline std::size_t double_label_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

// Pass-1 job for every pair, then pass-2 jobs for a seeded sample, both in
// pool order. Raters are bound at lease time, not here.
inline std::vector<PlannedJob> assignment_plan(const Pool& pool, double double_label_fraction, std::uint64_t rng_seed) {
  if (!(double_label_fraction >= 0.0 && double_label_fraction <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "double-label fraction must be in [0, 1]");
  }
  std::size_t n = pool.pairs.size();
  std::size_t m = double_label_count(double_label_fraction, n);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(rng_seed);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(order[i], order[j]);
  }
  std::vector<std::size_t> second(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
  std::sort(second.begin(), second.end());

  std::vector<PlannedJob> jobs;
  jobs.reserve(n + m);
  for (const auto& pair : pool.pairs) jobs.push_back(PlannedJob{job_id_for(jobs.size() + 1), pair, 1});
  for (std::size_t index : second) jobs.push_back(PlannedJob{job_id_for(jobs.size() + 1), pool.pairs[index], 2});
  return jobs;
}

enum class Label { kIrrelevant, kRelevant, kEscalated };

inline std::string_view to_string(Label label) {
  switch (label) {
    case Label::kIrrelevant: return "irrelevant";
    case Label::kRelevant: return "relevant";
    case Label::kEscalated: return "escalated";
  }
  return "";
}

inline std::optional<Label> parse_label(std::string_view text) {
  if (text == "relevant") return Label::kRelevant;
  if (text == "irrelevant") return Label::kIrrelevant;
  if (text == "escalated") return Label::kEscalated;
  return std::nullopt;
}

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

// ISO-8601 UTC with millisecond precision, e.g. 2026-10-16T09:30:00.250Z.
inline std::string format_timestamp(Timestamp ts) {
  auto seconds = std::chrono::floor<std::chrono::seconds>(ts);
  auto millis = (ts - seconds).count();
  std::time_t t = std::chrono::system_clock::to_time_t(seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buffer[96];
  std::snprintf(buffer, sizeof(buffer), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(millis));
  return buffer;
}

inline std::optional<Timestamp> parse_timestamp(const std::string& text) {
  int year, month, day, hour, minute, second, millis = 0;
  char tail = 0;
  int fields = std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%3d%c", &year, &month, &day, &hour, &minute,
                           &second, &millis, &tail);
  if (fields != 8) {
    millis = 0;
    fields = std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &year, &month, &day, &hour, &minute, &second,
                         &tail);
    if (fields != 7) return std::nullopt;
  }
  if (tail != 'Z') return std::nullopt;
  using namespace std::chrono;
  year_month_day date{std::chrono::year(year), std::chrono::month(static_cast<unsigned>(month)),
                      std::chrono::day(static_cast<unsigned>(day))};
  if (!date.ok()) return std::nullopt;
  return Timestamp(sys_days(date)) + hours(hour) + minutes(minute) + seconds(second) + milliseconds(millis);
}

struct LabelRecord {
  PairKey pair;
  std::string rater_id;
  Label label = Label::kIrrelevant;
  Timestamp timestamp{};
};

inline nlohmann::ordered_json to_json(const LabelRecord& record) {
  return {{"pair_id", pair_id(record.pair)},
          {"query_id", record.pair.query.str()},
          {"item_id", record.pair.item.str()},
          {"rater_id", record.rater_id},
          {"label", std::string(to_string(record.label))},
          {"ts", format_timestamp(record.timestamp)}};
}

inline LabelRecord label_record_from_json(const nlohmann::json& doc) {
  auto text = [&](const char* key) -> std::string {
    if (!doc.contains(key) || !doc[key].is_string()) {
      throw Error(ErrorKind::kMalformedLine, std::string("missing string field '") + key + "'");
    }
    return doc[key].get<std::string>();
  };
  LabelRecord record;
  record.pair = PairKey{QueryId(text("query_id")), ItemId(text("item_id"))};
  if (record.pair.query.empty() || record.pair.item.empty()) {
    throw Error(ErrorKind::kMalformedLine, "empty query_id or item_id");
  }
  if (doc.contains("pair_id") && text("pair_id") != pair_id(record.pair)) {
    throw Error(ErrorKind::kMalformedLine, "pair_id does not match query_id|item_id");
  }
  record.rater_id = text("rater_id");
  if (record.rater_id.empty()) throw Error(ErrorKind::kMalformedLine, "empty rater_id");
  auto label = parse_label(text("label"));
  if (!label) throw Error(ErrorKind::kInvalidLabel, "label must be relevant, irrelevant or escalated");
  record.label = *label;
  auto ts = parse_timestamp(text("ts"));
  if (!ts) throw Error(ErrorKind::kMalformedLine, "ts must be ISO-8601 UTC");
  record.timestamp = *ts;
  return record;
}

inline std::vector<LabelRecord> parse_label_log(std::istream& in) {
  std::vector<LabelRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_skippable(line)) continue;
    try {
      records.push_back(label_record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kMalformedLine, e.what(), line_no);
    } catch (const Error& e) {
      throw Error(e.kind(), e.message(), line_no);
    }
  }
  return records;
}

inline std::vector<LabelRecord> parse_label_log(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_label_log(in);
}

inline void write_label_log(std::ostream& out, std::span<const LabelRecord> records) {
  for (const auto& record : records) out << to_json(record).dump() << '\n';
}

enum class ResolutionStatus { kResolved, kPending, kUnresolved, kEscalated };

inline std::string_view to_string(ResolutionStatus status) {
  switch (status) {
    case ResolutionStatus::kResolved: return "resolved";
    case ResolutionStatus::kPending: return "pending";
    case ResolutionStatus::kUnresolved: return "unresolved";
    case ResolutionStatus::kEscalated: return "escalated";
  }
  return "";
}

struct ResolutionOutcome {
  PairKey pair;
  ResolutionStatus status = ResolutionStatus::kUnresolved;
  std::optional<bool> relevant;  // set iff resolved
  std::size_t labels_used = 0;   // non-escalated labels
  std::size_t escalations = 0;
};

// A third-label job owed to a pair whose two labels disagree.
struct PendingJob {
  PairKey pair;
  int pass = 3;
  std::set<std::string> excluded_raters;
};

struct PairTally {
  std::size_t relevant = 0;
  std::size_t irrelevant = 0;
  std::size_t escalated = 0;
  std::set<std::string> raters;

  void add(const LabelRecord& record) {
    raters.insert(record.rater_id);
    switch (record.label) {
      case Label::kRelevant: ++relevant; break;
      case Label::kIrrelevant: ++irrelevant; break;
      case Label::kEscalated: ++escalated; break;
    }
  }
  std::size_t labels() const noexcept { return relevant + irrelevant; }
};

// Outcome for one pair. Escalations never vote; two disagreeing labels are
// pending a third; any other count resolves on a strict majority.
inline ResolutionOutcome resolve_pair(const PairKey& pair, const PairTally& tally) {
  ResolutionOutcome outcome;
  outcome.pair = pair;
  outcome.labels_used = tally.labels();
  outcome.escalations = tally.escalated;
  if (tally.labels() == 0) {
    outcome.status = ResolutionStatus::kEscalated;
  } else if (tally.labels() == 2 && tally.relevant == 1) {
    outcome.status = ResolutionStatus::kPending;
  } else if (tally.relevant * 2 > tally.labels()) {
    outcome.status = ResolutionStatus::kResolved;
    outcome.relevant = true;
  } else if (tally.irrelevant * 2 > tally.labels()) {
    outcome.status = ResolutionStatus::kResolved;
    outcome.relevant = false;
  } else {
    outcome.status = ResolutionStatus::kUnresolved;
  }
  return outcome;
}

struct Resolution {
  JudgmentSet judgments;
  std::vector<ResolutionOutcome> outcomes;  // sorted by pair
  std::vector<PendingJob> pending;
  std::vector<std::string> warnings;

  std::size_t count(ResolutionStatus status) const {
    return static_cast<std::size_t>(std::count_if(outcomes.begin(), outcomes.end(),
                                                  [&](const ResolutionOutcome& o) { return o.status == status; }));
  }

  // Share of labeled pairs that resolved to a label.
  std::optional<double> resolution_rate() const {
    if (outcomes.empty()) return std::nullopt;
    return static_cast<double>(count(ResolutionStatus::kResolved)) / static_cast<double>(outcomes.size());
  }
};

inline std::map<PairKey, PairTally> tally_records(std::span<const LabelRecord> records) {
  std::map<PairKey, PairTally> tallies;
  for (const auto& record : records) tallies[record.pair].add(record);
  return tallies;
}

// Folds a label log into judgments. With `attribution`, resolved labels carry
// source `pooled:<systems>`; otherwise plain `pooled`. The result does not
// depend on record order.
inline Resolution resolve_labels(std::span<const LabelRecord> records,
                                 const std::map<PairKey, std::set<std::string>>* attribution = nullptr) {
  Resolution resolution;
  for (const auto& [pair, tally] : tally_records(records)) {
    if (tally.labels() > 3) {
      resolution.warnings.push_back("pair " + pair_id(pair) + " has " + std::to_string(tally.labels()) +
                                    " labels; resolving by majority");
    }
    ResolutionOutcome outcome = resolve_pair(pair, tally);
    if (outcome.status == ResolutionStatus::kResolved) {
      std::string source = "pooled";
      if (attribution != nullptr) {
        if (auto it = attribution->find(pair); it != attribution->end()) source = pooled_source(it->second);
      }
      resolution.judgments.add(pair.query, pair.item, *outcome.relevant, std::move(source));
    } else if (outcome.status == ResolutionStatus::kPending) {
      resolution.pending.push_back(PendingJob{pair, 3, tally.raters});
    }
    resolution.outcomes.push_back(std::move(outcome));
  }
  return resolution;
}

inline void write_resolution_csv(std::ostream& out, const Resolution& resolution) {
  out << "pair_id,query_id,item_id,status,label,labels_used,escalations\n";
  for (const auto& outcome : resolution.outcomes) {
    out << pair_id(outcome.pair) << ',' << outcome.pair.query.str() << ',' << outcome.pair.item.str() << ','
        << to_string(outcome.status) << ',' << (outcome.relevant ? (*outcome.relevant ? "1" : "0") : "") << ','
        << outcome.labels_used << ',' << outcome.escalations << '\n';
  }
}

}  // namespace fneval
