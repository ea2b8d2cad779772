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

// Retrieval metrics under a JudgmentSet.
//
// Correct@K (C@K) is 1 when at least one relevant item is in the top K.
// Recall@K is the textbook ratio of relevant items in the top K to all known
// relevant items of the query. Average precision sums Prec@i over every
// position i holding a relevant item and divides by the number of known
// relevant items, so judged positives missing from a truncated list add a
// zero term but stay in the denominator.
//
// Unjudged items in a ranked list count as not relevant when scoring. Queries
// without any known relevant item are excluded from aggregates and listed in
// MetricReport::no_known_positive (or scored as all-zero under
// NoPositivePolicy::kScoreZero).

#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "fneval/common.hpp"
#include "fneval/corpus.hpp"
#include "json.hpp"

namespace fneval {

inline const std::vector<int> kDefaultKs{1, 5, 10, 50};

namespace detail {

inline std::size_t count_positives(const JudgmentSet& judgments, const QueryId& query) {
  std::size_t n = 0;
  if (auto it = judgments.by_query().find(query); it != judgments.by_query().end()) {
    for (const auto& [item, judgment] : it->second) n += judgment.relevant ? 1 : 0;
  }
  return n;
}

inline std::size_t require_positives(const JudgmentSet& judgments, const QueryId& query) {
  std::size_t n = count_positives(judgments, query);
  if (n == 0) throw Error(ErrorKind::kNoKnownPositive, "no known positive for query " + query.str());
  return n;
}

inline void require_k(int k) {
  if (k < 1) throw Error(ErrorKind::kInvalidArgument, "K must be >= 1, got " + std::to_string(k));
}

}  // namespace detail

inline int correct_at_k(std::span<const ItemId> ranked, const JudgmentSet& judgments, const QueryId& query, int k) {
  detail::require_k(k);
  detail::require_positives(judgments, query);
  std::size_t limit = std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size());
  for (std::size_t i = 0; i < limit; ++i) {
    if (judgments.is_relevant(query, ranked[i])) return 1;
  }
  return 0;
}

inline double recall_at_k(std::span<const ItemId> ranked, const JudgmentSet& judgments, const QueryId& query,
                          int k) {
  detail::require_k(k);
  std::size_t total = detail::require_positives(judgments, query);
  std::size_t limit = std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < limit; ++i) hits += judgments.is_relevant(query, ranked[i]) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(total);
}

inline double average_precision(std::span<const ItemId> ranked, const JudgmentSet& judgments,
                                const QueryId& query) {
  std::size_t total = detail::require_positives(judgments, query);
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (judgments.is_relevant(query, ranked[i])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(total);
}

inline std::optional<int> first_positive_rank(std::span<const ItemId> ranked, const JudgmentSet& judgments,
                                              const QueryId& query) {
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (judgments.is_relevant(query, ranked[i])) return static_cast<int>(i + 1);
  }
  return std::nullopt;
}

struct QueryMetrics {
  std::map<int, int> correct_at;
  std::map<int, double> recall_at;
  double avg_prec = 0.0;
  std::optional<int> first_pos_rank;
  std::size_t num_positives = 0;
  std::size_t missing_positives = 0;  // judged positives absent from the ranked list
};

struct AggregateMetrics {
  std::size_t num_queries = 0;
  std::map<int, double> correct_at;
  std::map<int, double> recall_at;
  double mean_avg_prec = 0.0;
  // Over queries whose ranked list contains a relevant item.
  std::optional<double> mean_first_pos_rank;
  std::optional<double> median_first_pos_rank;
};

struct MetricReport {
  std::string system;
  std::string judgment_tag;
  std::vector<int> ks;
  std::map<QueryId, QueryMetrics> per_query;
  AggregateMetrics aggregate;
  std::vector<QueryId> no_known_positive;
  std::vector<QueryId> missing_from_run;  // queries with known positives but no ranked list
  std::vector<std::string> warnings;
};

enum class NoPositivePolicy { kExclude, kScoreZero };

struct EvalOptions {
  std::vector<int> ks = kDefaultKs;
  NoPositivePolicy no_positive = NoPositivePolicy::kExclude;
  std::string judgment_tag;
  // When set, only these queries are evaluated.
  std::optional<std::set<QueryId>> restrict_to;
};

// Scores a single ranked list in one pass.
inline QueryMetrics score_query(std::span<const ItemId> ranked, const JudgmentSet& judgments, const QueryId& query,
                                const std::vector<int>& ks) {
  QueryMetrics metrics;
  metrics.num_positives = detail::count_positives(judgments, query);
  std::vector<std::size_t> hits_at(ranked.size() + 1, 0);
  double precision_sum = 0.0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    bool relevant = judgments.is_relevant(query, ranked[i]);
    hits_at[i + 1] = hits_at[i] + (relevant ? 1 : 0);
    if (relevant) {
      precision_sum += static_cast<double>(hits_at[i + 1]) / static_cast<double>(i + 1);
      if (!metrics.first_pos_rank) metrics.first_pos_rank = static_cast<int>(i + 1);
    }
  }
  std::size_t found = hits_at.back();
  metrics.missing_positives = metrics.num_positives - found;
  double denom = static_cast<double>(metrics.num_positives);
  for (int k : ks) {
    std::size_t hits = hits_at[std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size())];
    metrics.correct_at[k] = hits > 0 ? 1 : 0;
    metrics.recall_at[k] = metrics.num_positives == 0 ? 0.0 : static_cast<double>(hits) / denom;
  }
  metrics.avg_prec = metrics.num_positives == 0 ? 0.0 : precision_sum / denom;
  return metrics;
}

inline double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

// Evaluates every query present in both the run and the judgments. Sums run in
// sorted QueryId order.
inline MetricReport evaluate(const RankedRun& run, const JudgmentSet& judgments, const EvalOptions& options = {}) {
  for (int k : options.ks) detail::require_k(k);
  MetricReport report;
  report.system = run.system;
  report.judgment_tag = options.judgment_tag;
  report.ks = options.ks;
  std::sort(report.ks.begin(), report.ks.end());
  report.ks.erase(std::unique(report.ks.begin(), report.ks.end()), report.ks.end());

  auto wanted = [&](const QueryId& query) { return !options.restrict_to || options.restrict_to->contains(query); };

  bool any_shared = false;
  for (const auto& [query, list] : run.entries) {
    if (!wanted(query) || !judgments.has_query(query)) continue;
    any_shared = true;
    std::vector<ItemId> ranked;
    ranked.reserve(list.size());
    for (const auto& entry : list) ranked.push_back(entry.item);
    QueryMetrics metrics = score_query(ranked, judgments, query, report.ks);
    if (metrics.num_positives == 0) {
      report.no_known_positive.push_back(query);
      if (options.no_positive == NoPositivePolicy::kExclude) continue;
    }
    if (metrics.missing_positives > 0) {
      report.warnings.push_back("PositiveMissingFromRun: " + std::to_string(metrics.missing_positives) +
                                " judged positive(s) of query " + query.str() + " not in ranked list");
    }
    report.per_query.emplace(query, std::move(metrics));
  }
  if (!any_shared) {
    throw Error(ErrorKind::kEmptyIntersection, "run '" + run.system + "' shares no query with the judgments");
  }
  for (const auto& [query, labels] : judgments.by_query()) {
    if (wanted(query) && !run.entries.contains(query) && detail::count_positives(judgments, query) > 0) {
      report.missing_from_run.push_back(query);
    }
  }

  AggregateMetrics& agg = report.aggregate;
  agg.num_queries = report.per_query.size();
  double n = static_cast<double>(agg.num_queries);
  std::vector<double> first_ranks;
  double ap_sum = 0.0;
  std::map<int, double> correct_sum, recall_sum;
  for (int k : report.ks) correct_sum[k] = recall_sum[k] = 0.0;
  for (const auto& [query, metrics] : report.per_query) {
    for (int k : report.ks) {
      correct_sum[k] += metrics.correct_at.at(k);
      recall_sum[k] += metrics.recall_at.at(k);
    }
    ap_sum += metrics.avg_prec;
    if (metrics.first_pos_rank) first_ranks.push_back(*metrics.first_pos_rank);
  }
  if (agg.num_queries > 0) {
    for (int k : report.ks) {
      agg.correct_at[k] = correct_sum[k] / n;
      agg.recall_at[k] = recall_sum[k] / n;
    }
    agg.mean_avg_prec = ap_sum / n;
  }
  if (!first_ranks.empty()) {
    double rank_sum = 0.0;
    for (double r : first_ranks) rank_sum += r;
    agg.mean_first_pos_rank = rank_sum / static_cast<double>(first_ranks.size());
    agg.median_first_pos_rank = median(first_ranks);
  }
  return report;
}

struct DeltaRow {
  std::string metric;
  double corrected = 0.0;  // A
  double original = 0.0;   // B
  double delta = 0.0;      // C = A - B
};

struct DeltaReport {
  std::string system;
  std::vector<DeltaRow> rows;
  bool corrected_is_superset = true;
  bool negative_ap_delta = false;
  MetricReport corrected_report;
  MetricReport original_report;
  std::vector<std::string> warnings;
};

// True when every relevant pair of `original` is relevant in `corrected`.
inline bool relevant_superset(const JudgmentSet& corrected, const JudgmentSet& original) {
  for (const auto& [query, labels] : original.by_query()) {
    for (const auto& [item, judgment] : labels) {
      if (judgment.relevant && !corrected.is_relevant(query, item)) return false;
    }
  }
  return true;
}

// Both sides are evaluated over the queries that have a known positive under
// `original`, so A and B share a denominator.
inline DeltaReport delta_report(const RankedRun& run, const JudgmentSet& original, const JudgmentSet& corrected,
                                const std::vector<int>& ks = kDefaultKs) {
  DeltaReport report;
  report.system = run.system;
  report.corrected_is_superset = relevant_superset(corrected, original);
  if (!report.corrected_is_superset) {
    report.warnings.push_back("corrected judgments do not contain every original positive");
  }

  EvalOptions options;
  options.ks = ks;
  options.judgment_tag = "original";
  report.original_report = evaluate(run, original, options);

  options.judgment_tag = "corrected";
  options.restrict_to.emplace();
  for (const auto& [query, metrics] : report.original_report.per_query) options.restrict_to->insert(query);
  report.corrected_report = evaluate(run, corrected, options);
  for (const auto& query : report.corrected_report.no_known_positive) {
    report.warnings.push_back("query " + query.str() + " has no positive under corrected judgments");
  }

  const auto& a = report.corrected_report.aggregate;
  const auto& b = report.original_report.aggregate;
  auto add_row = [&](std::string name, double corrected_value, double original_value) {
    report.rows.push_back(DeltaRow{std::move(name), corrected_value, original_value, corrected_value - original_value});
  };
  for (int k : report.original_report.ks) add_row("C@" + std::to_string(k), a.correct_at.at(k), b.correct_at.at(k));
  for (int k : report.original_report.ks) add_row("R@" + std::to_string(k), a.recall_at.at(k), b.recall_at.at(k));
  add_row("mAP", a.mean_avg_prec, b.mean_avg_prec);
  if (report.rows.back().delta < 0.0) {
    report.negative_ap_delta = true;
    report.warnings.push_back("mean average precision decreased under corrected judgments");
  }
  return report;
}

// "A (B + C)%" with fractions rendered as percentages.
inline std::string format_delta_cell(const DeltaRow& row) {
  std::string sign = row.delta < 0.0 ? " - " : " + ";
  return format_sig3(row.corrected * 100.0) + " (" + format_sig3(row.original * 100.0) + sign +
         format_sig3(std::fabs(row.delta) * 100.0) + ")%";
}

inline constexpr int kReportFormatVersion = 1;

inline nlohmann::ordered_json to_json(const MetricReport& report) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["format"] = "fneval.metric_report";
  doc["version"] = kReportFormatVersion;
  doc["system"] = report.system;
  doc["judgments"] = report.judgment_tag;
  doc["ks"] = report.ks;
  ordered_json agg;
  agg["num_queries"] = report.aggregate.num_queries;
  for (int k : report.ks) {
    if (report.aggregate.correct_at.contains(k)) agg["C@" + std::to_string(k)] = report.aggregate.correct_at.at(k);
  }
  for (int k : report.ks) {
    if (report.aggregate.recall_at.contains(k)) agg["R@" + std::to_string(k)] = report.aggregate.recall_at.at(k);
  }
  agg["mAP"] = report.aggregate.mean_avg_prec;
  agg["mean_first_rank"] = report.aggregate.mean_first_pos_rank ? ordered_json(*report.aggregate.mean_first_pos_rank)
                                                                : ordered_json(nullptr);
  agg["median_first_rank"] = report.aggregate.median_first_pos_rank
                                 ? ordered_json(*report.aggregate.median_first_pos_rank)
                                 : ordered_json(nullptr);
  doc["aggregate"] = agg;
  ordered_json per_query = ordered_json::object();
  for (const auto& [query, metrics] : report.per_query) {
    ordered_json row;
    for (const auto& [k, v] : metrics.correct_at) row["C@" + std::to_string(k)] = v;
    for (const auto& [k, v] : metrics.recall_at) row["R@" + std::to_string(k)] = v;
    row["AP"] = metrics.avg_prec;
    row["first_rank"] = metrics.first_pos_rank ? ordered_json(*metrics.first_pos_rank) : ordered_json(nullptr);
    row["num_positives"] = metrics.num_positives;
    per_query[query.str()] = row;
  }
  doc["per_query"] = per_query;
  ordered_json missing = ordered_json::array();
  for (const auto& query : report.no_known_positive) missing.push_back(query.str());
  doc["no_known_positive"] = missing;
  ordered_json absent = ordered_json::array();
  for (const auto& query : report.missing_from_run) absent.push_back(query.str());
  doc["missing_from_run"] = absent;
  doc["warnings"] = report.warnings;
  return doc;
}

// One row per aggregate metric.
inline void write_csv(std::ostream& out, const MetricReport& report) {
  out << "system,judgments,metric,value\n";
  auto row = [&](const std::string& metric, const std::string& value) {
    out << report.system << ',' << report.judgment_tag << ',' << metric << ',' << value << '\n';
  };
  row("num_queries", std::to_string(report.aggregate.num_queries));
  for (const auto& [k, v] : report.aggregate.correct_at) row("C@" + std::to_string(k), format_double(v));
  for (const auto& [k, v] : report.aggregate.recall_at) row("R@" + std::to_string(k), format_double(v));
  row("mAP", format_double(report.aggregate.mean_avg_prec));
  row("mean_first_rank",
      report.aggregate.mean_first_pos_rank ? format_double(*report.aggregate.mean_first_pos_rank) : "");
  row("median_first_rank",
      report.aggregate.median_first_pos_rank ? format_double(*report.aggregate.median_first_pos_rank) : "");
}

inline nlohmann::ordered_json to_json(const DeltaReport& report) {
  nlohmann::ordered_json doc;
  doc["format"] = "fneval.delta_report";
  doc["version"] = kReportFormatVersion;
  doc["system"] = report.system;
  doc["num_queries"] = report.original_report.aggregate.num_queries;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : report.rows) {
    rows.push_back({{"metric", row.metric}, {"A", row.corrected}, {"B", row.original}, {"C", row.delta}});
  }
  doc["rows"] = rows;
  doc["corrected_is_superset"] = report.corrected_is_superset;
  doc["negative_ap_delta"] = report.negative_ap_delta;
  doc["warnings"] = report.warnings;
  return doc;
}

inline void write_csv(std::ostream& out, const DeltaReport& report) {
  out << "system,metric,A,B,C\n";
  for (const auto& row : report.rows) {
    out << report.system << ',' << row.metric << ',' << format_double(row.corrected) << ','
        << format_double(row.original) << ',' << format_double(row.delta) << '\n';
  }
}

inline void write_table(std::ostream& out, const DeltaReport& report) {
  out << report.system << " (" << report.original_report.aggregate.num_queries << " queries)\n";
  for (const auto& row : report.rows) out << "  " << row.metric << '\t' << format_delta_cell(row) << '\n';
}

inline void write_table(std::ostream& out, const MetricReport& report) {
  out << report.system;
  if (!report.judgment_tag.empty()) out << " [" << report.judgment_tag << "]";
  out << " (" << report.aggregate.num_queries << " queries";
  if (!report.no_known_positive.empty()) out << ", " << report.no_known_positive.size() << " without known positive";
  out << ")\n";
  for (const auto& [k, v] : report.aggregate.correct_at) out << "  C@" << k << '\t' << format_sig3(v * 100.0) << "%\n";
  for (const auto& [k, v] : report.aggregate.recall_at) out << "  R@" << k << '\t' << format_sig3(v * 100.0) << "%\n";
  out << "  mAP\t" << format_sig3(report.aggregate.mean_avg_prec * 100.0) << "%\n";
  if (report.aggregate.median_first_pos_rank) out << "  MedR\t" << *report.aggregate.median_first_pos_rank << '\n';
}

}  // namespace fneval
