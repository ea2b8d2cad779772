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

// Diagnostics over runs and judgments: prediction overlap between systems,
// leave-one-system-out pooling bias, and positive-count / positive-rank /
// caption-length distributions.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "fneval/corpus.hpp"
#include "fneval/metrics.hpp"
#include "json.hpp"

namespace fneval {

inline constexpr double kDefaultRboPersistence = 0.9;
inline constexpr int kDefaultRboDepth = 10;

// |top-D(a) ∩ top-D(b)| / D. Short lists contribute their available prefix.
inline double plain_overlap(std::span<const ItemId> a, std::span<const ItemId> b, int depth) {
  require(depth >= 1, "overlap depth must be >= 1");
  auto d = static_cast<std::size_t>(depth);
  std::unordered_set<ItemId> top_a(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(std::min(d, a.size())));
  std::size_t shared = 0;
  for (std::size_t i = 0; i < std::min(d, b.size()); ++i) shared += top_a.contains(b[i]) ? 1 : 0;
  return static_cast<double>(shared) / static_cast<double>(depth);
}

enum class RboVariant {
  kExtrapolated,  // (1-p) sum_{d<=D} p^(d-1) A_d + p^D A_D
  kTruncated,     // (1-p) sum_{d<=D} p^(d-1) A_d, a lower bound
};

// Agreement A_d = |top-d(a) ∩ top-d(b)| / d for d = 1..depth.
inline std::vector<double> prefix_agreement(std::span<const ItemId> a, std::span<const ItemId> b, int depth) {
  std::vector<double> agreement;
  agreement.reserve(static_cast<std::size_t>(depth));
  std::unordered_set<ItemId> seen_a, seen_b;
  std::size_t shared = 0;
  for (int d = 1; d <= depth; ++d) {
    auto i = static_cast<std::size_t>(d - 1);
    if (i < a.size()) {
      seen_a.insert(a[i]);
      shared += seen_b.contains(a[i]) ? 1 : 0;
    }
    if (i < b.size()) {
      seen_b.insert(b[i]);
      shared += seen_a.contains(b[i]) ? 1 : 0;
    }
    agreement.push_back(static_cast<double>(shared) / static_cast<double>(d));
  }
  return agreement;
}

// Rank-biased overlap of two top-`depth` prefixes. The extrapolated form is
// evaluated as A_D + (1-p) sum p^(d-1) (A_d - A_D), which is algebraically
// identical and gives exactly 1 for identical and 0 for disjoint lists.
inline double rbo(std::span<const ItemId> a, std::span<const ItemId> b, double p, int depth,
                  RboVariant variant = RboVariant::kExtrapolated) {
  require(p > 0.0 && p < 1.0, "RBO persistence must be in (0, 1)");
  require(depth >= 1, "RBO depth must be >= 1");
  auto agreement = prefix_agreement(a, b, depth);
  double weight = 1.0;
  double value = 0.0;
  if (variant == RboVariant::kExtrapolated) {
    double last = agreement.back();
    double sum = 0.0;
    for (double a_d : agreement) {
      sum += weight * (a_d - last);
      weight *= p;
    }
    value = last + (1.0 - p) * sum;
  } else {
    double sum = 0.0;
    for (double a_d : agreement) {
      sum += weight * a_d;
      weight *= p;
    }
    value = (1.0 - p) * sum;
  }
  return std::clamp(value, 0.0, 1.0);
}

struct OverlapRow {
  QueryId query;
  double overlap = 0.0;
  double rbo = 0.0;
};

struct SystemPairOverlap {
  std::string system_a;
  std::string system_b;
  std::vector<OverlapRow> per_query;
  double mean_overlap = 0.0;
  double mean_rbo = 0.0;
};

struct OverlapReport {
  int depth = kDefaultRboDepth;
  double persistence = kDefaultRboPersistence;
  RboVariant variant = RboVariant::kExtrapolated;
  std::vector<SystemPairOverlap> pairs;
  std::vector<std::string> warnings;
};

// Per-query overlap and RBO for every pair of runs, averaged over the queries
// both runs answer.
inline OverlapReport overlap_report(std::span<const RankedRun> runs, int depth = kDefaultRboDepth,
                                    double p = kDefaultRboPersistence,
                                    RboVariant variant = RboVariant::kExtrapolated) {
  OverlapReport report;
  report.depth = depth;
  report.persistence = p;
  report.variant = variant;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (std::size_t j = i + 1; j < runs.size(); ++j) {
      SystemPairOverlap pair;
      pair.system_a = runs[i].system;
      pair.system_b = runs[j].system;
      std::size_t short_lists = 0;
      for (const auto& [query, list] : runs[i].entries) {
        if (!runs[j].entries.contains(query)) continue;
        auto a = runs[i].ranked_items(query);
        auto b = runs[j].ranked_items(query);
        if (a.size() < static_cast<std::size_t>(depth) || b.size() < static_cast<std::size_t>(depth)) ++short_lists;
        pair.per_query.push_back(OverlapRow{query, plain_overlap(a, b, depth), rbo(a, b, p, depth, variant)});
      }
      if (short_lists > 0) {
        report.warnings.push_back(pair.system_a + " vs " + pair.system_b + ": " + std::to_string(short_lists) +
                                  " list(s) shorter than depth " + std::to_string(depth));
      }
      if (!pair.per_query.empty()) {
        double overlap_sum = 0.0, rbo_sum = 0.0;
        for (const auto& row : pair.per_query) {
          overlap_sum += row.overlap;
          rbo_sum += row.rbo;
        }
        auto n = static_cast<double>(pair.per_query.size());
        pair.mean_overlap = overlap_sum / n;
        pair.mean_rbo = rbo_sum / n;
      } else {
        report.warnings.push_back(pair.system_a + " vs " + pair.system_b + ": no shared queries");
      }
      report.pairs.push_back(std::move(pair));
    }
  }
  return report;
}

inline nlohmann::ordered_json to_json(const OverlapReport& report) {
  nlohmann::ordered_json doc;
  doc["format"] = "fneval.overlap_report";
  doc["version"] = 1;
  doc["depth"] = report.depth;
  doc["persistence"] = report.persistence;
  doc["variant"] = report.variant == RboVariant::kExtrapolated ? "extrapolated" : "truncated";
  auto pairs = nlohmann::ordered_json::array();
  for (const auto& pair : report.pairs) {
    auto rows = nlohmann::ordered_json::array();
    for (const auto& row : pair.per_query) {
      rows.push_back({{"query_id", row.query.str()}, {"overlap", row.overlap}, {"rbo", row.rbo}});
    }
    pairs.push_back({{"system_a", pair.system_a},
                     {"system_b", pair.system_b},
                     {"num_queries", pair.per_query.size()},
                     {"mean_overlap", pair.mean_overlap},
                     {"mean_rbo", pair.mean_rbo},
                     {"per_query", rows}});
  }
  doc["pairs"] = pairs;
  doc["warnings"] = report.warnings;
  return doc;
}

inline void write_csv(std::ostream& out, const OverlapReport& report) {
  out << "system_a,system_b,num_queries,mean_overlap,mean_rbo\n";
  for (const auto& pair : report.pairs) {
    out << pair.system_a << ',' << pair.system_b << ',' << pair.per_query.size() << ','
        << format_double(pair.mean_overlap) << ',' << format_double(pair.mean_rbo) << '\n';
  }
}

struct AblationReport {
  std::string target;
  MetricReport all;       // original ∪ every pooled label
  MetricReport held_out;  // original ∪ pooled labels some other system contributed
  std::size_t withheld_labels = 0;
};

// Emulates evaluating a system that did not contribute to the pool: labels
// attributable only to `target` are withheld. Every pooled label must carry a
// `pooled:<systems>` source.
inline AblationReport leave_one_out(std::span<const RankedRun> runs, const JudgmentSet& original,
                                    const JudgmentSet& pooled, const std::string& target,
                                    const std::vector<int>& ks = kDefaultKs) {
  const RankedRun* target_run = nullptr;
  for (const auto& run : runs) {
    if (run.system == target) target_run = &run;
  }
  if (target_run == nullptr) throw Error(ErrorKind::kInvalidArgument, "target system '" + target + "' not among runs");

  JudgmentSet others;
  AblationReport report;
  report.target = target;
  for (const auto& [query, labels] : pooled.by_query()) {
    for (const auto& [item, judgment] : labels) {
      auto systems = pooled_systems(judgment.source);
      if (systems.empty()) {
        throw Error(ErrorKind::kMissingProvenance,
                    "pooled label (" + query.str() + ", " + item.str() + ") has source '" + judgment.source + "'");
      }
      bool other = std::any_of(systems.begin(), systems.end(), [&](const std::string& s) { return s != target; });
      if (other) {
        others.set(query, item, judgment);
      } else {
        ++report.withheld_labels;
      }
    }
  }
  JudgmentSet all = merge_judgments(original, pooled);
  JudgmentSet held_out = merge_judgments(original, others);

  EvalOptions options;
  options.ks = ks;
  options.judgment_tag = "new";
  report.held_out = evaluate(*target_run, held_out, options);
  options.judgment_tag = "all";
  options.restrict_to.emplace();
  for (const auto& [query, metrics] : report.held_out.per_query) options.restrict_to->insert(query);
  report.all = evaluate(*target_run, all, options);
  return report;
}

inline nlohmann::ordered_json to_json(const AblationReport& report) {
  nlohmann::ordered_json doc;
  doc["format"] = "fneval.ablation_report";
  doc["version"] = 1;
  doc["target"] = report.target;
  doc["withheld_labels"] = report.withheld_labels;
  doc["all"] = to_json(report.all);
  doc["new"] = to_json(report.held_out);
  return doc;
}

inline void write_csv(std::ostream& out, const std::vector<AblationReport>& reports) {
  out << "system,metric,all,new\n";
  for (const auto& report : reports) {
    const auto& all = report.all.aggregate;
    const auto& held = report.held_out.aggregate;
    for (const auto& [k, v] : all.correct_at) {
      out << report.target << ",C@" << k << ',' << format_double(v) << ',' << format_double(held.correct_at.at(k))
          << '\n';
    }
    out << report.target << ",mAP," << format_double(all.mean_avg_prec) << ',' << format_double(held.mean_avg_prec)
        << '\n';
  }
}

// Bins [i * width, (i + 1) * width) for i = 0..counts.size()-1.
struct Histogram {
  long long width = 1;
  std::vector<std::size_t> counts;

  std::size_t bin_of(long long value) const { return static_cast<std::size_t>(value / width); }

  void add(long long value) {
    std::size_t bin = bin_of(value);
    if (bin >= counts.size()) counts.resize(bin + 1, 0);
    ++counts[bin];
  }

  std::size_t total() const {
    std::size_t sum = 0;
    for (auto c : counts) sum += c;
    return sum;
  }
};

struct JointHistogram {
  long long row_width = 1;  // caption words
  long long col_width = 1;  // positives per query
  std::vector<std::vector<std::size_t>> counts;

  void add(long long row_value, long long col_value) {
    auto r = static_cast<std::size_t>(row_value / row_width);
    auto c = static_cast<std::size_t>(col_value / col_width);
    if (r >= counts.size()) counts.resize(r + 1);
    if (c >= counts[r].size()) counts[r].resize(c + 1, 0);
    ++counts[r][c];
  }

  void reshape(std::size_t rows, std::size_t cols) {
    counts.resize(rows);
    for (auto& row : counts) row.resize(cols, 0);
  }

  std::size_t total() const {
    std::size_t sum = 0;
    for (const auto& row : counts) {
      for (auto c : row) sum += c;
    }
    return sum;
  }
};

struct RankHistograms {
  Histogram original;
  Histogram pooled;
};

struct DistributionReport {
  std::size_t population = 0;
  Histogram positives_per_query;
  std::map<std::string, RankHistograms> positive_ranks;  // by system
  Histogram word_length;                                 // 1-word bins
  Histogram char_length{20, {}};                         // 20-character bins
  JointHistogram length_positives;                       // word length x positives
};

inline std::size_t word_count(std::string_view text) { return split_ws(text).size(); }

// Code points in a UTF-8 string.
inline std::size_t char_count(std::string_view text) {
  std::size_t n = 0;
  for (unsigned char c : text) n += (c & 0xC0) != 0x80 ? 1 : 0;
  return n;
}

// Population: test queries when query texts are given, else every judged
// query. Rank histograms cover every relevant item found in each run.
inline DistributionReport distributions(std::span<const RankedRun> runs, const JudgmentSet& judgments,
                                        std::span<const Query> queries) {
  DistributionReport report;
  std::vector<const Query*> population;
  std::vector<QueryId> ids;
  if (!queries.empty()) {
    for (const auto& query : queries) {
      if (query.split == Split::kTest) {
        population.push_back(&query);
        ids.push_back(query.id);
      }
    }
  } else {
    ids = judgments.queries();
  }
  report.population = ids.size();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto positives = static_cast<long long>(judgments.positives(ids[i]).size());
    report.positives_per_query.add(positives);
    if (!population.empty()) {
      const std::string& text = population[i]->text;
      auto words = static_cast<long long>(word_count(text));
      report.word_length.add(words);
      report.char_length.add(static_cast<long long>(char_count(text)));
      report.length_positives.add(words, positives);
    }
  }
  // Square off the joint grid so its marginals line up with the 1-D bins.
  if (!population.empty()) {
    report.length_positives.reshape(report.word_length.counts.size(), report.positives_per_query.counts.size());
  }

  std::set<QueryId> wanted(ids.begin(), ids.end());
  for (const auto& run : runs) {
    auto& hist = report.positive_ranks[run.system];
    for (const auto& [query, list] : run.entries) {
      if (!wanted.contains(query)) continue;
      for (std::size_t i = 0; i < list.size(); ++i) {
        const Judgment* judgment = judgments.find(query, list[i].item);
        if (judgment == nullptr || !judgment->relevant) continue;
        auto rank = static_cast<long long>(i + 1);
        (judgment->source == kOriginalSource ? hist.original : hist.pooled).add(rank);
      }
    }
  }
  return report;
}

inline nlohmann::ordered_json to_json(const Histogram& hist) {
  nlohmann::ordered_json edges = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i <= hist.counts.size(); ++i) edges.push_back(static_cast<long long>(i) * hist.width);
  return {{"bin_edges", edges}, {"counts", hist.counts}};
}

inline nlohmann::ordered_json to_json(const DistributionReport& report) {
  nlohmann::ordered_json doc;
  doc["format"] = "fneval.distribution_report";
  doc["version"] = 1;
  doc["population"] = report.population;
  doc["positives_per_query"] = to_json(report.positives_per_query);
  nlohmann::ordered_json ranks;
  for (const auto& [system, hist] : report.positive_ranks) {
    ranks[system] = {{"original", to_json(hist.original)}, {"pooled", to_json(hist.pooled)}};
  }
  doc["positive_ranks"] = ranks.is_null() ? nlohmann::ordered_json::object() : ranks;
  doc["word_length"] = to_json(report.word_length);
  doc["char_length"] = to_json(report.char_length);
  const auto& joint = report.length_positives;
  std::size_t total = joint.total();
  auto log_density = nlohmann::ordered_json::array();
  for (const auto& row : joint.counts) {
    auto out_row = nlohmann::ordered_json::array();
    for (auto c : row) {
      if (c == 0) {
        out_row.push_back(nullptr);
      } else {
        out_row.push_back(std::log10(static_cast<double>(c) / static_cast<double>(total)));
      }
    }
    log_density.push_back(out_row);
  }
  doc["length_positives"] = {{"row", "words"}, {"col", "positives"}, {"counts", joint.counts},
                             {"log10_density", log_density}};
  return doc;
}

// Long-format plot data: histogram,series,bin_lo,bin_hi,count
inline void write_csv(std::ostream& out, const DistributionReport& report) {
  out << "histogram,series,bin_lo,bin_hi,count\n";
  auto emit = [&](const std::string& name, const std::string& series, const Histogram& hist) {
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
      auto lo = static_cast<long long>(i) * hist.width;
      out << name << ',' << series << ',' << lo << ',' << lo + hist.width << ',' << hist.counts[i] << '\n';
    }
  };
  emit("positives_per_query", "", report.positives_per_query);
  for (const auto& [system, hist] : report.positive_ranks) {
    emit("positive_rank", system + ":original", hist.original);
    emit("positive_rank", system + ":pooled", hist.pooled);
  }
  emit("word_length", "", report.word_length);
  emit("char_length", "", report.char_length);
}

}  // namespace fneval
