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

// Brute-force reference implementations used by the tests. They work on
// plain standard containers and follow the textbook definitions directly,
// sharing no code with the library.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fneval/corpus.hpp"
#include "fneval/pooling.hpp"

namespace oracle {

using List = std::vector<std::string>;
using Positives = std::set<std::string>;

inline int correct_at(const List& ranked, const Positives& pos, int k) {
  for (int i = 0; i < k && i < static_cast<int>(ranked.size()); ++i) {
    if (pos.count(ranked[i])) return 1;
  }
  return 0;
}

inline double recall_at(const List& ranked, const Positives& pos, int k) {
  int hits = 0;
  for (int i = 0; i < k && i < static_cast<int>(ranked.size()); ++i) hits += pos.count(ranked[i]) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(pos.size());
}

// Precision recomputed from scratch at every relevant position.
inline double average_precision(const List& ranked, const Positives& pos) {
  double sum = 0.0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    if (!pos.count(ranked[k])) continue;
    int hits = 0;
    for (std::size_t j = 0; j <= k; ++j) hits += pos.count(ranked[j]) ? 1 : 0;
    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  return sum / static_cast<double>(pos.size());
}

inline std::optional<int> first_rank(const List& ranked, const Positives& pos) {
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (pos.count(ranked[i])) return static_cast<int>(i + 1);
  }
  return std::nullopt;
}

// A random evaluation corpus: ranked lists, and binary judgments on a subset
// of (query, item) pairs.
struct Corpus {
  std::string system = "fuzz";
  std::map<std::string, List> lists;
  std::map<std::string, std::map<std::string, bool>> labels;

  Positives positives(const std::string& query) const {
    Positives pos;
    if (auto it = labels.find(query); it != labels.end()) {
      for (const auto& [item, relevant] : it->second) {
        if (relevant) pos.insert(item);
      }
    }
    return pos;
  }

  fneval::RankedRun run() const {
    fneval::RankedRun run;
    run.system = system;
    for (const auto& [query, list] : lists) {
      auto& entries = run.entries[fneval::QueryId(query)];
      for (std::size_t i = 0; i < list.size(); ++i) {
        entries.push_back(fneval::RunEntry{fneval::ItemId(list[i]), 100.0 - static_cast<double>(i),
                                           static_cast<int>(i + 1)});
      }
    }
    return run;
  }

  fneval::JudgmentSet judgments(const std::string& source = "original") const {
    fneval::JudgmentSet set;
    for (const auto& [query, items] : labels) {
      for (const auto& [item, relevant] : items) {
        set.add(fneval::QueryId(query), fneval::ItemId(item), relevant, source);
      }
    }
    return set;
  }
};

// At most `max_queries` queries over at most `max_items` items. Every query
// gets a ranked list; the first query and about 80% of the rest get judgments.
inline Corpus random_corpus(std::uint64_t seed, int max_queries = 20, int max_items = 50,
                            bool single_positive = false) {
  std::mt19937_64 gen(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); };
  Corpus corpus;
  int num_queries = pick(1, max_queries);
  int num_items = pick(1, max_items);
  List items;
  for (int i = 0; i < num_items; ++i) items.push_back("v" + std::to_string(i));
  for (int q = 0; q < num_queries; ++q) {
    std::string query = "q" + std::to_string(q);
    List shuffled = items;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    shuffled.resize(static_cast<std::size_t>(pick(1, num_items)));
    corpus.lists[query] = shuffled;
    if (q > 0 && pick(0, 4) == 0) continue;
    auto& labels = corpus.labels[query];
    if (single_positive) {
      labels[items[static_cast<std::size_t>(pick(0, num_items - 1))]] = true;
      for (int j = pick(0, 5); j > 0; --j) labels.emplace(items[static_cast<std::size_t>(pick(0, num_items - 1))], false);
    } else {
      for (const auto& item : items) {
        int roll = pick(0, 9);
        if (roll < 2) labels[item] = true;
        else if (roll < 4) labels[item] = false;
      }
    }
    if (labels.empty()) corpus.labels.erase(query);
  }
  return corpus;
}

// Extrapolated RBO straight from its closed form:
//   X_D/D * p^D + (1-p)/p * sum_{d=1..D} X_d/d * p^d
inline double rbo_extrapolated(const List& a, const List& b, double p, int depth) {
  auto overlap = [&](int d) {
    std::set<std::string> sa(a.begin(), a.begin() + std::min<long>(d, static_cast<long>(a.size())));
    std::set<std::string> sb(b.begin(), b.begin() + std::min<long>(d, static_cast<long>(b.size())));
    int x = 0;
    for (const auto& s : sa) x += sb.count(s) ? 1 : 0;
    return static_cast<double>(x);
  };
  double sum = 0.0;
  for (int d = 1; d <= depth; ++d) sum += overlap(d) / d * std::pow(p, d);
  return overlap(depth) / depth * std::pow(p, depth) + (1.0 - p) / p * sum;
}

// Nominal alpha from pairwise disagreements:
//   D_o = 1/n * sum_u 1/(m_u - 1) * #ordered disagreeing pairs in u
//   D_e = 1/(n(n-1)) * #ordered disagreeing pairs over all values
inline std::optional<double> alpha(const std::vector<std::vector<int>>& units) {
  std::vector<int> values;
  double observed = 0.0;
  for (const auto& unit : units) {
    if (unit.size() < 2) continue;
    double disagree = 0.0;
    for (std::size_t i = 0; i < unit.size(); ++i) {
      for (std::size_t j = 0; j < unit.size(); ++j) disagree += (i != j && unit[i] != unit[j]) ? 1.0 : 0.0;
    }
    observed += disagree / static_cast<double>(unit.size() - 1);
    values.insert(values.end(), unit.begin(), unit.end());
  }
  double n = static_cast<double>(values.size());
  double expected = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t j = 0; j < values.size(); ++j) expected += (i != j && values[i] != values[j]) ? 1.0 : 0.0;
  }
  if (n < 2 || expected == 0.0) return std::nullopt;
  return 1.0 - (observed / n) / (expected / (n * (n - 1.0)));
}

// Tau-b by enumerating every pair.
inline std::optional<double> kendall(const std::vector<double>& x, const std::vector<double>& y) {
  double concordant = 0, discordant = 0, tie_x = 0, tie_y = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0 && dy == 0) continue;
      if (dx == 0) tie_x += 1;
      else if (dy == 0) tie_y += 1;
      else if ((dx > 0) == (dy > 0)) concordant += 1;
      else discordant += 1;
    }
  }
  double denom = std::sqrt((concordant + discordant + tie_x) * (concordant + discordant + tie_y));
  if (denom == 0) return std::nullopt;
  return (concordant - discordant) / denom;
}

inline std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0, equal = 0;
      for (double w : v) {
        less += w < v[i] ? 1 : 0;
        equal += w == v[i] ? 1 : 0;
      }
      r[i] = less + (equal + 1) / 2;
    }
    return r;
  };
  auto rx = ranks(x), ry = ranks(y);
  double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i] / n;
    my += ry[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

// Builds label records with one-second spacing from (query, item, rater, label).
struct ScriptedLabel {
  std::string query, item, rater;
  fneval::Label label;
};

inline std::vector<fneval::LabelRecord> records(const std::vector<ScriptedLabel>& script) {
  std::vector<fneval::LabelRecord> out;
  fneval::Timestamp t{std::chrono::milliseconds(1'800'000'000'000)};
  for (const auto& s : script) {
    out.push_back(fneval::LabelRecord{fneval::PairKey{fneval::QueryId(s.query), fneval::ItemId(s.item)}, s.rater,
                                      s.label, t});
    t += std::chrono::seconds(1);
  }
  return out;
}

}  // namespace oracle
