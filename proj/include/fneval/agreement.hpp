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

// Inter-annotator agreement over pairs holding two or more non-escalated
// labels. Escalations are abstentions and are dropped first.

#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <span>

#include "fneval/pooling.hpp"
#include "json.hpp"

namespace fneval {

struct LabelCountBucket {
  std::size_t pairs = 0;
  std::size_t unanimous = 0;
  std::optional<double> agreement_rate() const {
    if (pairs == 0) return std::nullopt;
    return static_cast<double>(unanimous) / static_cast<double>(pairs);
  }
};

struct AgreementReport {
  std::size_t n_multi = 0;
  std::optional<double> agreement_rate;  // unanimity among multi-labeled pairs
  std::optional<double> majority_rate;   // multi-labeled pairs with a strict majority
  std::optional<double> alpha;           // nominal Krippendorff's alpha; none when undefined
  std::map<std::size_t, LabelCountBucket> by_label_count;
};

// Fills the rate fields; alpha is left unset.
inline AgreementReport agreement_rate(std::span<const LabelRecord> records) {
  AgreementReport report;
  std::size_t unanimous = 0, majority = 0;
  for (const auto& [pair, tally] : tally_records(records)) {
    std::size_t m = tally.labels();
    if (m < 2) continue;
    ++report.n_multi;
    bool all_same = tally.relevant == m || tally.irrelevant == m;
    unanimous += all_same ? 1 : 0;
    majority += (tally.relevant * 2 > m || tally.irrelevant * 2 > m) ? 1 : 0;
    auto& bucket = report.by_label_count[m];
    ++bucket.pairs;
    bucket.unanimous += all_same ? 1 : 0;
  }
  if (report.n_multi > 0) {
    double n = static_cast<double>(report.n_multi);
    report.agreement_rate = static_cast<double>(unanimous) / n;
    report.majority_rate = static_cast<double>(majority) / n;
  }
  return report;
}

// Nominal alpha from the coincidence matrix of binary labels:
//   o_ck = sum over units of (pairable c-k values) / (m_u - 1)
//   alpha = 1 - (n - 1) * (o_RI + o_IR) / (2 * n_R * n_I)
// Undefined (nullopt) when no unit has two labels or only one value occurs.
inline std::optional<double> krippendorff_alpha(std::span<const LabelRecord> records) {
  double o_rr = 0.0, o_ii = 0.0, o_ri = 0.0;
  for (const auto& [pair, tally] : tally_records(records)) {
    std::size_t m = tally.labels();
    if (m < 2) continue;
    double r = static_cast<double>(tally.relevant);
    double i = static_cast<double>(tally.irrelevant);
    double scale = static_cast<double>(m - 1);
    o_rr += r * (r - 1.0) / scale;
    o_ii += i * (i - 1.0) / scale;
    o_ri += r * i / scale;
  }
  double n_r = o_rr + o_ri;
  double n_i = o_ii + o_ri;
  double n = n_r + n_i;
  double expected = 2.0 * n_r * n_i;
  if (n <= 1.0 || expected == 0.0) return std::nullopt;
  return 1.0 - (n - 1.0) * (2.0 * o_ri) / expected;
}

inline AgreementReport agreement_report(std::span<const LabelRecord> records) {
  AgreementReport report = agreement_rate(records);
  report.alpha = krippendorff_alpha(records);
  return report;
}

inline nlohmann::ordered_json to_json(const AgreementReport& report) {
  using nlohmann::ordered_json;
  auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
  ordered_json doc;
  doc["format"] = "fneval.agreement_report";
  doc["version"] = 1;
  doc["n_multi"] = report.n_multi;
  doc["agreement_rate"] = opt(report.agreement_rate);
  doc["majority_rate"] = opt(report.majority_rate);
  doc["alpha"] = opt(report.alpha);
  ordered_json buckets = ordered_json::array();
  for (const auto& [labels, bucket] : report.by_label_count) {
    buckets.push_back({{"labels", labels}, {"pairs", bucket.pairs}, {"agreement_rate", opt(bucket.agreement_rate())}});
  }
  doc["by_label_count"] = buckets;
  return doc;
}

inline void write_csv(std::ostream& out, const AgreementReport& report) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  out << "labels,pairs,agreement_rate\n";
  out << "all," << report.n_multi << ',' << opt(report.agreement_rate) << '\n';
  for (const auto& [labels, bucket] : report.by_label_count) {
    out << labels << ',' << bucket.pairs << ',' << opt(bucket.agreement_rate()) << '\n';
  }
}

inline void write_table(std::ostream& out, const AgreementReport& report, std::span<const LabelRecord> records) {
  auto resolution = resolve_labels(records);
  auto pct = [](const std::optional<double>& v) { return v ? format_sig3(*v * 100.0) + "%" : std::string("n/a"); };
  auto three = [](const std::optional<double>& v) {
    if (!v) return std::string("undefined");
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.3f", *v);
    return std::string(buffer);
  };
  out << "Pairs labeled     " << resolution.outcomes.size() << '\n';
  out << "Resolved          " << pct(resolution.resolution_rate()) << '\n';
  out << "Multi-labeled     " << report.n_multi << '\n';
  out << "Agreement         " << pct(report.agreement_rate) << '\n';
  out << "Majority          " << pct(report.majority_rate) << '\n';
  out << "Alpha             " << three(report.alpha) << '\n';
  for (const auto& [labels, bucket] : report.by_label_count) {
    out << "  " << labels << " labels: " << bucket.pairs << " pairs, " << pct(bucket.agreement_rate()) << " agree\n";
  }
}

}  // namespace fneval
