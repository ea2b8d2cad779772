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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "demo_session.hpp"
#include "fneval/agreement.hpp"
#include "fneval/analysis.hpp"
#include "fneval/cli.hpp"
#include "fneval/metrics.hpp"
#include "fneval/pooling.hpp"
#include "fneval/stats.hpp"
#include "oracles.hpp"

namespace {

using namespace fneval;

const std::filesystem::path kSamples(FNEVAL_SAMPLES_DIR);

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first few mismatches.
class Verdict {
 public:
  void expect(bool condition, const std::string& what) {
    if (condition) return;
    if (failures_++ < 5) detail_ += (detail_.empty() ? "" : "; ") + what;
  }
  Outcome done(const std::string& summary) const {
    if (failures_ == 0) return {true, summary};
    return {false, std::to_string(failures_) + " mismatch(es): " + detail_};
  }

 private:
  std::size_t failures_ = 0;
  std::string detail_;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

// --- metric oracle --------------------------------------------------------

Outcome metric_oracle_equivalence() {
  const std::vector<int> ks{1, 5, 10, 50};
  Verdict verdict;
  auto start = std::chrono::steady_clock::now();
  std::size_t scored = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    auto corpus = oracle::random_corpus(seed);
    std::vector<std::string> expected_queries;
    for (const auto& [query, list] : corpus.lists) {
      if (!corpus.positives(query).empty()) expected_queries.push_back(query);
    }
    bool shared = false;
    for (const auto& [query, labels] : corpus.labels) shared = shared || corpus.lists.count(query);
    MetricReport report;
    try {
      EvalOptions options;
      options.ks = ks;
      report = evaluate(corpus.run(), corpus.judgments(), options);
    } catch (const Error& e) {
      verdict.expect(!shared && e.kind() == ErrorKind::kEmptyIntersection, "seed " + std::to_string(seed) + " threw");
      continue;
    }
    verdict.expect(report.per_query.size() == expected_queries.size(), "query set, seed " + std::to_string(seed));
    std::map<int, double> c_sum, r_sum;
    double ap_sum = 0.0;
    for (const auto& query : expected_queries) {
      auto it = report.per_query.find(QueryId(query));
      if (it == report.per_query.end()) {
        verdict.expect(false, "missing query " + query);
        continue;
      }
      const auto& m = it->second;
      const auto& list = corpus.lists.at(query);
      auto pos = corpus.positives(query);
      for (int k : ks) {
        int c = oracle::correct_at(list, pos, k);
        double r = oracle::recall_at(list, pos, k);
        verdict.expect(m.correct_at.at(k) == c, "C@" + std::to_string(k) + " seed " + std::to_string(seed));
        verdict.expect(std::fabs(m.recall_at.at(k) - r) <= 1e-12, "R@" + std::to_string(k));
        c_sum[k] += c;
        r_sum[k] += r;
      }
      double ap = oracle::average_precision(list, pos);
      verdict.expect(std::fabs(m.avg_prec - ap) <= 1e-12, "AP seed " + std::to_string(seed));
      verdict.expect(m.first_pos_rank == oracle::first_rank(list, pos), "first rank seed " + std::to_string(seed));
      ap_sum += ap;
      ++scored;
    }
    if (expected_queries.empty()) continue;
    double n = static_cast<double>(expected_queries.size());
    for (int k : ks) {
      verdict.expect(std::fabs(report.aggregate.correct_at.at(k) - c_sum[k] / n) <= 1e-12, "mean C@K");
      verdict.expect(std::fabs(report.aggregate.recall_at.at(k) - r_sum[k] / n) <= 1e-12, "mean R@K");
    }
    verdict.expect(std::fabs(report.aggregate.mean_avg_prec - ap_sum / n) <= 1e-12, "mAP");
  }
  double elapsed = seconds_since(start);
  verdict.expect(elapsed < 10.0, "took " + std::to_string(elapsed) + " s");
  return verdict.done("1000 corpora, " + std::to_string(scored) + " queries, " + fixed3(elapsed) + " s");
}

Outcome reduction_law() {
  Verdict verdict;
  std::size_t checked = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    auto corpus = oracle::random_corpus(seed, 20, 50, true);
    EvalOptions options;
    options.ks = {1, 2, 3, 5, 10, 50};
    MetricReport report;
    try {
      report = evaluate(corpus.run(), corpus.judgments(), options);
    } catch (const Error&) {
      continue;
    }
    for (const auto& [query, m] : report.per_query) {
      for (int k : options.ks) {
        verdict.expect(m.recall_at.at(k) == static_cast<double>(m.correct_at.at(k)), "query " + query.str());
        ++checked;
      }
    }
    for (int k : options.ks) {
      verdict.expect(report.aggregate.recall_at.at(k) == report.aggregate.correct_at.at(k), "aggregate");
    }
  }
  return verdict.done(std::to_string(checked) + " (query, K) cells with R@K == C@K");
}

// --- bench fixture --------------------------------------------------------

// Plain readers, independent of the library parsers.
using Lists = std::map<std::string, oracle::List>;
struct QrelLabel {
  bool relevant;
  std::string source;
};
using Labels = std::map<std::string, std::map<std::string, QrelLabel>>;

Lists read_run(const std::filesystem::path& path) {
  std::map<std::string, std::map<int, std::string>> by_rank;
  std::ifstream in(path);
  std::string q, item, tag;
  int rank;
  double score;
  while (in >> q >> item >> rank >> score >> tag) by_rank[q][rank] = item;
  Lists lists;
  for (const auto& [query, ranks] : by_rank) {
    for (const auto& [r, it] : ranks) lists[query].push_back(it);
  }
  return lists;
}

Labels read_qrels(const std::filesystem::path& path) {
  Labels labels;
  std::ifstream in(path);
  std::string q, item, source;
  int rel;
  while (in >> q >> item >> rel >> source) labels[q][item] = QrelLabel{rel == 1, source};
  return labels;
}

// Relevant wins.
Labels union_of(Labels a, const Labels& b) {
  for (const auto& [q, items] : b) {
    for (const auto& [item, label] : items) {
      auto [it, inserted] = a[q].emplace(item, label);
      if (!inserted) it->second.relevant = it->second.relevant || label.relevant;
    }
  }
  return a;
}

oracle::Positives positives_of(const Labels& labels, const std::string& q) {
  oracle::Positives pos;
  if (auto it = labels.find(q); it != labels.end()) {
    for (const auto& [item, label] : it->second) {
      if (label.relevant) pos.insert(item);
    }
  }
  return pos;
}

struct Means {
  std::map<int, double> c, r;
  double ap = 0.0;
};

Means brute_means(const Lists& lists, const Labels& labels, const std::vector<std::string>& queries,
                  const std::vector<int>& ks) {
  Means sums;
  for (const auto& q : queries) {
    auto pos = positives_of(labels, q);
    for (int k : ks) {
      sums.c[k] += oracle::correct_at(lists.at(q), pos, k);
      sums.r[k] += oracle::recall_at(lists.at(q), pos, k);
    }
    sums.ap += oracle::average_precision(lists.at(q), pos);
  }
  double n = static_cast<double>(queries.size());
  for (int k : ks) {
    sums.c[k] /= n;
    sums.r[k] /= n;
  }
  sums.ap /= n;
  return sums;
}

std::vector<std::string> queries_with_positives(const Lists& lists, const Labels& labels) {
  std::vector<std::string> out;
  for (const auto& [q, list] : lists) {
    if (!positives_of(labels, q).empty()) out.push_back(q);
  }
  return out;
}

Outcome bench_delta_report() {
  const std::vector<int> ks = kDefaultKs;
  auto dir = kSamples / "bench";
  auto original = read_qrels(dir / "original.qrels");
  auto corrected = read_qrels(dir / "corrected.qrels");
  const std::map<std::string, std::string> expected_cells{{"sysA", "67.4 (42.4 + 25.0)%"},
                                                          {"sysB", "24.1 (23.3 + 0.800)%"}};
  Verdict verdict;
  std::string summary;
  for (const auto& [system, cell] : expected_cells) {
    auto lists = read_run(dir / (system + ".run"));
    auto queries = queries_with_positives(lists, original);
    auto a = brute_means(lists, corrected, queries, ks);
    auto b = brute_means(lists, original, queries, ks);

    auto report = delta_report(parse_run(dir / (system + ".run")), parse_judgments(dir / "original.qrels"),
                               parse_judgments(dir / "corrected.qrels"), ks);
    verdict.expect(report.corrected_is_superset, system + " superset flag");
    verdict.expect(report.rows.size() == 2 * ks.size() + 1, system + " row count");
    for (const auto& row : report.rows) {
      double ea, eb;
      if (row.metric == "mAP") {
        ea = a.ap;
        eb = b.ap;
      } else {
        int k = std::stoi(row.metric.substr(2));
        ea = row.metric[0] == 'C' ? a.c.at(k) : a.r.at(k);
        eb = row.metric[0] == 'C' ? b.c.at(k) : b.r.at(k);
      }
      verdict.expect(row.corrected == ea, system + " " + row.metric + " A");
      verdict.expect(row.original == eb, system + " " + row.metric + " B");
      verdict.expect(row.delta == ea - eb, system + " " + row.metric + " C");
      verdict.expect(std::fabs(row.original + row.delta - row.corrected) <= 1e-15, system + " A = B + C");
    }
    std::string got = format_delta_cell(report.rows.front());
    verdict.expect(report.rows.front().metric == "C@1" && got == cell, system + " C@1 cell '" + got + "'");
    summary += (summary.empty() ? "" : ", ") + system + " C@1 " + got;
  }
  return verdict.done(summary);
}

Outcome bench_leave_one_out() {
  auto dir = kSamples / "bench";
  auto original = read_qrels(dir / "original.qrels");
  auto pooled = read_qrels(dir / "pooled.qrels");
  std::map<std::string, std::pair<std::string, std::string>> expected{{"sysA", {"0.674", "0.430"}},
                                                                      {"sysB", {"0.241", "0.239"}}};
  std::vector<RankedRun> runs{parse_run(dir / "sysA.run"), parse_run(dir / "sysB.run")};
  auto lib_original = parse_judgments(dir / "original.qrels");
  auto lib_pooled = parse_judgments(dir / "pooled.qrels");
  Verdict verdict;
  std::string summary;
  for (const auto& [system, values] : expected) {
    Labels kept;
    std::size_t withheld = 0;
    for (const auto& [q, items] : pooled) {
      for (const auto& [item, label] : items) {
        std::string systems = label.source.substr(std::string("pooled:").size());
        std::stringstream ss(systems);
        bool other = false;
        for (std::string s; std::getline(ss, s, ',');) other = other || s != system;
        if (other) kept[q][item] = label;
        else ++withheld;
      }
    }
    auto lists = read_run(dir / (system + ".run"));
    auto held = union_of(original, kept);
    auto all = union_of(original, pooled);
    auto queries = queries_with_positives(lists, held);
    auto new_means = brute_means(lists, held, queries, {1});
    auto all_means = brute_means(lists, all, queries, {1});

    auto report = leave_one_out(runs, lib_original, lib_pooled, system, {1});
    verdict.expect(report.withheld_labels == withheld, system + " withheld count");
    double got_all = report.all.aggregate.correct_at.at(1);
    double got_new = report.held_out.aggregate.correct_at.at(1);
    verdict.expect(got_all == all_means.c.at(1), system + " all");
    verdict.expect(got_new == new_means.c.at(1), system + " new");
    verdict.expect(fixed3(got_all) == values.first && fixed3(got_new) == values.second,
                   system + " " + fixed3(got_all) + "/" + fixed3(got_new));
    summary += (summary.empty() ? "" : ", ") + system + " all/new " + fixed3(got_all) + "/" + fixed3(got_new);
  }
  return verdict.done(summary);
}

// --- rbo, alpha, bootstrap ------------------------------------------------

std::vector<ItemId> ids(const oracle::List& list) {
  std::vector<ItemId> out;
  for (const auto& s : list) out.emplace_back(s);
  return out;
}

Outcome rbo_properties() {
  Verdict verdict;
  verdict.expect(rbo(ids({"a", "b"}), ids({"b", "a"}), 0.5, 2) == 0.5, "hand case");
  std::mt19937_64 gen(2026);
  for (int trial = 0; trial < 1000; ++trial) {
    double p = 0.05 + 0.9 * std::uniform_real_distribution<double>(0, 1)(gen);
    int depth = 1 + static_cast<int>(gen() % 20);
    oracle::List universe;
    for (int i = 0; i < 30; ++i) universe.push_back("v" + std::to_string(i));
    auto a = universe, b = universe;
    std::shuffle(a.begin(), a.end(), gen);
    std::shuffle(b.begin(), b.end(), gen);
    // Full-depth lists; shorter ones are normalized by D and score below 1.
    a.resize(static_cast<std::size_t>(depth) + gen() % 5);
    b.resize(static_cast<std::size_t>(depth) + gen() % 5);
    oracle::List disjoint;
    for (const auto& item : a) disjoint.push_back(item + "'");
    double ab = rbo(ids(a), ids(b), p, depth);
    verdict.expect(rbo(ids(a), ids(a), p, depth) == 1.0, "identity");
    verdict.expect(rbo(ids(a), ids(disjoint), p, depth) == 0.0, "disjoint");
    verdict.expect(ab == rbo(ids(b), ids(a), p, depth), "symmetry");
    verdict.expect(ab >= 0.0 && ab <= 1.0, "bounds");
    verdict.expect(std::fabs(ab - oracle::rbo_extrapolated(a, b, p, depth)) <= 1e-12, "closed form");
  }
  return verdict.done("hand case 0.5; 1000 trials of identity, disjointness, symmetry, bounds");
}

std::vector<LabelRecord> unit_records(const std::vector<std::vector<int>>& units) {
  std::vector<oracle::ScriptedLabel> script;
  for (std::size_t u = 0; u < units.size(); ++u) {
    for (std::size_t r = 0; r < units[u].size(); ++r) {
      script.push_back({"q" + std::to_string(u), "v", "r" + std::to_string(r),
                        units[u][r] ? fneval::Label::kRelevant : fneval::Label::kIrrelevant});
    }
  }
  return oracle::records(script);
}

Outcome alpha_properties() {
  Verdict verdict;
  auto hand = krippendorff_alpha(unit_records({{1, 1}, {1, 1}, {1, 0}, {0, 0}}));
  verdict.expect(hand && std::fabs(*hand - 8.0 / 15.0) <= 1e-12, "hand case");
  std::mt19937_64 gen(7);
  std::size_t perfect = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::vector<int>> units, same;
    for (std::size_t u = 0, n = 2 + gen() % 30; u < n; ++u) {
      std::vector<int> unit, agreeing;
      int first = static_cast<int>(gen() % 2);
      for (std::size_t m = 0, size = 1 + gen() % 4; m < size; ++m) {
        unit.push_back(static_cast<int>(gen() % 2));
        agreeing.push_back(first);
      }
      units.push_back(unit);
      same.push_back(agreeing);
    }
    auto swapped = units;
    for (auto& unit : swapped) {
      for (int& v : unit) v = 1 - v;
    }
    auto base = krippendorff_alpha(unit_records(units));
    auto flipped = krippendorff_alpha(unit_records(swapped));
    verdict.expect(base.has_value() == flipped.has_value(), "swap definedness");
    if (base && flipped) verdict.expect(std::fabs(*base - *flipped) <= 1e-12, "swap invariance");
    if (auto unanimous = krippendorff_alpha(unit_records(same))) {
      verdict.expect(*unanimous == 1.0, "perfect agreement");
      ++perfect;
    }
  }
  return verdict.done("8/15 hand case; " + std::to_string(perfect) + " unanimous samples at exactly 1");
}

Outcome bootstrap_deviation_check() {
  std::vector<double> scores(653, 1.0);
  scores.insert(scores.end(), 347, 0.0);
  auto start = std::chrono::steady_clock::now();
  auto first = bootstrap_deviation(scores, 1000, 10000, 2026, 1);
  double elapsed = seconds_since(start);
  auto second = bootstrap_deviation(scores, 1000, 10000, 2026, 1);
  Verdict verdict;
  const double target = 0.0295;
  verdict.expect(std::fabs(first.percentile_95 - target) <= 0.1 * target,
                 "95th percentile " + std::to_string(first.percentile_95));
  verdict.expect(elapsed < 60.0, "took " + std::to_string(elapsed) + " s");
  verdict.expect(to_json(first).dump() == to_json(second).dump(), "same seed, different bytes");
  return verdict.done("95th percentile " + fixed3(first.percentile_95 * 100) + "% in " + fixed3(elapsed) + " s");
}

// --- scripted resolution --------------------------------------------------

// 100 pairs, one per line of the table below:
//   60 single labels (30 R, 30 I); 10 of them also carry an escalation
//   10 RR, 10 II                  -> resolved, unanimous
//   10 RI                         -> pending a third label
//    5 RRI                        -> resolved relevant by majority
//    2 RRII                       -> tied, unresolved, over-labeled warning
//    3 escalated only             -> escalated
//
// Agreement over the 37 multi-labeled pairs: 20 unanimous -> 20/37.
// Coincidence counts (escalations excluded):
//   o_RR = 20 + 5*1 + 2*(2/3), o_II = 20 + 2*(2/3), o_RI = 10 + 5*1 + 2*(4/3) = 53/3
//   n_R = 44, n_I = 39, n = 83
//   alpha = 1 - (n-1) * o_RI / (n_R * n_I) = 1 - 82 * 53 / (3 * 1716) = 401/2574
Outcome scripted_resolution() {
  using fneval::Label;
  const Label R = Label::kRelevant, I = Label::kIrrelevant, E = Label::kEscalated;
  std::vector<oracle::ScriptedLabel> script;
  std::map<PairKey, std::set<std::string>> attribution;
  int pair_no = 0;
  auto add_pair = [&](std::vector<Label> labels) {
    std::string item = "v" + std::to_string(pair_no++);
    attribution[PairKey{QueryId("q"), ItemId(item)}] = {pair_no % 2 ? "sysA" : "sysB"};
    for (std::size_t r = 0; r < labels.size(); ++r) {
      script.push_back({"q", item, "ann" + std::to_string(r + 1), labels[r]});
    }
  };
  for (int i = 0; i < 30; ++i) add_pair(i < 5 ? std::vector<Label>{R, E} : std::vector<Label>{R});
  for (int i = 0; i < 30; ++i) add_pair(i < 5 ? std::vector<Label>{E, I} : std::vector<Label>{I});
  for (int i = 0; i < 10; ++i) add_pair({R, R});
  for (int i = 0; i < 10; ++i) add_pair({I, I});
  for (int i = 0; i < 10; ++i) add_pair({R, I});
  for (int i = 0; i < 5; ++i) add_pair({R, I, R});
  for (int i = 0; i < 2; ++i) add_pair({R, I, I, R});
  for (int i = 0; i < 3; ++i) add_pair({E});
  // Interleave pairs so records are not grouped.
  std::mt19937_64 gen(100);
  std::shuffle(script.begin(), script.end(), gen);
  auto records = oracle::records(script);

  auto resolution = resolve_labels(records, &attribution);
  auto agreement = agreement_report(records);
  Verdict verdict;
  verdict.expect(pair_no == 100, "script size");
  verdict.expect(resolution.outcomes.size() == 100, "outcome count");
  verdict.expect(resolution.count(ResolutionStatus::kResolved) == 85, "resolved");
  verdict.expect(resolution.count(ResolutionStatus::kPending) == 10, "pending");
  verdict.expect(resolution.count(ResolutionStatus::kUnresolved) == 2, "tied");
  verdict.expect(resolution.count(ResolutionStatus::kEscalated) == 3, "escalated");
  verdict.expect(resolution.pending.size() == 10, "pending jobs");
  for (const auto& job : resolution.pending) {
    verdict.expect(job.excluded_raters == std::set<std::string>{"ann1", "ann2"}, "pending exclusions");
  }
  verdict.expect(resolution.warnings.size() == 2, "over-labeled warnings");
  verdict.expect(resolution.judgments.size() == 85 && resolution.judgments.num_relevant() == 45, "judgments");
  bool sources_ok = true;
  for (const auto& [query, labels] : resolution.judgments.by_query()) {
    for (const auto& [item, judgment] : labels) {
      const auto& systems = attribution.at(PairKey{query, item});
      sources_ok = sources_ok && judgment.source == "pooled:" + *systems.begin();
    }
  }
  verdict.expect(sources_ok, "pooled:<system> sources");
  verdict.expect(agreement.n_multi == 37, "multi-labeled pairs");
  verdict.expect(agreement.agreement_rate && *agreement.agreement_rate == 20.0 / 37.0, "agreement rate");
  verdict.expect(agreement.alpha && std::fabs(*agreement.alpha - 401.0 / 2574.0) <= 1e-12, "alpha");
  return verdict.done("85 resolved, 10 pending, 2 tied, 3 escalated; agreement 20/37; alpha " +
                      fixed3(agreement.alpha.value_or(-1)));
}

// --- online vs offline ----------------------------------------------------

Outcome online_offline_equivalence() {
  auto fixture = demo::load(kSamples / "demo");
  auto session = demo::run_session(fixture);
  Verdict verdict;
  verdict.expect(session.open_jobs_after == 0, "jobs left open");
  verdict.expect(session.progress["unlabeled"] == 0, "unlabeled pairs");
  for (const auto& system : demo::kSystems) {
    verdict.expect(session.metrics.at(system) == demo::offline_metrics(fixture, session.log, system),
                   system + " metrics differ");
  }

  // Same comparison through the command line: resolve the exported log, then
  // eval against original + resolved judgments.
  auto dir = std::filesystem::temp_directory_path() / ("fneval_accept_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "labels.jsonl") << session.log;
    std::ofstream prov(dir / "pool.provenance.txt");
    write_provenance(prov, fixture.pool);
  }
  auto cli = [&](std::vector<std::string> args) {
    args.insert(args.begin(), "fneval");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    return cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  };
  auto path = [&](const std::string& name) { return (dir / name).string(); };
  verdict.expect(cli({"resolve", "--labels", path("labels.jsonl"), "--provenance", path("pool.provenance.txt"),
                      "--out", path("res")}) == 0,
                 "cli resolve");
  for (const auto& system : demo::kSystems) {
    int code = cli({"eval", "--run", (kSamples / "demo" / (system + ".run")).string(), "--qrels",
                    (kSamples / "demo" / "original.qrels").string(), path("res.qrels.txt"), "--format", "json",
                    "--out", path(system)});
    verdict.expect(code == 0, system + " cli eval");
    if (code != 0) continue;
    std::ifstream in(dir / (system + ".metrics.json"));
    auto offline = nlohmann::json::parse(in);
    const auto& live = session.metrics.at(system);
    verdict.expect(offline["aggregate"] == live["aggregate"] && offline["per_query"] == live["per_query"],
                   system + " cli metrics differ");
  }
  std::filesystem::remove_all(dir);
  return verdict.done(std::to_string(fixture.pool.size()) + " pairs, " + std::to_string(session.submitted) +
                      " labels over HTTP; live metrics equal library and CLI recomputation for 3 runs");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"metric-oracle-equivalence", metric_oracle_equivalence},
      {"single-positive-reduction", reduction_law},
      {"bench-delta-report", bench_delta_report},
      {"bench-leave-one-out", bench_leave_one_out},
      {"rbo-properties", rbo_properties},
      {"alpha-properties", alpha_properties},
      {"bootstrap-deviation", bootstrap_deviation_check},
      {"scripted-resolution", scripted_resolution},
      {"online-offline-equivalence", online_offline_equivalence},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    failed += outcome.pass ? 0 : 1;
    std::cout << (outcome.pass ? "PASS " : "FAIL ") << name << "  " << outcome.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
