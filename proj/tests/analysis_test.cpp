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

#include <gtest/gtest.h>

#include <sstream>

#include "fneval/analysis.hpp"
#include "oracles.hpp"

namespace fneval {
namespace {

std::vector<ItemId> ids(const oracle::List& list) {
  std::vector<ItemId> out;
  for (const auto& s : list) out.emplace_back(s);
  return out;
}

oracle::List random_list(std::mt19937_64& gen, int universe, int length) {
  oracle::List all;
  for (int i = 0; i < universe; ++i) all.push_back("v" + std::to_string(i));
  std::shuffle(all.begin(), all.end(), gen);
  all.resize(static_cast<std::size_t>(std::min(universe, length)));
  return all;
}

TEST(Rbo, HandComputedTwoElementCase) {
  EXPECT_EQ(rbo(ids({"a", "b"}), ids({"b", "a"}), 0.5, 2), 0.5);
  EXPECT_DOUBLE_EQ(rbo(ids({"a", "b"}), ids({"b", "a"}), 0.5, 2, RboVariant::kTruncated), 0.25);
}

TEST(Rbo, IdentityDisjointSymmetry) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 1000; ++trial) {
    double p = 0.05 + 0.9 * std::uniform_real_distribution<double>(0, 1)(gen);
    int depth = 1 + static_cast<int>(gen() % 20);
    auto a = random_list(gen, 30, 20), b = random_list(gen, 30, 20);
    oracle::List disjoint;
    for (const auto& item : a) disjoint.push_back(item + "x");
    ASSERT_EQ(rbo(ids(a), ids(a), p, depth), 1.0);
    ASSERT_EQ(rbo(ids(a), ids(disjoint), p, depth), 0.0);
    ASSERT_EQ(rbo(ids(a), ids(b), p, depth), rbo(ids(b), ids(a), p, depth));
    double value = rbo(ids(a), ids(b), p, depth);
    ASSERT_GE(value, 0.0);
    ASSERT_LE(value, 1.0);
    ASSERT_NEAR(value, oracle::rbo_extrapolated(a, b, p, depth), 1e-12);
    ASSERT_LE(rbo(ids(a), ids(b), p, depth, RboVariant::kTruncated), value + 1e-15);
  }
}

TEST(Overlap, PlainOverlap) {
  EXPECT_DOUBLE_EQ(plain_overlap(ids({"a", "b", "c"}), ids({"c", "x", "a"}), 3), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(plain_overlap(ids({"a"}), ids({"a"}), 2), 0.5);
}

TEST(Overlap, ReportAveragesSharedQueries) {
  oracle::Corpus a, b;
  a.system = "a";
  b.system = "b";
  a.lists["q1"] = {"x", "y"};
  b.lists["q1"] = {"y", "z"};
  a.lists["q2"] = {"x", "y"};
  b.lists["q2"] = {"x", "y"};
  a.lists["q3"] = {"x", "y"};
  std::vector<RankedRun> runs{a.run(), b.run()};
  auto report = overlap_report(runs, 2, 0.5);
  ASSERT_EQ(report.pairs.size(), 1u);
  EXPECT_EQ(report.pairs[0].per_query.size(), 2u);
  EXPECT_DOUBLE_EQ(report.pairs[0].mean_overlap, 0.75);
  std::ostringstream csv;
  write_csv(csv, report);
  EXPECT_EQ(csv.str(), "system_a,system_b,num_queries,mean_overlap,mean_rbo\na,b,2,0.75," +
                           format_double(report.pairs[0].mean_rbo) + "\n");
}

struct AblationFixture {
  std::vector<RankedRun> runs;
  JudgmentSet original, pooled;
};

// Two queries. Query q1: the original positive is at rank 2 for both systems;
// system a alone retrieved a pooled positive at rank 1. Query q2: both systems
// retrieved the same pooled positive at rank 1.
AblationFixture ablation_fixture() {
  oracle::Corpus a, b;
  a.system = "a";
  b.system = "b";
  a.lists["q1"] = {"pa", "gt1", "n1"};
  b.lists["q1"] = {"n2", "gt1", "n3"};
  a.lists["q2"] = {"ps", "n4", "gt2"};
  b.lists["q2"] = {"ps", "gt2", "n5"};
  AblationFixture fixture;
  fixture.runs = {a.run(), b.run()};
  fixture.original.add(QueryId("q1"), ItemId("gt1"), true, "original");
  fixture.original.add(QueryId("q2"), ItemId("gt2"), true, "original");
  fixture.pooled.add(QueryId("q1"), ItemId("pa"), true, "pooled:a");
  fixture.pooled.add(QueryId("q1"), ItemId("n1"), false, "pooled:a");
  fixture.pooled.add(QueryId("q1"), ItemId("n2"), false, "pooled:b");
  fixture.pooled.add(QueryId("q2"), ItemId("ps"), true, "pooled:a,b");
  return fixture;
}

TEST(Ablation, WithholdsOnlySoleContributions) {
  auto fixture = ablation_fixture();
  auto a = leave_one_out(fixture.runs, fixture.original, fixture.pooled, "a", {1});
  EXPECT_EQ(a.withheld_labels, 2u);
  EXPECT_DOUBLE_EQ(a.all.aggregate.correct_at.at(1), 1.0);
  EXPECT_DOUBLE_EQ(a.held_out.aggregate.correct_at.at(1), 0.5);
  auto b = leave_one_out(fixture.runs, fixture.original, fixture.pooled, "b", {1});
  EXPECT_EQ(b.withheld_labels, 1u);
  EXPECT_DOUBLE_EQ(b.all.aggregate.correct_at.at(1), b.held_out.aggregate.correct_at.at(1));
}

TEST(Ablation, RequiresProvenance) {
  auto fixture = ablation_fixture();
  fixture.pooled.set(QueryId("q2"), ItemId("n5"), Judgment{false, "pooled"});
  try {
    leave_one_out(fixture.runs, fixture.original, fixture.pooled, "a");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMissingProvenance);
  }
  EXPECT_THROW(leave_one_out(fixture.runs, fixture.original, ablation_fixture().pooled, "zzz"), Error);
}

TEST(Ablation, NeverRaisesHeldOutCorrect) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto a = oracle::random_corpus(seed), b = oracle::random_corpus(seed + 500);
    a.system = "a";
    b.system = "b";
    b.lists = a.lists;
    std::mt19937_64 gen(seed);
    for (auto& [query, list] : b.lists) std::shuffle(list.begin(), list.end(), gen);
    std::vector<RankedRun> runs{a.run(), b.run()};
    JudgmentSet original, pooled;
    for (const auto& [query, labels] : a.labels) {
      for (const auto& [item, relevant] : labels) {
        if (gen() % 3 == 0) original.add(QueryId(query), ItemId(item), relevant, "original");
        else pooled.add(QueryId(query), ItemId(item), relevant, gen() % 2 ? "pooled:a" : "pooled:a,b");
      }
    }
    AblationReport report;
    try {
      report = leave_one_out(runs, original, pooled, "a", {1, 5});
    } catch (const Error& e) {
      ASSERT_EQ(e.kind(), ErrorKind::kEmptyIntersection);
      continue;
    }
    for (int k : {1, 5}) ASSERT_LE(report.held_out.aggregate.correct_at.at(k), report.all.aggregate.correct_at.at(k));
  }
}

TEST(Distributions, HistogramsAndCsv) {
  oracle::Corpus run;
  run.system = "s";
  run.lists["t1"] = {"a", "b", "c"};
  run.lists["t2"] = {"d", "e"};
  JudgmentSet judgments;
  judgments.add(QueryId("t1"), ItemId("a"), true, "original");
  judgments.add(QueryId("t1"), ItemId("c"), true, "pooled:s");
  judgments.add(QueryId("t2"), ItemId("e"), true, "original");
  std::vector<Query> queries{{QueryId("t1"), Split::kTest, "a dog runs"},
                             {QueryId("t2"), Split::kTest, "caf\xc3\xa9 scene"},
                             {QueryId("r1"), Split::kTrain, "ignored"}};
  std::vector<RankedRun> runs{run.run()};
  auto report = distributions(runs, judgments, queries);
  EXPECT_EQ(report.population, 2u);
  EXPECT_EQ(report.positives_per_query.counts, (std::vector<std::size_t>{0, 1, 1}));
  EXPECT_EQ(report.positive_ranks.at("s").original.counts, (std::vector<std::size_t>{0, 1, 1}));
  EXPECT_EQ(report.positive_ranks.at("s").pooled.counts, (std::vector<std::size_t>{0, 0, 0, 1}));
  EXPECT_EQ(report.word_length.counts, (std::vector<std::size_t>{0, 0, 1, 1}));
  EXPECT_EQ(report.char_length.counts, (std::vector<std::size_t>{2}));
  EXPECT_EQ(report.length_positives.total(), 2u);
  EXPECT_EQ(char_count("caf\xc3\xa9"), 4u);
  auto doc = to_json(report);
  EXPECT_EQ(doc["positives_per_query"]["bin_edges"].size(), 4u);
  std::ostringstream csv;
  write_csv(csv, report);
  EXPECT_EQ(csv.str().rfind("histogram,series,bin_lo,bin_hi,count\n", 0), 0u);
}

}  // namespace
}  // namespace fneval
