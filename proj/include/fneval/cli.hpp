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

// `fneval` command line: one subcommand per operation.
//
// Exit codes: 0 success, 1 validation error, 2 IO error.

#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "fneval/agreement.hpp"
#include "fneval/analysis.hpp"
#include "fneval/corpus.hpp"
#include "fneval/metrics.hpp"
#include "fneval/pooling.hpp"
#include "fneval/service.hpp"
#include "fneval/stats.hpp"
#include "fneval/textsim.hpp"

namespace fneval::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

inline constexpr const char* kRunGrammar = "Run file: 'query_id item_id rank score run_tag' per line, '#' comments.";
inline constexpr const char* kQrelsGrammar =
    "Judgment file: 'query_id item_id label source', label in {0,1}, source original | pooled:<sys,...> | merged.";
inline constexpr const char* kQueryGrammar = "Query file: 'query_id<TAB>split<TAB>caption', split in {train,test}.";
inline constexpr const char* kLabelGrammar =
    "Label log: JSON lines {pair_id, query_id, item_id, rater_id, label, ts}, label in "
    "{relevant, irrelevant, escalated}, ts ISO-8601 UTC.";

enum class Format { kAll, kCsv, kJson, kTable };

struct CommandConfig {
  std::string format = "all";
  std::string out;  // output prefix; defaults to <first input stem>
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());

  std::vector<std::string> runs;
  std::vector<std::string> qrels;
  std::string original, corrected, pooled, seed_qrels, queries, items, labels, pool, provenance, scores;
  std::string target;
  std::vector<int> ks = kDefaultKs;
  std::string no_positive = "exclude";
  bool lenient = false;

  int depth = kDefaultPoolDepth;
  double fraction = kDefaultDoubleLabelFraction;
  std::uint64_t seed = 0;

  int rbo_depth = kDefaultRboDepth;
  double rbo_p = kDefaultRboPersistence;
  std::string rbo_variant = "extrapolated";

  std::vector<std::size_t> sample_sizes = kDefaultSampleSizes;
  std::size_t resamples = kDefaultResamples;
  std::size_t max_points = 0;
  std::string score_metric = "C@1";

  int ngram = kDefaultNgramSize;
  std::size_t top_k = kDefaultTopK;

  std::string bind = "127.0.0.1";
  int port = 8080;
  double lease_seconds = 600.0;
  std::string media_uri_template = "{item}";
  std::string static_dir;
  std::size_t snapshot_every = 0;
};

namespace detail {

inline std::filesystem::path output_prefix(const CommandConfig& config, const std::string& first_input) {
  if (!config.out.empty()) return config.out;
  std::filesystem::path input(first_input);
  return input.parent_path() / input.stem();
}

inline std::filesystem::path with_suffix(const std::filesystem::path& prefix, const std::string& suffix) {
  auto path = prefix;
  path += suffix;
  return path;
}

inline void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  auto out = fneval::detail::open_output(path);
  body(out);
  if (!out) throw Error(ErrorKind::kIo, "failed writing " + path.string());
}

inline Format parse_format(const std::string& text) {
  if (text == "csv") return Format::kCsv;
  if (text == "json") return Format::kJson;
  if (text == "table") return Format::kTable;
  return Format::kAll;
}

// Writes <prefix>.<report>.csv / .json as selected by --format.
template <typename CsvFn, typename JsonFn>
void emit_report(const CommandConfig& config, const std::filesystem::path& prefix, const std::string& report,
                 CsvFn csv, JsonFn json, std::ostream& out) {
  Format format = parse_format(config.format);
  if (format == Format::kAll || format == Format::kCsv) {
    auto path = with_suffix(prefix, "." + report + ".csv");
    write_file(path, csv);
    out << "wrote " << path.string() << '\n';
  }
  if (format == Format::kAll || format == Format::kJson) {
    auto path = with_suffix(prefix, "." + report + ".json");
    write_file(path, [&](std::ostream& o) { o << json().dump(2) << '\n'; });
    out << "wrote " << path.string() << '\n';
  }
}

inline JudgmentSet load_merged(const std::vector<std::string>& paths) {
  JudgmentSet merged;
  for (const auto& path : paths) merged = merge_judgments(merged, parse_judgments(std::filesystem::path(path)));
  return merged;
}

inline std::vector<RankedRun> load_runs(const std::vector<std::string>& paths, bool strict) {
  std::vector<RankedRun> runs;
  for (const auto& path : paths) runs.push_back(parse_run(std::filesystem::path(path), strict));
  return runs;
}

inline constexpr std::size_t kMaxPrintedWarnings = 10;

// The full list is kept in the JSON reports.
inline void print_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
  std::size_t shown = std::min(warnings.size(), kMaxPrintedWarnings);
  for (std::size_t i = 0; i < shown; ++i) err << "warning: " << warnings[i] << '\n';
  if (warnings.size() > shown) err << "warning: " << warnings.size() - shown << " more not shown\n";
}

inline Collection load_collection(const CommandConfig& config) {
  std::vector<Query> queries;
  std::set<ItemId> items;
  if (!config.queries.empty()) queries = parse_queries(std::filesystem::path(config.queries));
  if (!config.items.empty()) {
    auto in = fneval::detail::open_input(config.items);
    items = parse_items(in);
  }
  return make_collection(std::move(queries), std::move(items));
}

inline std::vector<double> load_scores(const std::string& path) {
  auto in = fneval::detail::open_input(path);
  std::vector<double> scores;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (fneval::detail::is_skippable(line)) continue;
    auto fields = split_ws(line);
    auto value = fneval::detail::parse_real(fields.back());
    if (!value) throw Error(ErrorKind::kMalformedLine, "expected a score in the last column", line_no);
    scores.push_back(*value);
  }
  return scores;
}

// Per-query scores for `metric` (C@K, R@K or AP).
inline std::vector<double> metric_scores(const MetricReport& report, const std::string& metric) {
  std::vector<double> scores;
  int k = 0;
  bool correct = metric.rfind("C@", 0) == 0, recall = metric.rfind("R@", 0) == 0;
  if (correct || recall) {
    auto parsed = fneval::detail::parse_number<int>(metric.substr(2));
    if (!parsed || *parsed < 1) throw Error(ErrorKind::kInvalidArgument, "bad metric " + metric);
    k = *parsed;
  } else if (metric != "AP") {
    throw Error(ErrorKind::kInvalidArgument, "metric must be C@K, R@K or AP");
  }
  for (const auto& [query, m] : report.per_query) {
    if (correct) scores.push_back(m.correct_at.at(k));
    else if (recall) scores.push_back(m.recall_at.at(k));
    else scores.push_back(m.avg_prec);
  }
  return scores;
}

}  // namespace detail

inline int cmd_eval(const CommandConfig& config, std::ostream& out, std::ostream& err) {
  RankedRun run = parse_run(std::filesystem::path(config.runs.at(0)), !config.lenient);
  detail::print_warnings(run.warnings, err);
  JudgmentSet judgments = detail::load_merged(config.qrels);
  if (!config.lenient && (!config.queries.empty() || !config.items.empty())) {
    Collection collection = detail::load_collection(config);
    collection.validate(run);
    collection.validate(judgments);
  }
  EvalOptions options;
  options.ks = config.ks;
  options.no_positive = config.no_positive == "zero" ? NoPositivePolicy::kScoreZero : NoPositivePolicy::kExclude;
  std::string tag;
  for (const auto& path : config.qrels) tag += (tag.empty() ? "" : "+") + std::filesystem::path(path).stem().string();
  options.judgment_tag = tag;
  MetricReport report = evaluate(run, judgments, options);
  detail::print_warnings(report.warnings, err);
  auto prefix = detail::output_prefix(config, config.runs.at(0));
  detail::emit_report(
      config, prefix, "metrics", [&](std::ostream& o) { write_csv(o, report); }, [&] { return to_json(report); }, out);
  write_table(out, report);
  return kExitOk;
}

inline int cmd_delta(const CommandConfig& config, std::ostream& out, std::ostream& err) {
  RankedRun run = parse_run(std::filesystem::path(config.runs.at(0)), !config.lenient);
  detail::print_warnings(run.warnings, err);
  JudgmentSet original = parse_judgments(std::filesystem::path(config.original));
  JudgmentSet corrected = parse_judgments(std::filesystem::path(config.corrected));
  DeltaReport report = delta_report(run, original, corrected, config.ks);
  detail::print_warnings(report.warnings, err);
  auto prefix = detail::output_prefix(config, config.runs.at(0));
  detail::emit_report(
      config, prefix, "delta", [&](std::ostream& o) { write_csv(o, report); }, [&] { return to_json(report); }, out);
  write_table(out, report);
  return kExitOk;
}

inline int cmd_pool(const CommandConfig& config, std::ostream& out, std::ostream& err) {
  auto runs = detail::load_runs(config.runs, !config.lenient);
  JudgmentSet seed = config.seed_qrels.empty() ? JudgmentSet{} : parse_judgments(std::filesystem::path(config.seed_qrels));
  Pool pool = build_pool(runs, seed, config.depth);
  detail::print_warnings(pool.warnings, err);
  auto prefix = detail::output_prefix(config, config.runs.at(0));
  auto pool_path = detail::with_suffix(prefix, ".pool.txt");
  auto provenance_path = detail::with_suffix(prefix, ".provenance.txt");
  detail::write_file(pool_path, [&](std::ostream& o) { write_pool(o, pool); });
  detail::write_file(provenance_path, [&](std::ostream& o) { write_provenance(o, pool); });
  out << "wrote " << pool_path.string() << "\nwrote " << provenance_path.string() << '\n';
  out << "pool: " << pool.size() << " pairs from " << pool.contributing_systems.size() << " system(s) at depth "
      << pool.depth << ", " << pool.excluded << " already judged\n";
  return kExitOk;
}

inline int cmd_plan(const CommandConfig& config, std::ostream& out, std::ostream&) {
  auto in = fneval::detail::open_input(config.pool);
  Pool pool = parse_pool(in);
  auto jobs = assignment_plan(pool, config.fraction, config.seed);
  auto path = detail::with_suffix(detail::output_prefix(config, config.pool), ".plan.txt");
  detail::write_file(path, [&](std::ostream& o) {
    for (const auto& job : jobs) {
      o << job.job_id << ' ' << job.pair.query.str() << ' ' << job.pair.item.str() << ' ' << job.pass << '\n';
    }
  });
  out << "wrote " << path.string() << '\n';
  out << "plan: " << jobs.size() << " jobs for " << pool.size() << " pairs (" << jobs.size() - pool.size()
      << " second labels)\n";
  return kExitOk;
}

inline int cmd_resolve(const CommandConfig& config, std::ostream& out, std::ostream& err) {
  auto records = parse_label_log(std::filesystem::path(config.labels));
  std::map<PairKey, std::set<std::string>> attribution;
  if (!config.provenance.empty()) {
    auto in = fneval::detail::open_input(config.provenance);
    attribution = parse_provenance(in);
  }
  Resolution resolution = resolve_labels(records, config.provenance.empty() ? nullptr : &attribution);
  detail::print_warnings(resolution.warnings, err);
  auto prefix = detail::output_prefix(config, config.labels);
  auto qrels_path = detail::with_suffix(prefix, ".qrels.txt");
  auto csv_path = detail::with_suffix(prefix, ".resolution.csv");
  auto pending_path = detail::with_suffix(prefix, ".pending.txt");
  detail::write_file(qrels_path, [&](std::ostream& o) { write_judgments(o, resolution.judgments); });
  detail::write_file(csv_path, [&](std::ostream& o) { write_resolution_csv(o, resolution); });
  detail::write_file(pending_path, [&](std::ostream& o) {
    for (const auto& job : resolution.pending) {
      o << job.pair.query.str() << ' ' << job.pair.item.str() << ' ' << job.pass << ' ';
      bool first = true;
      for (const auto& rater : job.excluded_raters) {
        o << (first ? "" : ",") << rater;
        first = false;
      }
      o << '\n';
    }
  });
  out << "wrote " << qrels_path.string() << "\nwrote " << csv_path.string() << "\nwrote " << pending_path.string()
      << '\n';
  auto rate = resolution.resolution_rate();
  out << "pairs " << resolution.outcomes.size() << ", resolved " << resolution.count(ResolutionStatus::kResolved)
      << ", pending " << resolution.count(ResolutionStatus::kPending) << ", unresolved "
      << resolution.count(ResolutionStatus::kUnresolved) << ", escalated "
      << resolution.count(ResolutionStatus::kEscalated) << ", resolution rate "
      << (rate ? format_sig3(*rate * 100.0) + "%" : "n/a") << '\n';
  return kExitOk;
}

inline int cmd_agreement(const CommandConfig& config, std::ostream& out, std::ostream&) {
  auto records = parse_label_log(std::filesystem::path(config.labels));
  AgreementReport report = agreement_report(records);
  auto prefix = detail::output_prefix(config, config.labels);
  detail::emit_report(
      config, prefix, "agreement", [&](std::ostream& o) { write_csv(o, report); }, [&] { return to_json(report); },
      out);
  write_table(out, report, records);
  return kExitOk;
}

inline int cmd_overlap(const CommandConfig& config, std::ostream& out, std::ostream& err) {
  auto runs = detail::load_runs(config.runs, !config.lenient);
  if (runs.size() < 2) throw Error(ErrorKind::kInvalidArgument, "overlap needs at least two runs");
  auto variant = config.rbo_variant == "truncated" ? RboVariant::kTruncated : RboVariant::kExtrapolated;
  OverlapReport report = overlap_report(runs, config.rbo_depth, config.rbo_p, variant);
  detail::print_warnings(report.warnings, err);
  auto prefix = detail::output_prefix(config, config.runs.at(0));
  detail::emit_report(
      config, prefix, "overlap", [&](std::ostream& o) { write_csv(o, report); }, [&] { return to_json(report); }, out);
  for (const auto& pair : report.pairs) {
    char line[256];
    std::snprintf(line, sizeof(line), "%s vs %s: overlap %.3f, rbo %.3f (%zu queries)\n", pair.system_a.c_str(),
                  pair.system_b.c_str(), pair.mean_overlap, pair.mean_rbo, pair.per_query.size());
    out << line;
  }
  return kExitOk;
}

inline int cmd_ablate(const CommandConfig& config, std::ostream& out, std::ostream&) {
  auto runs = detail::load_runs(config.runs, !config.lenient);
  JudgmentSet original = parse_judgments(std::filesystem::path(config.original));
  JudgmentSet pooled = parse_judgments(std::filesystem::path(config.pooled));
  std::vector<AblationReport> reports;
  for (const auto& run : runs) {
    if (!config.target.empty() && run.system != config.target) continue;
    reports.push_back(leave_one_out(runs, original, pooled, run.system, config.ks));
  }
  if (reports.empty()) throw Error(ErrorKind::kInvalidArgument, "target '" + config.target + "' not among runs");
  auto prefix = detail::output_prefix(config, config.runs.at(0));
  detail::emit_report(
      config, prefix, "ablation", [&](std::ostream& o) { write_csv(o, reports); },
      [&] {
        auto doc = nlohmann::ordered_json::array();
        for (const auto& report : reports) doc.push_back(to_json(report));
        return doc;
      },
      out);
  for (const auto& report : reports) {
    out << report.target << '\n';
    for (const auto& [k, v] : report.all.aggregate.correct_at) {
      char line[128];
      std::snprintf(line, sizeof(line), "  C@%d\tall %.3f\tnew %.3f\n", k, v,
                    report.held_out.aggregate.correct_at.at(k));
      out << line;
    }
  }
  return kExitOk;
}

inline int cmd_dist(const CommandConfig& config, std::ostream& out, std::ostream&) {
  auto runs = detail::load_runs(config.runs, !config.lenient);
  JudgmentSet judgments = detail::load_merged(config.qrels);
  std::vector<Query> queries;
  if (!config.queries.empty()) queries = parse_queries(std::filesystem::path(config.queries));
  DistributionReport report = distributions(runs, judgments, queries);
  auto first = !config.qrels.empty() ? config.qrels.front() : config.runs.at(0);
  auto prefix = detail::output_prefix(config, first);
  detail::emit_report(
      config, prefix, "dist", [&](std::ostream& o) { write_csv(o, report); }, [&] { return to_json(report); }, out);
  out << "population " << report.population << " queries\n";
  const auto& counts = report.positives_per_query.counts;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > 0) out << "  " << i << " positive(s): " << counts[i] << '\n';
  }
  return kExitOk;
}

inline int cmd_bootstrap(const CommandConfig& config, std::ostream& out, std::ostream&) {
  std::vector<double> scores;
  std::string first;
  if (!config.scores.empty()) {
    scores = detail::load_scores(config.scores);
    first = config.scores;
  } else {
    if (config.runs.empty() || config.qrels.empty()) {
      throw Error(ErrorKind::kInvalidArgument, "bootstrap needs --scores or --run with --qrels");
    }
    RankedRun run = parse_run(std::filesystem::path(config.runs.at(0)), !config.lenient);
    EvalOptions options;
    options.ks = config.ks;
    MetricReport report = evaluate(run, detail::load_merged(config.qrels), options);
    scores = detail::metric_scores(report, config.score_metric);
    first = config.runs.at(0);
  }
  if (scores.empty()) throw Error(ErrorKind::kInvalidArgument, "no scores to resample");
  std::vector<BootstrapResult> results;
  for (std::size_t n : config.sample_sizes) {
    results.push_back(bootstrap_deviation(scores, n, config.resamples, config.seed, config.threads));
  }
  auto prefix = detail::output_prefix(config, first);
  detail::emit_report(
      config, prefix, "bootstrap",
      [&](std::ostream& o) {
        o << "sample_size,resamples,seed,full_mean,percentile_95\n";
        for (const auto& r : results) {
          o << r.sample_size << ',' << r.resamples << ',' << r.rng_seed << ',' << format_double(r.full_mean) << ','
            << format_double(r.percentile_95) << '\n';
        }
      },
      [&] {
        nlohmann::ordered_json doc;
        doc["format"] = "fneval.bootstrap_report";
        doc["version"] = 1;
        doc["num_scores"] = scores.size();
        auto list = nlohmann::ordered_json::array();
        for (const auto& r : results) list.push_back(to_json(r, config.max_points));
        doc["results"] = list;
        return doc;
      },
      out);
  for (const auto& r : results) {
    char line[128];
    std::snprintf(line, sizeof(line), "N=%zu: 95th percentile deviation %.4f (mean %.4f, B=%zu)\n", r.sample_size,
                  r.percentile_95, r.full_mean, r.resamples);
    out << line;
  }
  return kExitOk;
}

inline int cmd_textsim(const CommandConfig& config, std::ostream& out, std::ostream& err) {
  auto queries = parse_queries(std::filesystem::path(config.queries));
  std::vector<std::string> warnings;
  SimilarityProfile profile = train_test_profile(queries, config.ngram, config.top_k, &warnings);
  if (!warnings.empty()) err << "warning: " << warnings.size() << " test caption(s) yield no n-grams\n";
  LengthCorrelation corr = length_similarity_correlation(profile, queries);
  auto prefix = detail::output_prefix(config, config.queries);
  detail::emit_report(
      config, prefix, "textsim", [&](std::ostream& o) { write_csv(o, profile); },
      [&] { return to_json(corr, profile); }, out);
  auto show = [](const std::optional<double>& v) {
    if (!v) return std::string("undefined");
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%+.3f", *v);
    return std::string(buffer);
  };
  out << "          Spearman  Kendall\n";
  out << "words     " << show(corr.spearman_word) << "    " << show(corr.kendall_word) << '\n';
  out << "chars     " << show(corr.spearman_char) << "    " << show(corr.kendall_char) << '\n';
  return kExitOk;
}

inline int cmd_serve(const CommandConfig& config, std::ostream& out, std::ostream&) {
  Pool pool;
  {
    auto in = fneval::detail::open_input(config.pool);
    if (!config.provenance.empty()) {
      auto prov = fneval::detail::open_input(config.provenance);
      pool = parse_pool(in, &prov);
    } else {
      pool = parse_pool(in);
    }
  }
  std::map<QueryId, std::string> captions;
  if (!config.queries.empty()) {
    for (auto& query : parse_queries(std::filesystem::path(config.queries))) captions[query.id] = query.text;
  }
  JudgmentSet original = config.original.empty() ? JudgmentSet{} : parse_judgments(std::filesystem::path(config.original));
  ServiceConfig service_config;
  service_config.lease_timeout =
      std::chrono::milliseconds(static_cast<std::int64_t>(config.lease_seconds * 1000.0));
  service_config.double_label_fraction = config.fraction;
  service_config.seed = config.seed;
  service_config.log_path = config.labels;
  service_config.media_uri_template = config.media_uri_template;
  service_config.snapshot_every = config.snapshot_every;
  AnnotationService service(std::move(pool), std::move(captions), std::move(original),
                            detail::load_runs(config.runs, !config.lenient), service_config);
  httplib::Server server;
  register_routes(server, service);
  if (!config.static_dir.empty() && !server.set_mount_point("/", config.static_dir)) {
    throw Error(ErrorKind::kIo, "cannot serve static files from " + config.static_dir);
  }
  out << "serving on http://" << config.bind << ':' << config.port << " (" << service.open_jobs()
      << " open jobs)" << std::endl;
  if (!server.listen(config.bind, config.port)) {
    throw Error(ErrorKind::kIo, "cannot bind " + config.bind + ":" + std::to_string(config.port));
  }
  return kExitOk;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CommandConfig config;
  CLI::App app{"Pooled-judgment evaluation toolkit for text-to-media retrieval", "fneval"};
  app.require_subcommand(1);
  app.add_option("--threads", config.threads, "Worker threads (output does not depend on it)")
      ->check(CLI::PositiveNumber);

  auto add_common = [&](CLI::App* sub, bool with_format) {
    if (with_format) {
      sub->add_option("--format", config.format, "Report rendering: all | csv | json | table")
          ->check(CLI::IsMember({"all", "csv", "json", "table"}));
    }
    sub->add_option("--out", config.out, "Output prefix (default: <input stem>)");
    sub->add_flag("--lenient", config.lenient, "Exploratory loading: tolerate rank gaps, skip collection checks");
  };
  auto add_ks = [&](CLI::App* sub) {
    sub->add_option("--k", config.ks, "Cutoffs K (default 1,5,10,50)")->delimiter(',')->check(CLI::PositiveNumber);
  };
  auto footer = [](std::initializer_list<const char*> lines) {
    std::string text;
    for (const char* line : lines) text += std::string(line) + "\n";
    return text;
  };

  std::map<std::string, std::function<int(const CommandConfig&, std::ostream&, std::ostream&)>> handlers;

  auto* eval = app.add_subcommand("eval", "Compute C@K, R@K, mAP and first-positive rank for a run");
  eval->add_option("--run", config.runs, "Run file")->required()->expected(1);
  eval->add_option("--qrels", config.qrels, "Judgment file(s), merged relevant-wins")->required();
  eval->add_option("--queries", config.queries, "Query file for strict id validation");
  eval->add_option("--items", config.items, "Item list (one id per line) for strict id validation");
  eval->add_option("--no-positive", config.no_positive, "Queries without a known positive: exclude | zero")
      ->check(CLI::IsMember({"exclude", "zero"}));
  add_ks(eval);
  add_common(eval, true);
  eval->footer(footer({kRunGrammar, kQrelsGrammar, kQueryGrammar}));
  handlers["eval"] = cmd_eval;

  auto* delta = app.add_subcommand("delta", "Report corrected A, original B and delta C = A - B per metric");
  delta->add_option("--run", config.runs, "Run file")->required()->expected(1);
  delta->add_option("--original", config.original, "Original judgments")->required();
  delta->add_option("--corrected", config.corrected, "Corrected judgments (superset of original)")->required();
  add_ks(delta);
  add_common(delta, true);
  delta->footer(footer({kRunGrammar, kQrelsGrammar}));
  handlers["delta"] = cmd_delta;

  auto* pool = app.add_subcommand("pool", "Build an annotation pool from the top-depth predictions of runs");
  pool->add_option("--run", config.runs, "Run file(s)")->required();
  pool->add_option("--seed-qrels", config.seed_qrels, "Judgments whose pairs are skipped");
  pool->add_option("--depth", config.depth, "Pool depth (default 10)")->check(CLI::PositiveNumber);
  add_common(pool, false);
  pool->footer(footer({kRunGrammar, "Writes <out>.pool.txt (run grammar, tag POOL) and <out>.provenance.txt "
                                    "('query_id item_id sysA,sysB')."}));
  handlers["pool"] = cmd_pool;

  auto* plan = app.add_subcommand("plan", "Expand a pool into annotation jobs with a seeded second-label sample");
  plan->add_option("--pool", config.pool, "Pool file")->required();
  plan->add_option("--fraction", config.fraction, "Fraction of pairs labeled twice (default 0.10)")
      ->check(CLI::Range(0.0, 1.0));
  plan->add_option("--seed", config.seed, "RNG seed (default 0)");
  add_common(plan, false);
  plan->footer(footer({"Writes <out>.plan.txt: 'job_id query_id item_id pass'."}));
  handlers["plan"] = cmd_plan;

  auto* resolve = app.add_subcommand("resolve", "Resolve a label log into judgments by majority");
  resolve->add_option("--labels", config.labels, "Label log (JSON lines)")->required();
  resolve->add_option("--provenance", config.provenance, "Pool provenance file; tags labels pooled:<systems>");
  add_common(resolve, false);
  resolve->footer(footer({kLabelGrammar, "Writes <out>.qrels.txt, <out>.resolution.csv, <out>.pending.txt."}));
  handlers["resolve"] = cmd_resolve;

  auto* agreement = app.add_subcommand("agreement", "Agreement rate and Krippendorff's alpha of a label log");
  agreement->add_option("--labels", config.labels, "Label log (JSON lines)")->required();
  add_common(agreement, true);
  agreement->footer(footer({kLabelGrammar}));
  handlers["agreement"] = cmd_agreement;

  auto* overlap = app.add_subcommand("overlap", "Plain overlap and rank-biased overlap between runs");
  overlap->add_option("--run", config.runs, "Run files (two or more)")->required();
  overlap->add_option("--depth", config.rbo_depth, "Prefix depth D (default 10)")->check(CLI::PositiveNumber);
  overlap->add_option("--p", config.rbo_p, "RBO persistence in (0,1) (default 0.9)")
      ->check(CLI::Range(0.0, 1.0) & !CLI::IsMember({0.0, 1.0}));
  overlap->add_option("--rbo-variant", config.rbo_variant, "extrapolated | truncated")
      ->check(CLI::IsMember({"extrapolated", "truncated"}));
  add_common(overlap, true);
  overlap->footer(footer({kRunGrammar}));
  handlers["overlap"] = cmd_overlap;

  auto* ablate = app.add_subcommand("ablate", "Leave-one-system-out pooling bias (All vs New judgments)");
  ablate->add_option("--run", config.runs, "Run files of the pooled systems")->required();
  ablate->add_option("--original", config.original, "Original judgments")->required();
  ablate->add_option("--pooled", config.pooled, "Pooled judgments with pooled:<systems> sources")->required();
  ablate->add_option("--target", config.target, "Only this system (default: every run)");
  add_ks(ablate);
  add_common(ablate, true);
  ablate->footer(footer({kRunGrammar, kQrelsGrammar}));
  handlers["ablate"] = cmd_ablate;

  auto* dist = app.add_subcommand("dist", "Positives-per-query, positive-rank and caption-length histograms");
  dist->add_option("--run", config.runs, "Run file(s) for positive-rank histograms");
  dist->add_option("--qrels", config.qrels, "Judgment file(s), merged relevant-wins")->required();
  dist->add_option("--queries", config.queries, "Query file for length analyses");
  add_common(dist, true);
  dist->footer(footer({kRunGrammar, kQrelsGrammar, kQueryGrammar}));
  handlers["dist"] = cmd_dist;

  auto* bootstrap = app.add_subcommand("bootstrap", "Bootstrap deviation of a mean score by sample size");
  bootstrap->add_option("--scores", config.scores, "Per-query scores, score in the last column");
  bootstrap->add_option("--run", config.runs, "Alternatively: run file to score")->expected(1);
  bootstrap->add_option("--qrels", config.qrels, "Judgments for --run");
  bootstrap->add_option("--metric", config.score_metric, "Per-query metric for --run: C@K, R@K or AP");
  bootstrap->add_option("--n", config.sample_sizes, "Sample sizes (default 500,1000,3000)")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  bootstrap->add_option("--b", config.resamples, "Resamples per size (default 10000)")->check(CLI::PositiveNumber);
  bootstrap->add_option("--seed", config.seed, "RNG seed (default 0)");
  bootstrap->add_option("--max-points", config.max_points, "Down-sample stored deviations (0 keeps all)");
  add_ks(bootstrap);
  add_common(bootstrap, true);
  bootstrap->footer(footer({"Scores file: one score per line, optionally preceded by a query id."}));
  handlers["bootstrap"] = cmd_bootstrap;

  auto* textsim = app.add_subcommand("textsim", "Character n-gram TF-IDF train/test caption similarity");
  textsim->add_option("--queries", config.queries, "Query file with train and test captions")->required();
  textsim->add_option("--n", config.ngram, "Character n-gram size (default 5)")->check(CLI::PositiveNumber);
  textsim->add_option("--k", config.top_k, "Train captions averaged per test caption (default 10)")
      ->check(CLI::PositiveNumber);
  add_common(textsim, true);
  textsim->footer(footer({kQueryGrammar}));
  handlers["textsim"] = cmd_textsim;

  auto* serve = app.add_subcommand("serve", "Run the HTTP annotation service");
  serve->add_option("--pool", config.pool, "Pool file")->required()->envname("FNEVAL_POOL");
  serve->add_option("--provenance", config.provenance, "Pool provenance file")->envname("FNEVAL_PROVENANCE");
  serve->add_option("--queries", config.queries, "Query file (captions)")->envname("FNEVAL_QUERIES");
  serve->add_option("--original", config.original, "Original judgments")->envname("FNEVAL_ORIGINAL");
  serve->add_option("--run", config.runs, "Run file(s) exposed through /api/metrics");
  serve->add_option("--log", config.labels, "Append-only label log")->required()->envname("FNEVAL_LOG");
  serve->add_option("--bind", config.bind, "Bind address")->envname("FNEVAL_BIND");
  serve->add_option("--port", config.port, "Port")->envname("FNEVAL_PORT");
  serve->add_option("--lease-timeout", config.lease_seconds, "Lease timeout in seconds (default 600)")
      ->check(CLI::PositiveNumber);
  serve->add_option("--fraction", config.fraction, "Fraction of pairs labeled twice (default 0.10)")
      ->check(CLI::Range(0.0, 1.0));
  serve->add_option("--seed", config.seed, "RNG seed for the second-label sample");
  serve->add_option("--media-uri-template", config.media_uri_template, "Media URL, {item}/{query} substituted");
  serve->add_option("--static-dir", config.static_dir, "Directory of UI assets served at /");
  serve->add_option("--snapshot-every", config.snapshot_every, "Write <log>.snapshot every N labels (0: never)");
  serve->add_flag("--lenient", config.lenient, "Tolerate rank gaps in run files");
  serve->footer(footer({kLabelGrammar}));
  handlers["serve"] = cmd_serve;

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    // Subcommand --help lands here too.
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      for (auto* sub : app.get_subcommands()) out << sub->help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\nrun with --help for usage\n";
    return kExitValidation;
  }

  try {
    auto* sub = app.get_subcommands().front();
    return handlers.at(sub->get_name())(config, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::kIo ? kExitIo : kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::out_of_range& e) {
    err << "error: missing required input\n";
    return kExitValidation;
  }
}

}  // namespace fneval::cli
