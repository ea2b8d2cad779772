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

// Annotation service backing the human judging loop.
//
// State is a fold of an append-only JSONL label log: on start the log is
// replayed, and every accepted label is appended (and fsync'ed) before it is
// acknowledged. Jobs are leased to raters with a timeout; a rater never gets
// a job for a pair they already labeled or hold a lease on. Pass-2 jobs open
// once pass 1 is closed; a pass-3 job is created whenever a pair is left with
// two disagreeing labels and no open job.

#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fneval/agreement.hpp"
#include "fneval/corpus.hpp"
#include "fneval/metrics.hpp"
#include "fneval/pooling.hpp"
#include "httplib.h"
#include "json.hpp"

namespace fneval {

struct JudgingGuideline {
  std::string criterion =
      "Mark the video relevant only if every element mentioned in the query is reasonably present in the video. "
      "Otherwise mark it irrelevant. Escalate only when the pair is too ambiguous or confusing to judge.";
  std::vector<std::string> sensitive_categories = {
      "Accept the caption as accurate unless there is a concrete, compelling reason to believe otherwise; do not "
      "attempt finer distinctions than the caption makes.",
      "Make no assumptions about gender: accept the gender described by the caption.",
  };
};

struct ServiceConfig {
  std::chrono::milliseconds lease_timeout = std::chrono::minutes(10);
  double double_label_fraction = kDefaultDoubleLabelFraction;
  std::uint64_t seed = 0;
  std::filesystem::path log_path;       // empty: in-memory only
  std::string media_uri_template = "{item}";  // {item} and {query} are substituted
  std::size_t snapshot_every = 0;       // write <log>.snapshot every N labels; 0 disables
  JudgingGuideline guideline;
};

using Clock = std::function<Timestamp()>;

inline Timestamp system_now() {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

struct AnnotationJob {
  std::string job_id;
  PairKey pair;
  std::string caption;
  std::string media_uri;
  int pass = 1;
};

struct Progress {
  std::size_t total_pairs = 0;
  std::size_t resolved = 0;
  std::size_t unresolved_pending = 0;  // two disagreeing labels, awaiting a third
  std::size_t unresolved_tied = 0;     // even split of more than two labels
  std::size_t escalated = 0;
  std::size_t unlabeled = 0;
  std::size_t records = 0;
  std::optional<double> agreement_so_far;
};

enum class SubmitStatus { kOk, kUnknownJob, kLeaseConflict, kInvalidRater };

class AnnotationService {
 public:
  AnnotationService(Pool pool, std::map<QueryId, std::string> captions, JudgmentSet original,
                    std::vector<RankedRun> runs, ServiceConfig config = {}, Clock clock = system_now)
      : pool_(std::move(pool)),
        captions_(std::move(captions)),
        original_(std::move(original)),
        config_(std::move(config)),
        clock_(std::move(clock)) {
    for (auto& run : runs) {
      std::string tag = run.system;
      runs_.emplace(std::move(tag), std::move(run));
    }
    for (const auto& pair : pool_.pairs) pairs_[pair];
    for (auto& planned : assignment_plan(pool_, config_.double_label_fraction, config_.seed)) add_job(planned);
    if (!config_.log_path.empty()) {
      if (std::filesystem::exists(config_.log_path)) {
        for (const auto& record : parse_label_log(config_.log_path)) apply(record);
      }
      open_log();
    }
  }

  ~AnnotationService() {
    if (log_fd_ >= 0) ::close(log_fd_);
  }

  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  // Leases the lowest-pass open job this rater may take. A rater holding a
  // live lease gets that job back.
  std::optional<AnnotationJob> next_job(const std::string& rater_id) {
    require(!rater_id.empty(), "rater_id must be non-empty");
    std::lock_guard lock(mutex_);
    Timestamp now = clock_();
    for (const auto& [pass, open] : open_by_pass_) {
      for (std::size_t index : open) {
        const JobState& job = jobs_[index];
        if (job.lease && job.lease->rater == rater_id && job.lease->expires > now) return describe(job);
      }
    }
    for (const auto& [pass, open] : open_by_pass_) {
      for (std::size_t index : open) {
        JobState& job = jobs_[index];
        if (job.lease && job.lease->expires > now) continue;
        const PairState& state = pairs_.at(job.planned.pair);
        if (job.planned.pass > 1 && state.closed_passes < job.planned.pass - 1) continue;
        if (state.tally.raters.contains(rater_id) || holds_lease(job.planned.pair, rater_id, now)) continue;
        job.lease = Lease{rater_id, now + config_.lease_timeout};
        return describe(job);
      }
    }
    return std::nullopt;
  }

  // Accepts a label for a job leased to `rater_id`; the record is durable
  // when this returns kOk.
  SubmitStatus submit(const std::string& job_id, const std::string& rater_id, Label label) {
    if (rater_id.empty()) return SubmitStatus::kInvalidRater;
    std::lock_guard lock(mutex_);
    auto it = job_index_.find(job_id);
    if (it == job_index_.end()) return SubmitStatus::kUnknownJob;
    JobState& job = jobs_[it->second];
    Timestamp now = clock_();
    if (job.done || !job.lease || job.lease->rater != rater_id || job.lease->expires <= now) {
      return SubmitStatus::kLeaseConflict;
    }
    LabelRecord record{job.planned.pair, rater_id, label, now};
    append_to_log(record);
    apply(record, it->second);
    return SubmitStatus::kOk;
  }

  Progress progress() const {
    std::lock_guard lock(mutex_);
    Progress progress;
    progress.total_pairs = pairs_.size();
    progress.records = records_.size();
    for (const auto& [pair, state] : pairs_) {
      if (state.tally.labels() == 0 && state.tally.escalated == 0) {
        ++progress.unlabeled;
        continue;
      }
      switch (resolve_pair(pair, state.tally).status) {
        case ResolutionStatus::kResolved: ++progress.resolved; break;
        case ResolutionStatus::kPending: ++progress.unresolved_pending; break;
        case ResolutionStatus::kUnresolved: ++progress.unresolved_tied; break;
        case ResolutionStatus::kEscalated: ++progress.escalated; break;
      }
    }
    progress.agreement_so_far = agreement_rate(records_).agreement_rate;
    return progress;
  }

  bool has_run(const std::string& tag) const { return runs_.contains(tag); }

  // Original judgments plus every label resolved so far (relevant wins).
  JudgmentSet current_judgments() const {
    std::lock_guard lock(mutex_);
    return merge_judgments(original_, resolve_labels(records_, &pool_.attribution).judgments);
  }

  MetricReport live_metrics(const std::string& tag, const std::vector<int>& ks) const {
    auto it = runs_.find(tag);
    if (it == runs_.end()) throw Error(ErrorKind::kUnknownReference, "unknown run " + tag);
    EvalOptions options;
    options.ks = ks;
    options.judgment_tag = "live";
    return evaluate(it->second, current_judgments(), options);
  }

  struct PairInfo {
    PairKey pair;
    std::string caption;
    std::string media_uri;
    ResolutionStatus status = ResolutionStatus::kUnresolved;
    bool labeled = false;
    std::size_t labels = 0;
  };

  std::optional<PairInfo> pair_info(const std::string& id) const {
    std::lock_guard lock(mutex_);
    for (const auto& [pair, state] : pairs_) {
      if (pair_id(pair) != id) continue;
      PairInfo info{pair, caption_of(pair), media_uri_of(pair)};
      info.labeled = state.tally.labels() + state.tally.escalated > 0;
      info.labels = state.tally.labels() + state.tally.escalated;
      if (info.labeled) info.status = resolve_pair(pair, state.tally).status;
      return info;
    }
    return std::nullopt;
  }

  std::vector<LabelRecord> records() const {
    std::lock_guard lock(mutex_);
    return records_;
  }

  const JudgingGuideline& guideline() const noexcept { return config_.guideline; }

  std::size_t open_jobs() const {
    std::lock_guard lock(mutex_);
    std::size_t n = 0;
    for (const auto& [pass, open] : open_by_pass_) n += open.size();
    return n;
  }

 private:
  struct Lease {
    std::string rater;
    Timestamp expires;
  };

  struct JobState {
    PlannedJob planned;
    std::optional<Lease> lease;
    bool done = false;
  };

  struct PairState {
    PairTally tally;
    int closed_passes = 0;
    std::vector<std::size_t> jobs;
  };

  void add_job(PlannedJob planned) {
    std::size_t index = jobs_.size();
    job_index_.emplace(planned.job_id, index);
    open_by_pass_[planned.pass].insert(index);
    pairs_[planned.pair].jobs.push_back(index);
    jobs_.push_back(JobState{std::move(planned), std::nullopt, false});
  }

  bool holds_lease(const PairKey& pair, const std::string& rater, Timestamp now) const {
    for (std::size_t index : pairs_.at(pair).jobs) {
      const JobState& job = jobs_[index];
      if (!job.done && job.lease && job.lease->rater == rater && job.lease->expires > now) return true;
    }
    return false;
  }

  // Replayed records close the pair's lowest-pass open job.
  void apply(const LabelRecord& record, std::optional<std::size_t> closing = std::nullopt) {
    records_.push_back(record);
    auto found = pairs_.find(record.pair);
    if (found == pairs_.end()) return;
    PairState& state = found->second;
    state.tally.add(record);
    if (!closing) {
      for (std::size_t index : state.jobs) {
        if (jobs_[index].done) continue;
        if (!closing || jobs_[index].planned.pass < jobs_[*closing].planned.pass) closing = index;
      }
    }
    if (closing) {
      JobState& job = jobs_[*closing];
      job.done = true;
      job.lease.reset();
      open_by_pass_[job.planned.pass].erase(*closing);
      state.closed_passes = std::max(state.closed_passes, job.planned.pass);
    }
    bool has_open = false;
    for (std::size_t index : state.jobs) has_open = has_open || !jobs_[index].done;
    if (!has_open && resolve_pair(record.pair, state.tally).status == ResolutionStatus::kPending) {
      add_job(PlannedJob{job_id_for(jobs_.size() + 1), record.pair, 3});
    }
    if (config_.snapshot_every > 0 && records_.size() % config_.snapshot_every == 0) write_snapshot();
  }

  AnnotationJob describe(const JobState& job) const {
    return AnnotationJob{job.planned.job_id, job.planned.pair, caption_of(job.planned.pair),
                         media_uri_of(job.planned.pair), job.planned.pass};
  }

  std::string caption_of(const PairKey& pair) const {
    auto it = captions_.find(pair.query);
    return it == captions_.end() ? std::string() : it->second;
  }

  std::string media_uri_of(const PairKey& pair) const {
    std::string uri = config_.media_uri_template;
    auto substitute = [&](const std::string& token, const std::string& value) {
      for (auto pos = uri.find(token); pos != std::string::npos; pos = uri.find(token, pos + value.size())) {
        uri.replace(pos, token.size(), value);
      }
    };
    substitute("{item}", pair.item.str());
    substitute("{query}", pair.query.str());
    return uri;
  }

  void open_log() {
    log_fd_ = ::open(config_.log_path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (log_fd_ < 0) throw Error(ErrorKind::kIo, "cannot open label log " + config_.log_path.string());
  }

  void append_to_log(const LabelRecord& record) {
    if (log_fd_ < 0) return;
    std::string line = to_json(record).dump() + "\n";
    const char* data = line.data();
    std::size_t left = line.size();
    while (left > 0) {
      ssize_t written = ::write(log_fd_, data, left);
      if (written < 0) throw Error(ErrorKind::kIo, "label log write failed");
      data += written;
      left -= static_cast<std::size_t>(written);
    }
    if (::fsync(log_fd_) != 0) throw Error(ErrorKind::kIo, "label log fsync failed");
  }

  void write_snapshot() const {
    if (config_.log_path.empty()) return;
    auto path = config_.log_path;
    path += ".snapshot";
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      write_judgments(out, resolve_labels(records_, &pool_.attribution).judgments);
    }
    std::filesystem::rename(tmp, path);
  }

  Pool pool_;
  std::map<QueryId, std::string> captions_;
  JudgmentSet original_;
  std::map<std::string, RankedRun> runs_;
  ServiceConfig config_;
  Clock clock_;

  mutable std::mutex mutex_;
  std::vector<JobState> jobs_;
  std::map<std::string, std::size_t> job_index_;
  std::map<int, std::set<std::size_t>> open_by_pass_;
  std::map<PairKey, PairState> pairs_;
  std::vector<LabelRecord> records_;
  int log_fd_ = -1;
};

inline nlohmann::ordered_json to_json(const AnnotationJob& job) {
  return {{"job_id", job.job_id},
          {"pair_id", pair_id(job.pair)},
          {"query_id", job.pair.query.str()},
          {"item_id", job.pair.item.str()},
          {"caption", job.caption},
          {"media_uri", job.media_uri},
          {"pass", job.pass}};
}

inline nlohmann::ordered_json to_json(const Progress& progress) {
  return {{"total_pairs", progress.total_pairs},
          {"resolved", progress.resolved},
          {"unresolved_pending", progress.unresolved_pending},
          {"unresolved_tied", progress.unresolved_tied},
          {"escalated", progress.escalated},
          {"unlabeled", progress.unlabeled},
          {"records", progress.records},
          {"agreement_so_far", progress.agreement_so_far ? nlohmann::ordered_json(*progress.agreement_so_far)
                                                         : nlohmann::ordered_json(nullptr)}};
}

namespace detail {

inline void send_json(httplib::Response& res, int status, const nlohmann::ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

}  // namespace detail

// Wires the HTTP API onto `server`. `service` must outlive it.
inline void register_routes(httplib::Server& server, AnnotationService& service) {
  using detail::send_error;
  using detail::send_json;

  server.Get("/api/queue/next", [&service](const httplib::Request& req, httplib::Response& res) {
    std::string rater = req.has_param("rater_id") ? req.get_param_value("rater_id") : "";
    if (rater.empty()) return send_error(res, 400, "rater_id is required");
    auto job = service.next_job(rater);
    if (!job) {
      res.status = 204;
      return;
    }
    send_json(res, 200, to_json(*job));
  });

  server.Post("/api/labels", [&service](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception&) {
      return send_error(res, 400, "body must be JSON");
    }
    auto field = [&](const char* key) -> std::string {
      return body.is_object() && body.contains(key) && body[key].is_string() ? body[key].get<std::string>() : "";
    };
    std::string job_id = field("job_id"), rater = field("rater_id");
    if (job_id.empty() || rater.empty()) return send_error(res, 400, "job_id and rater_id are required");
    auto label = parse_label(field("label"));
    if (!label) return send_error(res, 400, "label must be relevant, irrelevant or escalated");
    switch (service.submit(job_id, rater, *label)) {
      case SubmitStatus::kOk: return send_json(res, 200, {{"status", "ok"}});
      case SubmitStatus::kUnknownJob: return send_error(res, 404, "unknown job " + job_id);
      case SubmitStatus::kLeaseConflict: return send_error(res, 409, "job is not leased to this rater");
      case SubmitStatus::kInvalidRater: return send_error(res, 400, "rater_id is required");
    }
  });

  server.Get("/api/progress", [&service](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, to_json(service.progress()));
  });

  server.Get("/api/metrics", [&service](const httplib::Request& req, httplib::Response& res) {
    std::string tag = req.has_param("run") ? req.get_param_value("run") : "";
    if (!service.has_run(tag)) return send_error(res, 404, "unknown run '" + tag + "'");
    std::vector<int> ks = kDefaultKs;
    if (req.has_param("k")) {
      auto k = detail::parse_number<int>(req.get_param_value("k"));
      if (!k || *k < 1) return send_error(res, 400, "k must be a positive integer");
      ks = {*k};
    }
    try {
      send_json(res, 200, to_json(service.live_metrics(tag, ks)));
    } catch (const Error& e) {
      send_error(res, 422, e.what());
    }
  });

  server.Get("/api/guidelines", [&service](const httplib::Request&, httplib::Response& res) {
    const auto& guideline = service.guideline();
    send_json(res, 200, {{"criterion", guideline.criterion}, {"sensitive_categories", guideline.sensitive_categories}});
  });

  server.Get(R"(/api/pairs/(.+))", [&service](const httplib::Request& req, httplib::Response& res) {
    auto info = service.pair_info(req.matches[1]);
    if (!info) return send_error(res, 404, "unknown pair");
    nlohmann::ordered_json body{{"pair_id", pair_id(info->pair)},
                                {"query_id", info->pair.query.str()},
                                {"item_id", info->pair.item.str()},
                                {"caption", info->caption},
                                {"media_uri", info->media_uri},
                                {"labels", info->labels},
                                {"status", info->labeled ? std::string(to_string(info->status)) : "unlabeled"}};
    send_json(res, 200, body);
  });

  server.Get("/api/log", [&service](const httplib::Request&, httplib::Response& res) {
    std::ostringstream out;
    write_label_log(out, service.records());
    res.set_content(out.str(), "application/x-ndjson");
  });
}

}  // namespace fneval
