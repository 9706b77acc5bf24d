// Copyright 2026 The patalloc Authors.
// SPDX-License-Identifier: Apache-2.0

#include "patalloc/simulator.h"

#include <algorithm>
#include <charconv>
#include <limits>
#include <queue>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "patalloc/util.h"

namespace patalloc {

namespace {

struct Running {
  double end;
  size_t seq;  // start order; breaks ties between equal end times
  DeviceSet devices;
  bool operator>(const Running& o) const {
    return end != o.end ? end > o.end : seq > o.seq;
  }
};

}  // namespace

std::vector<JobLogRecord> run_simulation(const HardwareGraph& topology,
                                         const std::vector<JobSpec>& jobs,
                                         const SimConfig& config) {
  std::vector<AppPattern> patterns;
  patterns.reserve(jobs.size());
  for (const JobSpec& j : jobs) {
    if (j.gpu_count > topology.device_count()) {
      throw std::invalid_argument(fmt::format(
          "job {} needs {} devices but {} has {}", j.job_id, j.gpu_count,
          topology.name(), topology.device_count()));
    }
    patterns.push_back(job_pattern(j));
  }

  AllocationState state(std::make_shared<const HardwareGraph>(topology));
  std::vector<JobLogRecord> records(jobs.size());
  std::vector<bool> started(jobs.size(), false);
  std::priority_queue<Running, std::vector<Running>, std::greater<>> running;
  size_t head = 0;  // first job not yet started, in file order
  size_t seq = 0;
  double now = 0;

  auto try_start = [&](size_t i) {
    const JobSpec& job = jobs[i];
    auto decision = decide(config.policy, state, patterns[i], job.bw_sensitive,
                           config.policy_options);
    if (!decision) return false;
    decision->job_id = job.job_id;
    double run_time = config.duration_fn ? config.duration_fn(job, *decision) : job.duration;
    state.allocate(decision->devices);
    running.push({now + run_time, seq++, decision->devices});
    started[i] = true;

    JobLogRecord& r = records[i];
    r.job_id = job.job_id;
    r.network = job.network_name;
    r.gpus = job.gpu_count;
    r.sensitive = job.bw_sensitive;
    r.devices = decision->devices;
    r.census = decision->census;
    r.agg_bw = decision->scores.agg_bw;
    r.pred_effbw = decision->scores.predicted_eff_bw;
    r.preserved_bw = decision->scores.preserved_bw;
    r.arrival = job.arrival;
    r.start = now;
    r.end = now + run_time;
    r.wait = now - job.arrival;
    return true;
  };

  while (head < jobs.size()) {
    while (!running.empty() && running.top().end <= now) {
      state.release(running.top().devices);
      running.pop();
    }

    if (config.strict_fifo) {
      while (head < jobs.size() && jobs[head].arrival <= now && try_start(head)) ++head;
    } else {
      for (size_t i = head; i < jobs.size(); ++i) {
        if (!started[i] && jobs[i].arrival <= now) try_start(i);
      }
      while (head < jobs.size() && started[head]) ++head;
    }
    if (head == jobs.size()) break;

    double next = std::numeric_limits<double>::infinity();
    if (!running.empty()) next = running.top().end;
    for (size_t i = head; i < jobs.size(); ++i) {
      if (!started[i] && jobs[i].arrival > now) next = std::min(next, jobs[i].arrival);
    }
    if (next == std::numeric_limits<double>::infinity()) {
      throw std::runtime_error(fmt::format(
          "job {} cannot be placed on an idle {}", jobs[head].job_id, topology.name()));
    }
    now = next;
  }
  return records;
}

// --- log files ------------------------------------------------------------

std::string serialize_log(const std::vector<JobLogRecord>& records) {
  std::string out(kLogHeader);
  out += '\n';
  for (const JobLogRecord& r : records) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.job_id,
                       r.network, r.gpus, r.sensitive ? "true" : "false",
                       r.devices.to_string(), r.census.x, r.census.y, r.census.z,
                       format_full(r.agg_bw), format_full(r.pred_effbw),
                       format_full(r.preserved_bw), format_full(r.arrival),
                       format_full(r.start), format_full(r.end), format_full(r.wait));
  }
  return out;
}

namespace {

template <typename T>
T parse_field(std::string_view tok, size_t row, std::string_view name) {
  T v{};
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw ParseError(fmt::format("row {}: bad {} '{}'", row, name, tok));
  }
  return v;
}

}  // namespace

std::vector<JobLogRecord> parse_log(std::string_view text) {
  std::vector<JobLogRecord> out;
  size_t row = 0;
  for (std::string_view line : split_lines(text)) {
    ++row;
    if (trim(line).empty()) continue;
    if (line == kLogHeader) continue;
    auto f = split(line, ',');
    if (f.size() != 15) {
      throw ParseError(fmt::format("row {}: expected 15 fields, got {}", row, f.size()));
    }
    JobLogRecord r;
    r.job_id = std::string(f[0]);
    r.network = std::string(f[1]);
    r.gpus = parse_field<int>(f[2], row, "gpus");
    if (f[3] != "true" && f[3] != "false") {
      throw ParseError(fmt::format("row {}: bad sensitive '{}'", row, f[3]));
    }
    r.sensitive = f[3] == "true";
    try {
      r.devices = DeviceSet::parse(f[4]);
    } catch (const std::exception& e) {
      throw ParseError(fmt::format("row {}: {}", row, e.what()));
    }
    r.census = {parse_field<int>(f[5], row, "x"), parse_field<int>(f[6], row, "y"),
                parse_field<int>(f[7], row, "z")};
    r.agg_bw = parse_field<double>(f[8], row, "agg_bw");
    r.pred_effbw = parse_field<double>(f[9], row, "pred_effbw");
    r.preserved_bw = parse_field<double>(f[10], row, "preserved_bw");
    r.arrival = parse_field<double>(f[11], row, "arrival_s");
    r.start = parse_field<double>(f[12], row, "start_s");
    r.end = parse_field<double>(f[13], row, "end_s");
    r.wait = parse_field<double>(f[14], row, "wait_s");
    out.push_back(std::move(r));
  }
  return out;
}

// --- summaries ------------------------------------------------------------

Quantiles quantiles_of(const std::vector<double>& values) {
  return {quantile(values, 0.0), quantile(values, 0.25), quantile(values, 0.5),
          quantile(values, 0.75), quantile(values, 1.0)};
}

std::map<std::string, GroupSummary> summarize_log(const std::vector<JobLogRecord>& records,
                                                  std::string_view group_by) {
  if (records.empty()) throw std::invalid_argument("cannot summarize an empty log");
  std::function<std::string(const JobLogRecord&)> key;
  if (group_by == "all") {
    key = [](const JobLogRecord&) { return std::string("all"); };
  } else if (group_by == "network") {
    key = [](const JobLogRecord& r) { return r.network; };
  } else if (group_by == "gpus") {
    key = [](const JobLogRecord& r) { return std::to_string(r.gpus); };
  } else if (group_by == "sensitive") {
    key = [](const JobLogRecord& r) { return std::string(r.sensitive ? "true" : "false"); };
  } else {
    throw std::invalid_argument(fmt::format(
        "cannot group by '{}' (expected all, network, gpus or sensitive)", group_by));
  }

  std::map<std::string, std::vector<const JobLogRecord*>> groups;
  for (const auto& r : records) groups[key(r)].push_back(&r);

  std::map<std::string, GroupSummary> out;
  for (const auto& [name, members] : groups) {
    std::vector<double> effbw, wait;
    double first_arrival = std::numeric_limits<double>::infinity();
    double last_end = -std::numeric_limits<double>::infinity();
    GroupSummary s;
    for (const JobLogRecord* r : members) {
      effbw.push_back(r->pred_effbw);
      wait.push_back(r->wait);
      first_arrival = std::min(first_arrival, r->arrival);
      last_end = std::max(last_end, r->end);
      if (r->pred_effbw < 0) ++s.negative_predictions;
      if (census_extrapolated(r->census)) ++s.extrapolated_censuses;
    }
    s.jobs = static_cast<int>(members.size());
    s.pred_effbw = quantiles_of(effbw);
    s.wait = quantiles_of(wait);
    s.makespan = last_end - first_arrival;
    out.emplace(name, s);
  }
  return out;
}

namespace {

nlohmann::ordered_json quantiles_json(const Quantiles& q) {
  return {{"min", q.min}, {"p25", q.p25}, {"p50", q.p50}, {"p75", q.p75}, {"max", q.max}};
}

}  // namespace

std::string summary_to_json(const std::map<std::string, GroupSummary>& summary,
                            std::string_view group_by) {
  nlohmann::ordered_json doc;
  doc["group_by"] = group_by;
  auto& groups = doc["groups"] = nlohmann::ordered_json::object();
  for (const auto& [name, s] : summary) {
    groups[name] = {{"jobs", s.jobs},
                    {"makespan_s", s.makespan},
                    {"pred_effbw", quantiles_json(s.pred_effbw)},
                    {"wait_s", quantiles_json(s.wait)},
                    {"negative_predictions", s.negative_predictions},
                    {"extrapolated_censuses", s.extrapolated_censuses}};
  }
  return doc.dump(2) + "\n";
}

std::string summary_to_text(const std::map<std::string, GroupSummary>& summary,
                            std::string_view group_by) {
  std::string out = fmt::format("{:<12} {:>5} {:>10} | {:>9} {:>9} {:>9} {:>9} {:>9} | {:>9} {:>9}\n",
                                group_by, "jobs", "makespan", "eff_min", "eff_p25",
                                "eff_p50", "eff_p75", "eff_max", "wait_p50", "wait_max");
  for (const auto& [name, s] : summary) {
    out += fmt::format("{:<12} {:>5} {:>10.3f} | {:>9.3f} {:>9.3f} {:>9.3f} {:>9.3f} {:>9.3f} | {:>9.3f} {:>9.3f}\n",
                       name, s.jobs, s.makespan, s.pred_effbw.min, s.pred_effbw.p25,
                       s.pred_effbw.p50, s.pred_effbw.p75, s.pred_effbw.max,
                       s.wait.p50, s.wait.max);
    if (s.negative_predictions > 0) {
      out += fmt::format("  note: {} job(s) with negative predicted bandwidth\n",
                         s.negative_predictions);
    }
    if (s.extrapolated_censuses > 0) {
      out += fmt::format("  note: {} job(s) with link counts beyond the model's "
                         "fitted range\n", s.extrapolated_censuses);
    }
  }
  return out;
}

}  // namespace patalloc
