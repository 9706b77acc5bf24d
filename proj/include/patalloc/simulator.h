// Copyright 2026 The patalloc Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "patalloc/appgraph.h"
#include "patalloc/policies.h"
#include "patalloc/topology.h"

namespace patalloc {

struct SimConfig {
  Policy policy = Policy::kBaseline;
  PolicyOptions policy_options;
  // Only the head of the queue may start. When false, any arrived job that
  // fits may start while the head waits.
  bool strict_fifo = true;
  // Optional hook mapping (job, decision) to the run time actually used.
  // Unset means the job's own duration.
  std::function<double(const JobSpec&, const AllocationDecision&)> duration_fn;
};

struct JobLogRecord {
  std::string job_id;
  std::string network;
  int gpus = 0;
  bool sensitive = false;
  DeviceSet devices;
  LinkCensus census;
  Bandwidth agg_bw = 0;
  Bandwidth pred_effbw = 0;
  Bandwidth preserved_bw = 0;
  double arrival = 0;
  double start = 0;
  double end = 0;
  double wait = 0;

  bool operator==(const JobLogRecord&) const = default;
};

// Replays `jobs` in file order against `topology`. Finish events are
// processed before allocation attempts at the same instant. Records come
// back in job-file order. Throws std::invalid_argument if a job asks for
// more devices than the machine has.
std::vector<JobLogRecord> run_simulation(const HardwareGraph& topology,
                                         const std::vector<JobSpec>& jobs,
                                         const SimConfig& config);

inline constexpr std::string_view kLogHeader =
    "job_id,network,gpus,sensitive,devices,x,y,z,agg_bw,pred_effbw,"
    "preserved_bw,arrival_s,start_s,end_s,wait_s";

std::string serialize_log(const std::vector<JobLogRecord>& records);
std::vector<JobLogRecord> parse_log(std::string_view text);

struct Quantiles {
  double min = 0, p25 = 0, p50 = 0, p75 = 0, max = 0;
};

Quantiles quantiles_of(const std::vector<double>& values);

struct GroupSummary {
  int jobs = 0;
  Quantiles pred_effbw;
  Quantiles wait;
  double makespan = 0;  // max end - min arrival within the group
  int negative_predictions = 0;
  int extrapolated_censuses = 0;
};

// group_by: all | network | gpus | sensitive. Throws on empty input or an
// unknown field.
std::map<std::string, GroupSummary> summarize_log(const std::vector<JobLogRecord>& records,
                                                  std::string_view group_by);

std::string summary_to_json(const std::map<std::string, GroupSummary>& summary,
                            std::string_view group_by);
// Aligned table with three decimals.
std::string summary_to_text(const std::map<std::string, GroupSummary>& summary,
                            std::string_view group_by);

}  // namespace patalloc
