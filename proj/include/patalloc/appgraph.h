// Copyright 2026 The patalloc Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace patalloc {

enum class PatternShape { kRing, kTree, kRingTree, kFullyConnected };

// ring, tree, ringtree, full
std::string_view shape_token(PatternShape s);
PatternShape parse_shape(std::string_view token);

// Communication pattern of a job: vertices are the job's accelerators,
// edges the pairs that exchange data. Edges are stored as (a, b) with a < b,
// sorted and unique.
class AppPattern {
 public:
  AppPattern(int vertex_count, std::vector<std::pair<int, int>> edges);

  int vertex_count() const { return vertex_count_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  bool has_edge(int a, int b) const;
  int degree(int v) const;
  bool connected() const;

  bool operator==(const AppPattern&) const = default;

 private:
  int vertex_count_;
  std::vector<std::pair<int, int>> edges_;
};

// Ring: cycle 0-1-..-(n-1)-0 (a single edge for n = 2). Tree: balanced
// binary tree with children 2i+1, 2i+2. RingTree: union of both.
// n = 1 gives the singleton for every shape except Ring, which throws.
AppPattern make_pattern(PatternShape shape, int n);

struct JobSpec {
  std::string job_id;
  int gpu_count = 1;
  PatternShape shape = PatternShape::kRing;
  bool bw_sensitive = false;
  double duration = 0;  // simulated seconds
  std::string network_name;
  double arrival = 0;

  bool operator==(const JobSpec&) const = default;
};

// Single-GPU jobs are the singleton pattern whatever their shape column.
AppPattern job_pattern(const JobSpec& job);

// Rows: job_id,gpu_count,shape,bw_sensitive,duration_s,network_name[,arrival_s]
// A header row (first field "job_id") and blank lines are skipped.
std::vector<JobSpec> parse_jobs(std::string_view text);
std::string serialize_jobs(const std::vector<JobSpec>& jobs);

struct WorkloadEntry {
  std::string network_name;
  bool bw_sensitive;
  double duration;
};

// The six Caffe training networks with their bandwidth sensitivity and a
// nominal duration.
const std::vector<WorkloadEntry>& default_workload_mix();

// Network-name lookup into the default table, case-insensitive; throws when
// the name is unknown. Also knows cusimann, gmm and jacobi (insensitive).
bool default_sensitivity(std::string_view network_name);

struct JobGenOptions {
  std::uint64_t seed = 0;
  int count = 300;
  int min_gpus = 1;
  int max_gpus = 5;
  std::vector<WorkloadEntry> mix = default_workload_mix();
};

// gpu_count uniform on [min_gpus, max_gpus]; network uniform over the mix;
// every job arrives at t = 0. Deterministic in the seed.
std::vector<JobSpec> generate_jobs(const JobGenOptions& opts);

}  // namespace patalloc
