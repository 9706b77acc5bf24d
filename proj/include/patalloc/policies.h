// Copyright 2026 The patalloc Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "patalloc/appgraph.h"
#include "patalloc/matcher.h"
#include "patalloc/scoring.h"
#include "patalloc/topology.h"

namespace patalloc {

enum class Policy { kBaseline, kTopoAware, kGreedy, kPreserve };

// baseline | topo | greedy | preserve
std::string_view policy_token(Policy p);
Policy parse_policy(std::string_view token);

struct Scores {
  Bandwidth agg_bw = 0;
  Bandwidth predicted_eff_bw = 0;
  Bandwidth preserved_bw = 0;
};

struct AllocationDecision {
  std::string job_id;
  Policy policy = Policy::kBaseline;
  DeviceSet devices;
  // Set when the policy selected among matcher output; Baseline and
  // Topo-aware pick devices directly.
  std::optional<Match> chosen_match;
  // Placement the scores refer to. For direct picks, pattern vertex i sits
  // on the i-th smallest device.
  Match placement;
  LinkCensus census;
  Scores scores;
};

struct PolicyOptions {
  EffBwModel model = EffBwModel::default_model();
  MatchOptions match;
  // Match scoring fan-out; the decision is identical for any value.
  int threads = 1;
};

// Direct device pickers; std::nullopt when fewer than k devices are free.
std::optional<DeviceSet> lowest_free_devices(const AllocationState& state, int k);
// Smallest partition of the machine -> socket -> half-socket hierarchy with
// k free devices (ties to the lowest device id), then its k lowest free ids.
std::optional<DeviceSet> topo_aware_devices(const AllocationState& state, int k);

// Scores a concrete placement against the state before allocation.
AllocationDecision score_placement(const AllocationState& state, Match placement,
                                   const EffBwModel& model);

// Each returns std::nullopt when the job cannot be placed now (no capacity).
std::optional<AllocationDecision> select_baseline(const AllocationState& state,
                                                  const AppPattern& pattern,
                                                  const PolicyOptions& opts = {});
std::optional<AllocationDecision> select_topo_aware(const AllocationState& state,
                                                    const AppPattern& pattern,
                                                    const PolicyOptions& opts = {});
// Highest aggregated bandwidth.
std::optional<AllocationDecision> select_greedy(const AllocationState& state,
                                                const AppPattern& pattern,
                                                const PolicyOptions& opts = {});
// Sensitive jobs: highest predicted effective bandwidth. Insensitive jobs:
// highest bandwidth left among the remaining free devices.
std::optional<AllocationDecision> select_preserve(const AllocationState& state,
                                                  const AppPattern& pattern,
                                                  bool bw_sensitive,
                                                  const PolicyOptions& opts = {});

std::optional<AllocationDecision> decide(Policy policy, const AllocationState& state,
                                         const AppPattern& pattern, bool bw_sensitive,
                                         const PolicyOptions& opts = {});

}  // namespace patalloc
