// Copyright 2026 The patalloc Authors.
// SPDX-License-Identifier: Apache-2.0

#include "patalloc/policies.h"

#include <algorithm>
#include <functional>
#include <limits>
#include <thread>

#include <fmt/format.h>

namespace patalloc {

std::string_view policy_token(Policy p) {
  switch (p) {
    case Policy::kBaseline: return "baseline";
    case Policy::kTopoAware: return "topo";
    case Policy::kGreedy: return "greedy";
    case Policy::kPreserve: return "preserve";
  }
  return "?";
}

Policy parse_policy(std::string_view token) {
  if (token == "baseline") return Policy::kBaseline;
  if (token == "topo") return Policy::kTopoAware;
  if (token == "greedy") return Policy::kGreedy;
  if (token == "preserve") return Policy::kPreserve;
  throw std::invalid_argument(fmt::format(
      "unknown policy '{}' (expected baseline, topo, greedy or preserve)", token));
}

std::optional<DeviceSet> lowest_free_devices(const AllocationState& state, int k) {
  DeviceSet free = state.available();
  if (k < 1 || free.size() < k) return std::nullopt;
  return free.lowest(k);
}

namespace {

void collect_partitions(const std::vector<std::vector<DeviceId>>& sockets,
                        std::vector<DeviceSet>& out) {
  DeviceSet all;
  for (const auto& s : sockets) all = all | DeviceSet::from(s);
  out.push_back(all);
  if (sockets.size() > 1) {
    auto mid = sockets.begin() + static_cast<std::ptrdiff_t>((sockets.size() + 1) / 2);
    collect_partitions({sockets.begin(), mid}, out);
    collect_partitions({mid, sockets.end()}, out);
    return;
  }
  const auto& ids = sockets.front();
  if (ids.size() > 1) {
    auto mid = ids.begin() + static_cast<std::ptrdiff_t>((ids.size() + 1) / 2);
    collect_partitions({std::vector<DeviceId>(ids.begin(), mid)}, out);
    collect_partitions({std::vector<DeviceId>(mid, ids.end())}, out);
  }
}

}  // namespace

std::optional<DeviceSet> topo_aware_devices(const AllocationState& state, int k) {
  DeviceSet free = state.available();
  if (k < 1 || free.size() < k) return std::nullopt;
  std::vector<DeviceSet> parts;
  collect_partitions(state.graph().sockets(), parts);
  std::optional<DeviceSet> best;
  for (DeviceSet part : parts) {
    if ((part & free).size() < k) continue;
    if (!best || part.size() < best->size() ||
        (part.size() == best->size() && lex_less(part, *best))) {
      best = part;
    }
  }
  // The root partition always qualifies once k devices are free.
  return (*best & free).lowest(k);
}

AllocationDecision score_placement(const AllocationState& state, Match placement,
                                   const EffBwModel& model) {
  AllocationDecision d;
  d.devices = placement.devices;
  d.census = link_census(placement, state.graph());
  d.scores.agg_bw = aggregated_bw(placement, state.graph());
  d.scores.predicted_eff_bw = predicted_effective_bw(model, d.census);
  d.scores.preserved_bw = preserved_bw(state, placement);
  d.placement = std::move(placement);
  return d;
}

namespace {

std::optional<AllocationDecision> direct_pick(Policy policy, const AllocationState& state,
                                              const AppPattern& pattern,
                                              std::optional<DeviceSet> devices,
                                              const PolicyOptions& opts) {
  if (!devices) return std::nullopt;
  auto d = score_placement(state, make_match(pattern, devices->ids()), opts.model);
  d.policy = policy;
  return d;
}

using MatchScore = std::function<double(const Match&)>;

// First index of the maximum score; matches arrive in tie-break order.
size_t argmax(const std::vector<Match>& matches, const MatchScore& score, int threads) {
  std::vector<double> values(matches.size());
  const size_t workers = std::clamp<size_t>(static_cast<size_t>(std::max(threads, 1)), 1,
                                            std::max<size_t>(matches.size() / 256, 1));
  if (workers <= 1) {
    for (size_t i = 0; i < matches.size(); ++i) values[i] = score(matches[i]);
  } else {
    std::vector<std::jthread> pool;
    const size_t chunk = (matches.size() + workers - 1) / workers;
    for (size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        const size_t end = std::min(matches.size(), (w + 1) * chunk);
        for (size_t i = w * chunk; i < end; ++i) values[i] = score(matches[i]);
      });
    }
  }
  size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < values.size(); ++i) {
    if (values[i] > best_value) {
      best_value = values[i];
      best = i;
    }
  }
  return best;
}

std::optional<AllocationDecision> pick_match(Policy policy, const AllocationState& state,
                                             const AppPattern& pattern,
                                             const MatchScore& score,
                                             const PolicyOptions& opts) {
  if (pattern.vertex_count() > state.free_count()) return std::nullopt;
  auto matches = find_matches(state, pattern, opts.match);
  if (matches.empty()) return std::nullopt;
  Match& chosen = matches[argmax(matches, score, opts.threads)];
  auto d = score_placement(state, chosen, opts.model);
  d.policy = policy;
  d.chosen_match = std::move(chosen);
  return d;
}

}  // namespace

std::optional<AllocationDecision> select_baseline(const AllocationState& state,
                                                  const AppPattern& pattern,
                                                  const PolicyOptions& opts) {
  return direct_pick(Policy::kBaseline, state, pattern,
                     lowest_free_devices(state, pattern.vertex_count()), opts);
}

std::optional<AllocationDecision> select_topo_aware(const AllocationState& state,
                                                    const AppPattern& pattern,
                                                    const PolicyOptions& opts) {
  return direct_pick(Policy::kTopoAware, state, pattern,
                     topo_aware_devices(state, pattern.vertex_count()), opts);
}

std::optional<AllocationDecision> select_greedy(const AllocationState& state,
                                                const AppPattern& pattern,
                                                const PolicyOptions& opts) {
  const HardwareGraph& g = state.graph();
  return pick_match(Policy::kGreedy, state, pattern,
                    [&g](const Match& m) { return aggregated_bw(m, g); }, opts);
}

std::optional<AllocationDecision> select_preserve(const AllocationState& state,
                                                  const AppPattern& pattern,
                                                  bool bw_sensitive,
                                                  const PolicyOptions& opts) {
  const HardwareGraph& g = state.graph();
  if (bw_sensitive) {
    const EffBwModel& model = opts.model;
    return pick_match(Policy::kPreserve, state, pattern,
                      [&g, &model](const Match& m) {
                        return predicted_effective_bw(model, link_census(m, g));
                      },
                      opts);
  }
  return pick_match(Policy::kPreserve, state, pattern,
                    [&state](const Match& m) { return preserved_bw(state, m); }, opts);
}

std::optional<AllocationDecision> decide(Policy policy, const AllocationState& state,
                                         const AppPattern& pattern, bool bw_sensitive,
                                         const PolicyOptions& opts) {
  switch (policy) {
    case Policy::kBaseline: return select_baseline(state, pattern, opts);
    case Policy::kTopoAware: return select_topo_aware(state, pattern, opts);
    case Policy::kGreedy: return select_greedy(state, pattern, opts);
    case Policy::kPreserve: return select_preserve(state, pattern, bw_sensitive, opts);
  }
  return std::nullopt;
}

}  // namespace patalloc
