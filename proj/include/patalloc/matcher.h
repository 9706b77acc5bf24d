// Copyright 2026 The patalloc Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "patalloc/appgraph.h"
#include "patalloc/topology.h"

namespace patalloc {

using DevicePair = std::pair<DeviceId, DeviceId>;  // first < second

// Placement of a pattern onto free devices.
struct Match {
  std::vector<DeviceId> vertex_map;  // pattern vertex -> device
  DeviceSet devices;
  std::vector<DevicePair> used_edges;  // images of pattern edges, sorted

  bool operator==(const Match&) const = default;
};

// Builds a Match from an explicit vertex map. Throws on non-injective maps.
Match make_match(const AppPattern& pattern, std::vector<DeviceId> vertex_map);

// Ordering used for output and tie-breaking: ascending device tuple, then
// used_edges.
bool match_less(const Match& a, const Match& b);

struct LinkCensus {
  int x = 0;  // double NVLink
  int y = 0;  // single NVLink (v1 or v2)
  int z = 0;  // PCIe
  int total() const { return x + y + z; }
  bool operator==(const LinkCensus&) const = default;
};

LinkCensus link_census(const Match& match, const HardwareGraph& g);

class MatchLimitExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MatchOptions {
  std::int64_t max_embeddings = 1'000'000;
};

// Pairs (a, b) meaning map(a) < map(b). Every class of vertex maps that
// differ by a pattern automorphism has exactly one member satisfying all of
// them.
std::vector<std::pair<int, int>> symmetry_breaking_constraints(const AppPattern& pattern);

// All placements of `pattern` on the free devices of `state`, one per
// distinct (device set, used_edges). Since the hardware graph is complete,
// every injective map is a valid embedding. Returns an empty list when the
// pattern has more vertices than there are free devices; throws
// std::invalid_argument for a disconnected pattern and MatchLimitExceeded
// when the enumeration would exceed opts.max_embeddings.
std::vector<Match> find_matches(const AllocationState& state,
                                const AppPattern& pattern,
                                const MatchOptions& opts = {});

}  // namespace patalloc
