// Copyright 2026 The patalloc Authors.
// SPDX-License-Identifier: Apache-2.0

#include "patalloc/matcher.h"

#include <algorithm>

#include <fmt/format.h>

namespace patalloc {

Match make_match(const AppPattern& pattern, std::vector<DeviceId> vertex_map) {
  if (static_cast<int>(vertex_map.size()) != pattern.vertex_count()) {
    throw std::invalid_argument(fmt::format(
        "vertex map has {} entries for a {}-vertex pattern", vertex_map.size(),
        pattern.vertex_count()));
  }
  Match m;
  for (DeviceId d : vertex_map) {
    if (m.devices.contains(d)) {
      throw std::invalid_argument(fmt::format("device {} mapped twice", d));
    }
    m.devices.insert(d);
  }
  m.used_edges.reserve(pattern.edges().size());
  for (auto [a, b] : pattern.edges()) {
    m.used_edges.push_back(std::minmax(vertex_map[static_cast<size_t>(a)],
                                       vertex_map[static_cast<size_t>(b)]));
  }
  std::sort(m.used_edges.begin(), m.used_edges.end());
  m.vertex_map = std::move(vertex_map);
  return m;
}

bool match_less(const Match& a, const Match& b) {
  if (a.devices != b.devices) return lex_less(a.devices, b.devices);
  return a.used_edges < b.used_edges;
}

LinkCensus link_census(const Match& match, const HardwareGraph& g) {
  LinkCensus c;
  for (auto [u, v] : match.used_edges) {
    switch (g.link(u, v)) {
      case LinkClass::kDoubleNVLink2: ++c.x; break;
      case LinkClass::kSingleNVLink2:
      case LinkClass::kSingleNVLink1: ++c.y; break;
      case LinkClass::kPCIe: ++c.z; break;
    }
  }
  return c;
}

// --- symmetry breaking ----------------------------------------------------

namespace {

// Search for an automorphism that fixes every vertex in `fixed` and sends
// `from` to `to`.
class AutomorphismSearch {
 public:
  explicit AutomorphismSearch(const AppPattern& p)
      : p_(p), n_(p.vertex_count()), adj_(static_cast<size_t>(n_ * n_), false) {
    for (auto [a, b] : p.edges()) {
      adj_[idx(a, b)] = adj_[idx(b, a)] = true;
    }
    for (int v = 0; v < n_; ++v) degree_.push_back(p.degree(v));
  }

  bool exists(const std::vector<int>& fixed, int from, int to) {
    if (degree_[static_cast<size_t>(from)] != degree_[static_cast<size_t>(to)]) return false;
    image_.assign(static_cast<size_t>(n_), -1);
    used_.assign(static_cast<size_t>(n_), false);
    for (int f : fixed) assign(f, f);
    if (used_[static_cast<size_t>(to)] && image_[static_cast<size_t>(from)] != to) return false;
    if (image_[static_cast<size_t>(from)] >= 0) return image_[static_cast<size_t>(from)] == to;
    if (!consistent(from, to)) return false;
    assign(from, to);
    return extend(0);
  }

 private:
  size_t idx(int a, int b) const { return static_cast<size_t>(a * n_ + b); }

  void assign(int v, int w) {
    image_[static_cast<size_t>(v)] = w;
    used_[static_cast<size_t>(w)] = true;
  }
  void unassign(int v) {
    used_[static_cast<size_t>(image_[static_cast<size_t>(v)])] = false;
    image_[static_cast<size_t>(v)] = -1;
  }

  bool consistent(int v, int w) const {
    for (int u = 0; u < n_; ++u) {
      int iu = image_[static_cast<size_t>(u)];
      if (iu >= 0 && adj_[idx(u, v)] != adj_[idx(iu, w)]) return false;
    }
    return true;
  }

  bool extend(int v) {
    while (v < n_ && image_[static_cast<size_t>(v)] >= 0) ++v;
    if (v == n_) return true;
    for (int w = 0; w < n_; ++w) {
      if (used_[static_cast<size_t>(w)] ||
          degree_[static_cast<size_t>(w)] != degree_[static_cast<size_t>(v)] ||
          !consistent(v, w)) {
        continue;
      }
      assign(v, w);
      if (extend(v + 1)) return true;
      unassign(v);
    }
    return false;
  }

  const AppPattern& p_;
  int n_;
  std::vector<bool> adj_;
  std::vector<int> degree_;
  std::vector<int> image_;
  std::vector<bool> used_;
};

}  // namespace

std::vector<std::pair<int, int>> symmetry_breaking_constraints(const AppPattern& pattern) {
  AutomorphismSearch search(pattern);
  std::vector<std::pair<int, int>> constraints;
  std::vector<int> fixed;
  const int n = pattern.vertex_count();
  for (;;) {
    bool progressed = false;
    for (int v = 0; v < n && !progressed; ++v) {
      if (std::find(fixed.begin(), fixed.end(), v) != fixed.end()) continue;
      std::vector<int> orbit;
      for (int w = 0; w < n; ++w) {
        if (w != v && search.exists(fixed, v, w)) orbit.push_back(w);
      }
      if (orbit.empty()) continue;
      for (int w : orbit) constraints.emplace_back(v, w);
      fixed.push_back(v);
      progressed = true;
    }
    if (!progressed) break;
  }
  return constraints;
}

// --- enumeration ----------------------------------------------------------

namespace {

class Enumerator {
 public:
  Enumerator(const AppPattern& pattern, std::vector<DeviceId> free_devices,
             std::int64_t limit)
      : pattern_(pattern),
        free_(std::move(free_devices)),
        limit_(limit),
        map_(static_cast<size_t>(pattern.vertex_count()), 0),
        taken_(free_.size(), false) {
    // Constraints become checkable once their later endpoint is placed.
    checks_.resize(map_.size());
    for (auto [a, b] : symmetry_breaking_constraints(pattern)) {
      checks_[static_cast<size_t>(std::max(a, b))].emplace_back(a, b);
    }
  }

  std::vector<Match> run() {
    place(0);
    return std::move(out_);
  }

 private:
  void place(size_t v) {
    if (v == map_.size()) {
      if (++produced_ > limit_) {
        throw MatchLimitExceeded(fmt::format(
            "pattern enumeration exceeded {} embeddings ({} vertices on {} free "
            "devices)", limit_, map_.size(), free_.size()));
      }
      out_.push_back(make_match(pattern_, map_));
      return;
    }
    for (size_t i = 0; i < free_.size(); ++i) {
      if (taken_[i]) continue;
      map_[v] = free_[i];
      if (!satisfied(v)) continue;
      taken_[i] = true;
      place(v + 1);
      taken_[i] = false;
    }
  }

  bool satisfied(size_t v) const {
    for (auto [a, b] : checks_[v]) {
      if (map_[static_cast<size_t>(a)] >= map_[static_cast<size_t>(b)]) return false;
    }
    return true;
  }

  const AppPattern& pattern_;
  std::vector<DeviceId> free_;
  std::int64_t limit_;
  std::vector<DeviceId> map_;
  std::vector<bool> taken_;
  std::vector<std::vector<std::pair<int, int>>> checks_;
  std::int64_t produced_ = 0;
  std::vector<Match> out_;
};

}  // namespace

std::vector<Match> find_matches(const AllocationState& state,
                                const AppPattern& pattern,
                                const MatchOptions& opts) {
  if (pattern.vertex_count() > 1 && !pattern.connected()) {
    throw std::invalid_argument("cannot match a disconnected pattern");
  }
  DeviceSet free = state.available();
  if (pattern.vertex_count() > free.size()) return {};

  auto matches = Enumerator(pattern, free.ids(), opts.max_embeddings).run();
  std::sort(matches.begin(), matches.end(), match_less);
  matches.erase(std::unique(matches.begin(), matches.end(),
                            [](const Match& a, const Match& b) {
                              return a.devices == b.devices &&
                                     a.used_edges == b.used_edges;
                            }),
                matches.end());
  return matches;
}

}  // namespace patalloc
