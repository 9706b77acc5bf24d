// Copyright 2026 The patalloc Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "patalloc/util.h"

namespace patalloc {

// Device ids are 1-based, matching vendor tools (nvidia-smi shows GPU0 as
// device 1 here).
using DeviceId = int;

// Bandwidth in GB/s.
using Bandwidth = double;

inline constexpr int kMaxDevices = 64;

enum class LinkClass : std::uint8_t {
  kDoubleNVLink2,
  kSingleNVLink2,
  kSingleNVLink1,
  kPCIe,
};

constexpr Bandwidth link_bandwidth(LinkClass c) {
  switch (c) {
    case LinkClass::kDoubleNVLink2: return 50.0;
    case LinkClass::kSingleNVLink2: return 25.0;
    case LinkClass::kSingleNVLink1: return 20.0;
    case LinkClass::kPCIe: return 12.0;
  }
  return 0.0;
}

// File tokens: nv2x2, nv2x1, nv1x1, pcie.
std::string_view link_class_token(LinkClass c);
LinkClass parse_link_class(std::string_view token);

// Compact set of device ids in [1, kMaxDevices].
class DeviceSet {
 public:
  DeviceSet() = default;
  DeviceSet(std::initializer_list<DeviceId> ids) {
    for (DeviceId d : ids) insert(d);
  }
  template <typename Range>
  static DeviceSet from(const Range& ids) {
    DeviceSet s;
    for (DeviceId d : ids) s.insert(d);
    return s;
  }
  static DeviceSet range(DeviceId first, DeviceId last);

  void insert(DeviceId d) { bits_ |= bit(d); }
  void erase(DeviceId d) { bits_ &= ~bit(d); }
  bool contains(DeviceId d) const {
    return d >= 1 && d <= kMaxDevices && (bits_ & bit(d)) != 0;
  }
  int size() const { return std::popcount(bits_); }
  bool empty() const { return bits_ == 0; }

  DeviceSet operator|(DeviceSet o) const { return DeviceSet(bits_ | o.bits_); }
  DeviceSet operator&(DeviceSet o) const { return DeviceSet(bits_ & o.bits_); }
  DeviceSet operator-(DeviceSet o) const { return DeviceSet(bits_ & ~o.bits_); }
  bool intersects(DeviceSet o) const { return (bits_ & o.bits_) != 0; }
  bool subset_of(DeviceSet o) const { return (bits_ & ~o.bits_) == 0; }

  // Ascending ids.
  std::vector<DeviceId> ids() const;
  // The k smallest ids; fewer if the set is smaller.
  DeviceSet lowest(int k) const;

  std::uint64_t bits() const { return bits_; }
  bool operator==(const DeviceSet&) const = default;

  // "1+2+5"
  std::string to_string() const;
  // Accepts '+' or ',' separators.
  static DeviceSet parse(std::string_view text);

 private:
  explicit DeviceSet(std::uint64_t bits) : bits_(bits) {}
  static std::uint64_t bit(DeviceId d) {
    if (d < 1 || d > kMaxDevices) {
      throw std::out_of_range("device id " + std::to_string(d) +
                              " outside 1.." + std::to_string(kMaxDevices));
    }
    return std::uint64_t{1} << (d - 1);
  }
  std::uint64_t bits_ = 0;
};

// Lexicographic comparison of the ascending id tuples.
bool lex_less(const DeviceSet& a, const DeviceSet& b);

struct Link {
  DeviceId a;  // a < b
  DeviceId b;
  LinkClass cls;
  bool operator==(const Link&) const = default;
};

// Weighted undirected graph of accelerators. Every pair of devices is
// connected: pairs without an NVLink edge fall back to PCIe through the host.
// Immutable once built.
class HardwareGraph {
 public:
  HardwareGraph(std::string name, int device_count,
                std::vector<std::vector<DeviceId>> sockets,
                const std::vector<Link>& nvlinks);

  const std::string& name() const { return name_; }
  int device_count() const { return device_count_; }
  DeviceSet all_devices() const { return DeviceSet::range(1, device_count_); }
  const std::vector<std::vector<DeviceId>>& sockets() const { return sockets_; }
  // NVLink edges only, sorted by (a, b).
  const std::vector<Link>& nvlinks() const { return nvlinks_; }
  const std::string& notes() const { return notes_; }
  void set_notes(std::string notes) { notes_ = std::move(notes); }

  bool valid_device(DeviceId d) const { return d >= 1 && d <= device_count_; }

  // Throws std::invalid_argument for u == v or invalid ids.
  LinkClass link(DeviceId u, DeviceId v) const;
  Bandwidth bandwidth(DeviceId u, DeviceId v) const {
    return link_bandwidth(link(u, v));
  }

  // Structural equality; name and notes are ignored.
  bool same_structure(const HardwareGraph& other) const;

 private:
  LinkClass& cell(DeviceId u, DeviceId v) {
    return matrix_[static_cast<size_t>((u - 1) * device_count_ + (v - 1))];
  }

  std::string name_;
  int device_count_;
  std::vector<std::vector<DeviceId>> sockets_;
  std::vector<Link> nvlinks_;
  std::vector<LinkClass> matrix_;
  std::string notes_;
};

using GraphPtr = std::shared_ptr<const HardwareGraph>;

// dgx1v, dgx1p, summit, torus2d16, cubemesh16.
const std::vector<std::string>& builtin_topology_names();
HardwareGraph builtin_topology(std::string_view name);

// JSON topology document: {name, devices, sockets, links: [{a, b, class}],
// notes?}. Unlisted pairs are PCIe.
HardwareGraph parse_topology(std::string_view text);
std::string serialize_topology(const HardwareGraph& g);

// Builtin name, or else a path to a topology file.
HardwareGraph load_topology(const std::string& name_or_path);

// Sum of pairwise bandwidth over every unordered pair in `vertices`.
Bandwidth induced_total_bandwidth(const HardwareGraph& g, DeviceSet vertices);

// Busy/free bookkeeping over a fixed hardware graph. The available graph is
// the subgraph of the base induced by the free devices.
class AllocationState {
 public:
  explicit AllocationState(GraphPtr base);
  explicit AllocationState(HardwareGraph base)
      : AllocationState(std::make_shared<const HardwareGraph>(std::move(base))) {}

  const HardwareGraph& graph() const { return *base_; }
  const GraphPtr& graph_ptr() const { return base_; }
  DeviceSet busy() const { return busy_; }
  DeviceSet available() const { return base_->all_devices() - busy_; }
  int free_count() const { return available().size(); }

  // Edges of the available induced subgraph, including PCIe fallbacks.
  std::vector<Link> available_edges() const;

  // Throws std::invalid_argument and leaves the state unchanged when any
  // device is invalid or already busy.
  void allocate(DeviceSet devices);
  // Throws std::invalid_argument when any device is not busy.
  void release(DeviceSet devices);

  bool operator==(const AllocationState& o) const {
    return base_->same_structure(*o.base_) && busy_ == o.busy_;
  }

 private:
  GraphPtr base_;
  DeviceSet busy_;
};

}  // namespace patalloc
