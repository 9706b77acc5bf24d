// Copyright 2026 The patalloc Authors.
// SPDX-License-Identifier: Apache-2.0

#include "patalloc/topology.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace patalloc {

using json = nlohmann::ordered_json;

std::string_view link_class_token(LinkClass c) {
  switch (c) {
    case LinkClass::kDoubleNVLink2: return "nv2x2";
    case LinkClass::kSingleNVLink2: return "nv2x1";
    case LinkClass::kSingleNVLink1: return "nv1x1";
    case LinkClass::kPCIe: return "pcie";
  }
  return "?";
}

LinkClass parse_link_class(std::string_view token) {
  if (token == "nv2x2") return LinkClass::kDoubleNVLink2;
  if (token == "nv2x1") return LinkClass::kSingleNVLink2;
  if (token == "nv1x1") return LinkClass::kSingleNVLink1;
  if (token == "pcie") return LinkClass::kPCIe;
  throw ParseError(fmt::format(
      "unknown link class '{}' (expected nv2x2, nv2x1, nv1x1 or pcie)", token));
}

// --- DeviceSet ------------------------------------------------------------

DeviceSet DeviceSet::range(DeviceId first, DeviceId last) {
  DeviceSet s;
  for (DeviceId d = first; d <= last; ++d) s.insert(d);
  return s;
}

std::vector<DeviceId> DeviceSet::ids() const {
  std::vector<DeviceId> out;
  out.reserve(static_cast<size_t>(size()));
  for (std::uint64_t b = bits_; b != 0; b &= b - 1) {
    out.push_back(std::countr_zero(b) + 1);
  }
  return out;
}

DeviceSet DeviceSet::lowest(int k) const {
  DeviceSet out;
  for (std::uint64_t b = bits_; b != 0 && k > 0; b &= b - 1, --k) {
    out.bits_ |= b & (~b + 1);
  }
  return out;
}

std::string DeviceSet::to_string() const {
  std::string out;
  for (DeviceId d : ids()) {
    if (!out.empty()) out += '+';
    out += std::to_string(d);
  }
  return out;
}

DeviceSet DeviceSet::parse(std::string_view text) {
  DeviceSet s;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t end = text.find_first_of("+,", pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view tok = text.substr(pos, end - pos);
    int value = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size()) {
      throw std::invalid_argument(
          fmt::format("bad device list '{}': '{}' is not an id", text, tok));
    }
    if (value < 1 || value > kMaxDevices) {
      throw std::invalid_argument(fmt::format("device id {} out of range", value));
    }
    if (s.contains(value)) {
      throw std::invalid_argument(fmt::format("device id {} listed twice", value));
    }
    s.insert(value);
    pos = end + 1;
  }
  return s;
}

bool lex_less(const DeviceSet& a, const DeviceSet& b) {
  // Walking both ascending sequences; the first difference decides, and a
  // proper prefix orders first.
  std::uint64_t x = a.bits(), y = b.bits();
  while (x != 0 && y != 0) {
    int dx = std::countr_zero(x), dy = std::countr_zero(y);
    if (dx != dy) return dx < dy;
    x &= x - 1;
    y &= y - 1;
  }
  return x == 0 && y != 0;
}

// --- HardwareGraph --------------------------------------------------------

HardwareGraph::HardwareGraph(std::string name, int device_count,
                             std::vector<std::vector<DeviceId>> sockets,
                             const std::vector<Link>& nvlinks)
    : name_(std::move(name)),
      device_count_(device_count),
      sockets_(std::move(sockets)) {
  if (device_count_ < 1 || device_count_ > kMaxDevices) {
    throw std::invalid_argument(fmt::format(
        "device count {} outside 1..{}", device_count_, kMaxDevices));
  }
  matrix_.assign(static_cast<size_t>(device_count_ * device_count_),
                 LinkClass::kPCIe);

  DeviceSet covered;
  for (auto& group : sockets_) {
    if (group.empty()) throw std::invalid_argument("empty socket group");
    std::sort(group.begin(), group.end());
    for (DeviceId d : group) {
      if (!valid_device(d)) {
        throw std::invalid_argument(fmt::format("socket device {} out of range", d));
      }
      if (covered.contains(d)) {
        throw std::invalid_argument(
            fmt::format("device {} appears in more than one socket", d));
      }
      covered.insert(d);
    }
  }
  if (covered != all_devices()) {
    throw std::invalid_argument(fmt::format(
        "socket groups do not cover devices {}",
        (all_devices() - covered).to_string()));
  }

  std::vector<bool> seen(matrix_.size(), false);
  for (Link l : nvlinks) {
    if (l.a == l.b) {
      throw std::invalid_argument(fmt::format("self-loop on device {}", l.a));
    }
    if (!valid_device(l.a) || !valid_device(l.b)) {
      throw std::invalid_argument(fmt::format(
          "link {}-{} references a device outside 1..{}", l.a, l.b, device_count_));
    }
    if (l.a > l.b) std::swap(l.a, l.b);
    auto idx = static_cast<size_t>((l.a - 1) * device_count_ + (l.b - 1));
    if (seen[idx]) {
      throw std::invalid_argument(fmt::format("duplicate link {}-{}", l.a, l.b));
    }
    seen[idx] = true;
    if (l.cls == LinkClass::kPCIe) continue;
    cell(l.a, l.b) = l.cls;
    cell(l.b, l.a) = l.cls;
    nvlinks_.push_back(l);
  }
  std::sort(nvlinks_.begin(), nvlinks_.end(), [](const Link& x, const Link& y) {
    return std::pair(x.a, x.b) < std::pair(y.a, y.b);
  });
  std::sort(sockets_.begin(), sockets_.end());
}

LinkClass HardwareGraph::link(DeviceId u, DeviceId v) const {
  if (!valid_device(u) || !valid_device(v)) {
    throw std::invalid_argument(fmt::format(
        "device pair ({}, {}) outside 1..{}", u, v, device_count_));
  }
  if (u == v) {
    throw std::invalid_argument(fmt::format("no link from device {} to itself", u));
  }
  return matrix_[static_cast<size_t>((u - 1) * device_count_ + (v - 1))];
}

bool HardwareGraph::same_structure(const HardwareGraph& other) const {
  return device_count_ == other.device_count_ && sockets_ == other.sockets_ &&
         nvlinks_ == other.nvlinks_;
}

// --- builtins -------------------------------------------------------------

namespace {

// Hybrid cube-mesh of the DGX-1: two fully connected quads {1..4}, {5..8}
// plus four cross links; each device has two double and two single links.
std::vector<Link> cube_mesh_links(DeviceId offset, LinkClass dbl, LinkClass sgl) {
  static constexpr std::pair<int, int> kDouble[] = {
      {1, 4}, {1, 5}, {2, 3}, {2, 6}, {3, 4}, {5, 8}, {6, 7}, {7, 8}};
  static constexpr std::pair<int, int> kSingle[] = {
      {1, 2}, {1, 3}, {2, 4}, {3, 7}, {4, 8}, {5, 6}, {5, 7}, {6, 8}};
  std::vector<Link> out;
  for (auto [a, b] : kDouble) out.push_back({a + offset, b + offset, dbl});
  for (auto [a, b] : kSingle) out.push_back({a + offset, b + offset, sgl});
  return out;
}

HardwareGraph make_dgx1v() {
  HardwareGraph g("dgx1v", 8, {{1, 2, 3, 4}, {5, 6, 7, 8}},
                  cube_mesh_links(0, LinkClass::kDoubleNVLink2,
                                  LinkClass::kSingleNVLink2));
  g.set_notes("DGX-1 with V100: hybrid cube-mesh, NVLink2 double/single links");
  return g;
}

HardwareGraph make_dgx1p() {
  HardwareGraph g("dgx1p", 8, {{1, 2, 3, 4}, {5, 6, 7, 8}},
                  cube_mesh_links(0, LinkClass::kSingleNVLink1,
                                  LinkClass::kSingleNVLink1));
  g.set_notes("DGX-1 with P100: hybrid cube-mesh, every NVLink is single NVLink1");
  return g;
}

HardwareGraph make_summit() {
  std::vector<Link> links;
  for (int base : {0, 3}) {
    links.push_back({base + 1, base + 2, LinkClass::kDoubleNVLink2});
    links.push_back({base + 1, base + 3, LinkClass::kDoubleNVLink2});
    links.push_back({base + 2, base + 3, LinkClass::kDoubleNVLink2});
  }
  HardwareGraph g("summit", 6, {{1, 2, 3}, {4, 5, 6}}, links);
  g.set_notes("Summit node: per-socket GPU triples fully connected by double "
              "NVLink2; cross-socket traffic over PCIe");
  return g;
}

HardwareGraph make_torus2d16() {
  constexpr int kSide = 4;
  auto id = [](int r, int c) { return r * kSide + c + 1; };
  std::vector<Link> links;
  for (int r = 0; r < kSide; ++r) {
    for (int c = 0; c < kSide; ++c) {
      int right = id(r, (c + 1) % kSide);
      int down = id((r + 1) % kSide, c);
      links.push_back({std::min(id(r, c), right), std::max(id(r, c), right),
                       LinkClass::kDoubleNVLink2});
      links.push_back({std::min(id(r, c), down), std::max(id(r, c), down),
                       LinkClass::kSingleNVLink2});
    }
  }
  HardwareGraph g("torus2d16", 16,
                  {{1, 2, 3, 4, 5, 6, 7, 8}, {9, 10, 11, 12, 13, 14, 15, 16}},
                  links);
  g.set_notes("4x4 torus, devices numbered row-major 1..16. Horizontal ring "
              "links are double NVLink2, vertical ring links single NVLink2, "
              "all other pairs PCIe. Sockets are row pairs {1..8}, {9..16}. "
              "The class assignment is a convention of this project.");
  return g;
}

HardwareGraph make_cubemesh16() {
  auto links = cube_mesh_links(0, LinkClass::kDoubleNVLink2, LinkClass::kSingleNVLink2);
  auto upper = cube_mesh_links(8, LinkClass::kDoubleNVLink2, LinkClass::kSingleNVLink2);
  links.insert(links.end(), upper.begin(), upper.end());
  for (auto [a, b] : {std::pair{1, 9}, {4, 12}, {5, 13}, {8, 16}}) {
    links.push_back({a, b, LinkClass::kSingleNVLink2});
  }
  HardwareGraph g("cubemesh16", 16,
                  {{1, 2, 3, 4, 5, 6, 7, 8}, {9, 10, 11, 12, 13, 14, 15, 16}},
                  links);
  g.set_notes("Two DGX-1V cube-meshes (1..8, 9..16) bridged by single NVLink2 "
              "edges 1-9, 4-12, 5-13, 8-16. A convention of this project.");
  return g;
}

}  // namespace

const std::vector<std::string>& builtin_topology_names() {
  static const std::vector<std::string> kNames = {"dgx1v", "dgx1p", "summit",
                                                  "torus2d16", "cubemesh16"};
  return kNames;
}

HardwareGraph builtin_topology(std::string_view name) {
  if (name == "dgx1v") return make_dgx1v();
  if (name == "dgx1p") return make_dgx1p();
  if (name == "summit") return make_summit();
  if (name == "torus2d16") return make_torus2d16();
  if (name == "cubemesh16") return make_cubemesh16();
  throw std::invalid_argument(fmt::format(
      "unknown topology '{}' (valid: {})", name,
      fmt::join(builtin_topology_names(), ", ")));
}

// --- file format ----------------------------------------------------------

namespace {

int require_int(const json& node, const std::string& field) {
  if (!node.is_number_integer()) {
    throw ParseError(fmt::format("{}: expected an integer", field));
  }
  return node.get<int>();
}

}  // namespace

HardwareGraph parse_topology(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("topology syntax error: {}", e.what()));
  }
  if (!doc.is_object()) throw ParseError("topology: top level must be an object");
  for (const char* key : {"name", "devices", "sockets", "links"}) {
    if (!doc.contains(key)) throw ParseError(fmt::format("{}: missing field", key));
  }
  for (const auto& [key, _] : doc.items()) {
    if (key != "name" && key != "devices" && key != "sockets" &&
        key != "links" && key != "notes") {
      throw ParseError(fmt::format("{}: unknown field", key));
    }
  }
  if (!doc["name"].is_string()) throw ParseError("name: expected a string");
  int n = require_int(doc["devices"], "devices");
  if (n < 1 || n > kMaxDevices) {
    throw ParseError(fmt::format("devices: {} outside 1..{}", n, kMaxDevices));
  }

  if (!doc["sockets"].is_array()) throw ParseError("sockets: expected a list");
  std::vector<std::vector<DeviceId>> sockets;
  DeviceSet covered;
  for (size_t i = 0; i < doc["sockets"].size(); ++i) {
    const auto& group = doc["sockets"][i];
    std::string field = fmt::format("sockets[{}]", i);
    if (!group.is_array() || group.empty()) {
      throw ParseError(field + ": expected a non-empty list of ids");
    }
    auto& out = sockets.emplace_back();
    for (size_t j = 0; j < group.size(); ++j) {
      std::string f = fmt::format("{}[{}]", field, j);
      int d = require_int(group[j], f);
      if (d < 1 || d > n) {
        throw ParseError(fmt::format("{}: id {} out of range 1..{}", f, d, n));
      }
      if (covered.contains(d)) {
        throw ParseError(fmt::format("{}: device {} already in a socket", f, d));
      }
      covered.insert(d);
      out.push_back(d);
    }
  }
  if (covered != DeviceSet::range(1, n)) {
    throw ParseError(fmt::format("sockets: devices {} not covered",
                                 (DeviceSet::range(1, n) - covered).to_string()));
  }

  if (!doc["links"].is_array()) throw ParseError("links: expected a list");
  std::vector<Link> links;
  std::vector<std::pair<int, int>> seen;
  for (size_t i = 0; i < doc["links"].size(); ++i) {
    const auto& rec = doc["links"][i];
    std::string field = fmt::format("links[{}]", i);
    if (!rec.is_object() || !rec.contains("a") || !rec.contains("b") ||
        !rec.contains("class")) {
      throw ParseError(field + ": expected {a, b, class}");
    }
    int a = require_int(rec["a"], field + ".a");
    int b = require_int(rec["b"], field + ".b");
    if (!rec["class"].is_string()) throw ParseError(field + ".class: expected a string");
    if (a < 1 || a > n) throw ParseError(fmt::format("{}.a: id {} out of range 1..{}", field, a, n));
    if (b < 1 || b > n) throw ParseError(fmt::format("{}.b: id {} out of range 1..{}", field, b, n));
    if (a == b) throw ParseError(fmt::format("{}: self-loop {}-{}", field, a, b));
    LinkClass cls;
    try {
      cls = parse_link_class(rec["class"].get<std::string>());
    } catch (const ParseError& e) {
      throw ParseError(fmt::format("{}.class: {}", field, e.what()));
    }
    std::pair<int, int> key = std::minmax(a, b);
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
      throw ParseError(fmt::format("{}: duplicate link {}-{}", field, key.first, key.second));
    }
    seen.push_back(key);
    links.push_back({key.first, key.second, cls});
  }

  HardwareGraph g(doc["name"].get<std::string>(), n, std::move(sockets), links);
  if (doc.contains("notes")) {
    if (!doc["notes"].is_string()) throw ParseError("notes: expected a string");
    g.set_notes(doc["notes"].get<std::string>());
  }
  return g;
}

std::string serialize_topology(const HardwareGraph& g) {
  json doc;
  doc["name"] = g.name();
  if (!g.notes().empty()) doc["notes"] = g.notes();
  doc["devices"] = g.device_count();
  doc["sockets"] = g.sockets();
  json links = json::array();
  for (const Link& l : g.nvlinks()) {
    links.push_back({{"a", l.a}, {"b", l.b}, {"class", link_class_token(l.cls)}});
  }
  doc["links"] = std::move(links);
  return doc.dump(2) + "\n";
}

HardwareGraph load_topology(const std::string& name_or_path) {
  const auto& names = builtin_topology_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) {
    return builtin_topology(name_or_path);
  }
  std::ifstream in(name_or_path);
  if (!in) {
    throw std::invalid_argument(fmt::format(
        "'{}' is neither a builtin topology ({}) nor a readable file",
        name_or_path, fmt::join(names, ", ")));
  }
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_topology(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("{}: {}", name_or_path, e.what()));
  }
}

Bandwidth induced_total_bandwidth(const HardwareGraph& g, DeviceSet vertices) {
  auto ids = vertices.ids();
  for (DeviceId d : ids) {
    if (!g.valid_device(d)) {
      throw std::invalid_argument(fmt::format("device {} not in {}", d, g.name()));
    }
  }
  Bandwidth total = 0;
  for (size_t i = 0; i < ids.size(); ++i) {
    for (size_t j = i + 1; j < ids.size(); ++j) total += g.bandwidth(ids[i], ids[j]);
  }
  return total;
}

// --- AllocationState ------------------------------------------------------

AllocationState::AllocationState(GraphPtr base) : base_(std::move(base)) {
  if (!base_) throw std::invalid_argument("allocation state needs a graph");
}

std::vector<Link> AllocationState::available_edges() const {
  std::vector<Link> out;
  auto ids = available().ids();
  for (size_t i = 0; i < ids.size(); ++i) {
    for (size_t j = i + 1; j < ids.size(); ++j) {
      out.push_back({ids[i], ids[j], base_->link(ids[i], ids[j])});
    }
  }
  return out;
}

void AllocationState::allocate(DeviceSet devices) {
  if (!devices.subset_of(base_->all_devices())) {
    throw std::invalid_argument(fmt::format(
        "cannot allocate {}: devices {} not in {}", devices.to_string(),
        (devices - base_->all_devices()).to_string(), base_->name()));
  }
  if (devices.intersects(busy_)) {
    throw std::invalid_argument(fmt::format(
        "cannot allocate {}: devices {} already busy", devices.to_string(),
        (devices & busy_).to_string()));
  }
  busy_ = busy_ | devices;
}

void AllocationState::release(DeviceSet devices) {
  if (!devices.subset_of(busy_)) {
    throw std::invalid_argument(fmt::format(
        "cannot release {}: devices {} are not busy", devices.to_string(),
        (devices - busy_).to_string()));
  }
  busy_ = busy_ - devices;
}

}  // namespace patalloc
