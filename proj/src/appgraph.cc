// Copyright 2026 The patalloc Authors.
// SPDX-License-Identifier: Apache-2.0

#include "patalloc/appgraph.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <random>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

#include "patalloc/topology.h"
#include "patalloc/util.h"

namespace patalloc {

std::string_view shape_token(PatternShape s) {
  switch (s) {
    case PatternShape::kRing: return "ring";
    case PatternShape::kTree: return "tree";
    case PatternShape::kRingTree: return "ringtree";
    case PatternShape::kFullyConnected: return "full";
  }
  return "?";
}

PatternShape parse_shape(std::string_view token) {
  if (token == "ring") return PatternShape::kRing;
  if (token == "tree") return PatternShape::kTree;
  if (token == "ringtree") return PatternShape::kRingTree;
  if (token == "full") return PatternShape::kFullyConnected;
  throw std::invalid_argument(fmt::format(
      "unknown shape '{}' (expected ring, tree, ringtree or full)", token));
}

AppPattern::AppPattern(int vertex_count, std::vector<std::pair<int, int>> edges)
    : vertex_count_(vertex_count), edges_(std::move(edges)) {
  if (vertex_count_ < 1) throw std::invalid_argument("pattern needs at least one vertex");
  for (auto& [a, b] : edges_) {
    if (a == b) throw std::invalid_argument(fmt::format("pattern self-loop at {}", a));
    if (a < 0 || b < 0 || a >= vertex_count_ || b >= vertex_count_) {
      throw std::invalid_argument(fmt::format(
          "pattern edge ({}, {}) outside 0..{}", a, b, vertex_count_ - 1));
    }
    if (a > b) std::swap(a, b);
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
}

bool AppPattern::has_edge(int a, int b) const {
  return std::binary_search(edges_.begin(), edges_.end(), std::pair<int, int>(std::minmax(a, b)));
}

int AppPattern::degree(int v) const {
  return static_cast<int>(std::count_if(edges_.begin(), edges_.end(), [v](auto e) {
    return e.first == v || e.second == v;
  }));
}

bool AppPattern::connected() const {
  std::vector<bool> seen(static_cast<size_t>(vertex_count_), false);
  std::vector<int> frontier = {0};
  seen[0] = true;
  int reached = 1;
  while (!frontier.empty()) {
    int v = frontier.back();
    frontier.pop_back();
    for (auto [a, b] : edges_) {
      int other = a == v ? b : b == v ? a : -1;
      if (other >= 0 && !seen[static_cast<size_t>(other)]) {
        seen[static_cast<size_t>(other)] = true;
        ++reached;
        frontier.push_back(other);
      }
    }
  }
  return reached == vertex_count_;
}

namespace {

void add_ring(std::vector<std::pair<int, int>>& edges, int n) {
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  if (n >= 3) edges.emplace_back(0, n - 1);
}

void add_tree(std::vector<std::pair<int, int>>& edges, int n) {
  for (int i = 0; i < n; ++i) {
    for (int c : {2 * i + 1, 2 * i + 2}) {
      if (c < n) edges.emplace_back(i, c);
    }
  }
}

}  // namespace

AppPattern make_pattern(PatternShape shape, int n) {
  if (n < 1) throw std::invalid_argument("pattern size must be positive");
  std::vector<std::pair<int, int>> edges;
  switch (shape) {
    case PatternShape::kRing:
      if (n < 2) throw std::invalid_argument("a ring needs at least 2 vertices");
      add_ring(edges, n);
      break;
    case PatternShape::kTree:
      add_tree(edges, n);
      break;
    case PatternShape::kRingTree:
      add_ring(edges, n);
      add_tree(edges, n);
      break;
    case PatternShape::kFullyConnected:
      for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) edges.emplace_back(a, b);
      }
      break;
  }
  return AppPattern(n, std::move(edges));
}

AppPattern job_pattern(const JobSpec& job) {
  if (job.gpu_count == 1) return AppPattern(1, {});
  return make_pattern(job.shape, job.gpu_count);
}

// --- job files ------------------------------------------------------------

namespace {

double parse_number(std::string_view tok, size_t row, std::string_view field) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw ParseError(fmt::format("row {}: {} '{}' is not a number", row, field, tok));
  }
  return v;
}

}  // namespace

std::vector<JobSpec> parse_jobs(std::string_view text) {
  std::vector<JobSpec> jobs;
  std::set<std::string, std::less<>> ids;
  size_t row = 0;
  for (std::string_view line : split_lines(text)) {
    ++row;
    line = trim(line);
    if (line.empty()) continue;
    auto fields = split(line, ',');
    for (auto& f : fields) f = trim(f);
    if (fields[0] == "job_id") continue;
    if (fields.size() != 6 && fields.size() != 7) {
      throw ParseError(fmt::format("row {}: expected 6 or 7 fields, got {}", row,
                                   fields.size()));
    }
    JobSpec job;
    job.job_id = std::string(fields[0]);
    if (job.job_id.empty()) throw ParseError(fmt::format("row {}: empty job_id", row));
    if (!ids.insert(job.job_id).second) {
      throw ParseError(fmt::format("row {}: duplicate job_id '{}'", row, job.job_id));
    }
    int gpus = 0;
    auto [ptr, ec] = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), gpus);
    if (ec != std::errc{} || ptr != fields[1].data() + fields[1].size()) {
      throw ParseError(fmt::format("row {}: gpu_count '{}' is not an integer", row, fields[1]));
    }
    if (gpus < 1) throw ParseError(fmt::format("row {}: gpu_count {} < 1", row, gpus));
    job.gpu_count = gpus;
    try {
      job.shape = parse_shape(fields[2]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(fmt::format("row {}: {}", row, e.what()));
    }
    if (fields[3] == "true") {
      job.bw_sensitive = true;
    } else if (fields[3] == "false") {
      job.bw_sensitive = false;
    } else {
      throw ParseError(fmt::format("row {}: bw_sensitive '{}' is not true/false", row, fields[3]));
    }
    job.duration = parse_number(fields[4], row, "duration_s");
    if (!(job.duration > 0)) throw ParseError(fmt::format("row {}: duration must be > 0", row));
    job.network_name = std::string(fields[5]);
    if (fields.size() == 7) {
      job.arrival = parse_number(fields[6], row, "arrival_s");
      if (job.arrival < 0) throw ParseError(fmt::format("row {}: arrival_s < 0", row));
    }
    jobs.push_back(std::move(job));
  }
  return jobs;
}

std::string serialize_jobs(const std::vector<JobSpec>& jobs) {
  std::string out = "job_id,gpu_count,shape,bw_sensitive,duration_s,network_name,arrival_s\n";
  for (const JobSpec& j : jobs) {
    out += fmt::format("{},{},{},{},{},{},{}\n", j.job_id, j.gpu_count,
                       shape_token(j.shape), j.bw_sensitive ? "true" : "false",
                       format_full(j.duration), j.network_name, format_full(j.arrival));
  }
  return out;
}

const std::vector<WorkloadEntry>& default_workload_mix() {
  static const std::vector<WorkloadEntry> kMix = {
      {"alexnet", true, 511},   {"vgg16", true, 785},
      {"resnet50", true, 600},  {"inceptionv3", true, 650},
      {"caffenet", false, 300}, {"googlenet", false, 350},
  };
  return kMix;
}

bool default_sensitivity(std::string_view network_name) {
  std::string lower;
  for (char c : network_name) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (const auto& e : default_workload_mix()) {
    if (e.network_name == lower) return e.bw_sensitive;
  }
  if (lower == "cusimann" || lower == "gmm" || lower == "jacobi") return false;
  throw std::invalid_argument(fmt::format("no sensitivity label for network '{}'", network_name));
}

std::vector<JobSpec> generate_jobs(const JobGenOptions& opts) {
  if (opts.mix.empty()) throw std::invalid_argument("job mix is empty");
  if (opts.count < 1) throw std::invalid_argument("job count must be positive");
  if (opts.min_gpus < 1 || opts.max_gpus < opts.min_gpus) {
    throw std::invalid_argument(fmt::format(
        "bad GPU range [{}, {}]", opts.min_gpus, opts.max_gpus));
  }
  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<int> gpus(opts.min_gpus, opts.max_gpus);
  std::uniform_int_distribution<size_t> pick(0, opts.mix.size() - 1);
  std::vector<JobSpec> jobs;
  jobs.reserve(static_cast<size_t>(opts.count));
  for (int i = 0; i < opts.count; ++i) {
    const WorkloadEntry& w = opts.mix[pick(rng)];
    JobSpec j;
    j.job_id = fmt::format("j{}", i + 1);
    j.gpu_count = gpus(rng);
    j.shape = PatternShape::kRing;
    j.bw_sensitive = w.bw_sensitive;
    j.duration = w.duration;
    j.network_name = w.network_name;
    jobs.push_back(std::move(j));
  }
  return jobs;
}

}  // namespace patalloc
