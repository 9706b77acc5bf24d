// Copyright 2026 The patalloc Authors.
// SPDX-License-Identifier: Apache-2.0

#include "patalloc/cli.h"

#include <CLI11.hpp>
#include <fmt/format.h>

#include "patalloc/appgraph.h"
#include "patalloc/policies.h"
#include "patalloc/scoring.h"
#include "patalloc/simulator.h"
#include "patalloc/topology.h"
#include "patalloc/util.h"

namespace patalloc {

namespace {

const std::vector<std::string> kPolicies = {"baseline", "topo", "greedy", "preserve"};
const std::vector<std::string> kShapes = {"ring", "tree", "ringtree", "full"};
const std::vector<std::string> kGroupFields = {"all", "network", "gpus", "sensitive"};

struct Args {
  std::string topology;
  std::string policy;
  std::string jobs;
  std::string out;
  std::string model;
  std::string shape = "ring";
  std::string busy;
  std::string devices;
  std::string samples;
  std::string log;
  std::string group_by;
  std::string report_group_by;
  std::string name;
  int threads = 1;
  int gpus = 0;
  bool sensitive = false;
  bool dump = false;
  std::uint64_t seed = 0;
  int count = 300;
  int min_gpus = 1;
  int max_gpus = 5;
};

EffBwModel model_or_default(const std::string& path) {
  return path.empty() ? EffBwModel::default_model() : load_model(path);
}

AllocationState state_with_busy(const HardwareGraph& g, const std::string& busy) {
  AllocationState state(g);
  if (!busy.empty()) state.allocate(DeviceSet::parse(busy));
  return state;
}

void print_decision(std::ostream& out, const AllocationDecision& d) {
  out << fmt::format("policy       {}\n", policy_token(d.policy));
  out << fmt::format("devices      {}\n", d.devices.to_string());
  out << fmt::format("census       x={} y={} z={}\n", d.census.x, d.census.y, d.census.z);
  out << fmt::format("agg_bw       {:.3f}\n", d.scores.agg_bw);
  out << fmt::format("pred_effbw   {:.3f}{}\n", d.scores.predicted_eff_bw,
                     d.scores.predicted_eff_bw < 0 ? "  (negative prediction)" : "");
  out << fmt::format("preserved_bw {:.3f}\n", d.scores.preserved_bw);
  if (census_extrapolated(d.census)) {
    out << "note         link census beyond the model's fitted range\n";
  }
}

int cmd_simulate(const Args& a, std::ostream& out) {
  HardwareGraph g = load_topology(a.topology);
  auto jobs = parse_jobs(read_file(a.jobs));
  SimConfig cfg;
  cfg.policy = parse_policy(a.policy);
  cfg.policy_options.model = model_or_default(a.model);
  cfg.policy_options.threads = a.threads;
  auto records = run_simulation(g, jobs, cfg);
  write_file_atomic(a.out, serialize_log(records));
  out << fmt::format("{} jobs on {} with policy {} -> {}\n", records.size(), g.name(),
                     a.policy, a.out);
  if (!records.empty()) {
    out << summary_to_text(summarize_log(records, a.group_by), a.group_by);
  }
  return kExitOk;
}

int cmd_allocate(const Args& a, std::ostream& out) {
  HardwareGraph g = load_topology(a.topology);
  AllocationState state = state_with_busy(g, a.busy);
  PolicyOptions opts;
  opts.model = model_or_default(a.model);
  opts.threads = a.threads;
  JobSpec job;
  job.gpu_count = a.gpus;
  job.shape = parse_shape(a.shape);
  AppPattern pattern = job_pattern(job);
  auto d = decide(parse_policy(a.policy), state, pattern, a.sensitive, opts);
  if (!d) {
    out << fmt::format("no-capacity: {} GPU(s) requested, {} free\n", a.gpus,
                       state.free_count());
    return kExitOk;
  }
  print_decision(out, *d);
  return kExitOk;
}

int cmd_score(const Args& a, std::ostream& out) {
  HardwareGraph g = load_topology(a.topology);
  AllocationState state = state_with_busy(g, a.busy);
  DeviceSet devices = DeviceSet::parse(a.devices);
  if (!devices.subset_of(state.available())) {
    throw std::invalid_argument(fmt::format(
        "devices {} are not all free on {}", devices.to_string(), g.name()));
  }
  JobSpec job;
  job.gpu_count = devices.size();
  job.shape = parse_shape(a.shape);
  Match placement = make_match(job_pattern(job), devices.ids());
  auto d = score_placement(state, std::move(placement), model_or_default(a.model));
  out << fmt::format("devices      {}\n", d.devices.to_string());
  out << fmt::format("agg_bw       {:.3f}\n", d.scores.agg_bw);
  out << fmt::format("census       x={} y={} z={}\n", d.census.x, d.census.y, d.census.z);
  out << fmt::format("pred_effbw   {:.3f}{}\n", d.scores.predicted_eff_bw,
                     d.scores.predicted_eff_bw < 0 ? "  (negative prediction)" : "");
  out << fmt::format("preserved_bw {:.3f}\n", d.scores.preserved_bw);
  return kExitOk;
}

int cmd_fit(const Args& a, std::ostream& out) {
  auto samples = parse_samples(read_file(a.samples));
  FitResult fit = fit_effbw_model(samples);
  write_file_atomic(a.out, serialize_model(fit.model, &fit));
  for (int i = 0; i < kEffBwFeatures; ++i) {
    out << fmt::format("theta{:<3} {:>10.3f}\n", i + 1, fit.model.theta[static_cast<size_t>(i)]);
  }
  out << fmt::format("relative_error {:.4f}\nrmse           {:.4f}\nmae            {:.4f}\n",
                     fit.relative_error, fit.rmse, fit.mae);
  if (fit.ill_conditioned) {
    out << fmt::format("warning: normal equations ill-conditioned (cond {:.3g})\n",
                       fit.condition_number);
  }
  return kExitOk;
}

int cmd_gen_jobs(const Args& a, std::ostream& out) {
  JobGenOptions opts;
  opts.seed = a.seed;
  opts.count = a.count;
  opts.min_gpus = a.min_gpus;
  opts.max_gpus = a.max_gpus;
  auto jobs = generate_jobs(opts);
  write_file_atomic(a.out, serialize_jobs(jobs));
  out << fmt::format("wrote {} jobs to {}\n", jobs.size(), a.out);
  return kExitOk;
}

int cmd_report(const Args& a, std::ostream& out) {
  auto records = parse_log(read_file(a.log));
  auto summary = summarize_log(records, a.report_group_by);
  if (!a.out.empty()) write_file_atomic(a.out, summary_to_json(summary, a.report_group_by));
  out << summary_to_text(summary, a.report_group_by);
  return kExitOk;
}

int cmd_topo(const Args& a, std::ostream& out) {
  HardwareGraph g = load_topology(a.name);
  if (a.dump) {
    out << serialize_topology(g);
    return kExitOk;
  }
  out << fmt::format("{}: {} devices\n", g.name(), g.device_count());
  for (size_t i = 0; i < g.sockets().size(); ++i) {
    out << fmt::format("socket {}: {}\n", i + 1, DeviceSet::from(g.sockets()[i]).to_string());
  }
  for (const Link& l : g.nvlinks()) {
    out << fmt::format("{}-{} {} {:.3f}\n", l.a, l.b, link_class_token(l.cls),
                       link_bandwidth(l.cls));
  }
  out << fmt::format("other pairs: pcie {:.3f}\n", link_bandwidth(LinkClass::kPCIe));
  out << fmt::format("total bandwidth {:.3f}\n",
                     induced_total_bandwidth(g, g.all_devices()));
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Topology-aware multi-GPU allocation and scheduling simulator", "patalloc"};
  app.require_subcommand(1);
  Args a;

  auto* sim = app.add_subcommand("simulate", "Replay a job file against a topology and policy");
  sim->add_option("--topology", a.topology, "Builtin topology name or topology file")->required();
  sim->add_option("--policy", a.policy, "Allocation policy")->required()->check(CLI::IsMember(kPolicies));
  sim->add_option("--jobs", a.jobs, "Job file (CSV)")->required();
  sim->add_option("--out", a.out, "Output log file (CSV)")->required();
  sim->add_option("--model", a.model, "Effective-bandwidth model file (default: built-in)");
  sim->add_option("--group-by", a.group_by, "Grouping for the printed summary")
      ->default_val("sensitive")->check(CLI::IsMember(kGroupFields));
  sim->add_option("--threads", a.threads, "Threads for match scoring")->default_val(1)->check(CLI::PositiveNumber);

  auto* alloc = app.add_subcommand("allocate", "Make one allocation decision");
  alloc->add_option("--topology", a.topology, "Builtin topology name or topology file")->required();
  alloc->add_option("--policy", a.policy, "Allocation policy")->required()->check(CLI::IsMember(kPolicies));
  alloc->add_option("--gpus", a.gpus, "Number of GPUs requested")->required()->check(CLI::PositiveNumber);
  alloc->add_option("--shape", a.shape, "Communication pattern")->default_val("ring")->check(CLI::IsMember(kShapes));
  alloc->add_option("--sensitive", a.sensitive, "Bandwidth sensitive (true/false)")->default_val(false);
  alloc->add_option("--busy", a.busy, "Devices already in use, e.g. 1+2");
  alloc->add_option("--model", a.model, "Effective-bandwidth model file (default: built-in)");
  alloc->add_option("--threads", a.threads, "Threads for match scoring")->default_val(1)->check(CLI::PositiveNumber);

  auto* score = app.add_subcommand("score", "Score a hypothetical allocation");
  score->add_option("--topology", a.topology, "Builtin topology name or topology file")->required();
  score->add_option("--devices", a.devices, "Allocated devices, e.g. 1+2+5")->required();
  score->add_option("--shape", a.shape, "Communication pattern")->default_val("ring")->check(CLI::IsMember(kShapes));
  score->add_option("--busy", a.busy, "Devices already in use by other jobs");
  score->add_option("--model", a.model, "Effective-bandwidth model file (default: built-in)");

  auto* fit = app.add_subcommand("fit", "Fit the effective-bandwidth model");
  fit->add_option("--samples", a.samples, "Samples file: x,y,z,measured_effbw_gbps")->required();
  fit->add_option("--out", a.out, "Output model file (JSON)")->required();

  auto* gen = app.add_subcommand("gen-jobs", "Generate a random job file");
  gen->add_option("--seed", a.seed, "Random seed")->required();
  gen->add_option("--count", a.count, "Number of jobs")->default_val(300)->check(CLI::PositiveNumber);
  gen->add_option("--min-gpus", a.min_gpus, "Smallest GPU request")->default_val(1)->check(CLI::PositiveNumber);
  gen->add_option("--max-gpus", a.max_gpus, "Largest GPU request")->default_val(5)->check(CLI::PositiveNumber);
  gen->add_option("--out", a.out, "Output job file (CSV)")->required();

  auto* report = app.add_subcommand("report", "Summarize a simulation log");
  report->add_option("--log", a.log, "Simulation log (CSV)")->required();
  report->add_option("--group-by", a.report_group_by, "Grouping field")->default_val("all")->check(CLI::IsMember(kGroupFields));
  report->add_option("--out", a.out, "Write the summary as JSON");

  auto* topo = app.add_subcommand("topo", "Show or export a topology");
  topo->add_option("--name", a.name, "Builtin topology name or topology file")->required();
  topo->add_flag("--dump", a.dump, "Print the topology file instead of the inventory");

  std::vector<const char*> argv = {"patalloc"};
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*sim) return cmd_simulate(a, out);
    if (*alloc) return cmd_allocate(a, out);
    if (*score) return cmd_score(a, out);
    if (*fit) return cmd_fit(a, out);
    if (*gen) return cmd_gen_jobs(a, out);
    if (*report) return cmd_report(a, out);
    if (*topo) return cmd_topo(a, out);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << msg << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace patalloc
