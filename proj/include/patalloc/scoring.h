// Copyright 2026 The patalloc Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "patalloc/matcher.h"
#include "patalloc/topology.h"

namespace patalloc {

inline constexpr int kEffBwFeatures = 14;

using EffBwFeatures = std::array<double, kEffBwFeatures>;

// x, y, z, 1/(x+1), 1/(y+1), 1/(z+1), xy, yz, zx, 1/(xy+1), 1/(yz+1),
// 1/(zx+1), xyz, 1/(xyz+1).
EffBwFeatures effbw_features(const LinkCensus& c);

// Regression model for the effective all-reduce bandwidth of an allocation
// as a function of its link census. The model is linear in its
// coefficients.
struct EffBwModel {
  std::array<double, kEffBwFeatures> theta{};
  std::string provenance;

  // Coefficients fitted on a DGX-1 V100 from NCCL all-reduce measurements.
  static EffBwModel default_model();

  bool operator==(const EffBwModel&) const = default;
};

// Raw model output; may be negative for censuses outside the training range.
Bandwidth predicted_effective_bw(const EffBwModel& model, const LinkCensus& c);

// Census with more than five links of one class lies outside the range the
// default coefficients were fitted on.
bool census_extrapolated(const LinkCensus& c);

// Sum of used-edge bandwidths.
Bandwidth aggregated_bw(const Match& match, const HardwareGraph& g);

// Total bandwidth of the subgraph induced by the devices left free after
// `match` is allocated from `state`.
Bandwidth preserved_bw(const AllocationState& state, const Match& match);

struct BwSample {
  LinkCensus census;
  double measured_effbw;
};

struct FitResult {
  EffBwModel model;
  double relative_error = 0;  // ||pred - measured|| / ||measured||
  double rmse = 0;
  double mae = 0;
  double condition_number = 0;  // of the normal-equation matrix
  bool ill_conditioned = false;  // condition_number > 1e8
};

// Ordinary least squares over the 14 model features. Throws
// std::invalid_argument when there are fewer than 14 samples, a
// non-positive measurement, or a rank-deficient feature matrix.
FitResult fit_effbw_model(const std::vector<BwSample>& samples);

// Rows "x,y,z,measured_effbw_gbps"; optional header.
std::vector<BwSample> parse_samples(std::string_view text);

// JSON model document: {"coefficients": {"theta1": ...}, "provenance": ...,
// "diagnostics"?: {...}}.
EffBwModel parse_model(std::string_view text);
std::string serialize_model(const EffBwModel& model, const FitResult* fit = nullptr);
EffBwModel load_model(const std::string& path);

}  // namespace patalloc
