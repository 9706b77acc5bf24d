// Copyright 2026 The patalloc Authors.
// SPDX-License-Identifier: Apache-2.0

#include "patalloc/scoring.h"

#include <charconv>
#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "patalloc/util.h"

namespace patalloc {

using json = nlohmann::ordered_json;

EffBwFeatures effbw_features(const LinkCensus& c) {
  const double x = c.x, y = c.y, z = c.z;
  return {x,
          y,
          z,
          1.0 / (x + 1),
          1.0 / (y + 1),
          1.0 / (z + 1),
          x * y,
          y * z,
          z * x,
          1.0 / (x * y + 1),
          1.0 / (y * z + 1),
          1.0 / (z * x + 1),
          x * y * z,
          1.0 / (x * y * z + 1)};
}

EffBwModel EffBwModel::default_model() {
  return {{16.396, 4.536, 1.556, -20.694, -9.467, 7.615, -7.973, 12.733, -4.195,
           -8.413, 62.851, 27.418, -5.114, -46.973},
          "DGX-1 V100, NCCL all-reduce, 31 allocations of 2-5 GPUs"};
}

Bandwidth predicted_effective_bw(const EffBwModel& model, const LinkCensus& c) {
  auto f = effbw_features(c);
  double sum = 0;
  for (int i = 0; i < kEffBwFeatures; ++i) sum += model.theta[static_cast<size_t>(i)] * f[static_cast<size_t>(i)];
  return sum;
}

bool census_extrapolated(const LinkCensus& c) {
  return c.x > 5 || c.y > 5 || c.z > 5;
}

Bandwidth aggregated_bw(const Match& match, const HardwareGraph& g) {
  Bandwidth total = 0;
  for (auto [u, v] : match.used_edges) total += g.bandwidth(u, v);
  return total;
}

Bandwidth preserved_bw(const AllocationState& state, const Match& match) {
  if (!match.devices.subset_of(state.available())) {
    throw std::invalid_argument(fmt::format(
        "match {} uses devices that are not free", match.devices.to_string()));
  }
  return induced_total_bandwidth(state.graph(), state.available() - match.devices);
}

FitResult fit_effbw_model(const std::vector<BwSample>& samples) {
  if (samples.size() < kEffBwFeatures) {
    throw std::invalid_argument(fmt::format(
        "underdetermined fit: {} samples for {} coefficients", samples.size(),
        kEffBwFeatures));
  }
  const auto rows = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd a(rows, kEffBwFeatures);
  Eigen::VectorXd y(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const BwSample& s = samples[static_cast<size_t>(r)];
    if (s.census.x < 0 || s.census.y < 0 || s.census.z < 0) {
      throw std::invalid_argument(fmt::format("sample {}: negative link count", r + 1));
    }
    if (!(s.measured_effbw > 0)) {
      throw std::invalid_argument(fmt::format("sample {}: measured bandwidth must be > 0", r + 1));
    }
    auto f = effbw_features(s.census);
    for (int c = 0; c < kEffBwFeatures; ++c) a(r, c) = f[static_cast<size_t>(c)];
    y(r) = s.measured_effbw;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& sv = svd.singularValues();
  const double tol = sv(0) * static_cast<double>(rows) * 1e-12;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv(i) > tol ? 1 : 0;
  if (rank < kEffBwFeatures) {
    throw std::invalid_argument(fmt::format(
        "rank-deficient feature matrix: rank {} < {} (need more distinct link "
        "censuses)", rank, kEffBwFeatures));
  }

  const Eigen::MatrixXd normal = a.transpose() * a;
  const Eigen::VectorXd rhs = a.transpose() * y;
  const Eigen::VectorXd theta = normal.fullPivLu().solve(rhs);

  FitResult fit;
  for (int c = 0; c < kEffBwFeatures; ++c) fit.model.theta[static_cast<size_t>(c)] = theta(c);
  fit.model.provenance = fmt::format("least-squares fit over {} samples", samples.size());
  const Eigen::VectorXd resid = a * theta - y;
  fit.relative_error = resid.norm() / y.norm();
  fit.rmse = std::sqrt(resid.squaredNorm() / static_cast<double>(rows));
  fit.mae = resid.cwiseAbs().mean();
  const double cond = sv(0) / sv(sv.size() - 1);
  fit.condition_number = cond * cond;
  fit.ill_conditioned = fit.condition_number > 1e8;
  return fit;
}

// --- files ----------------------------------------------------------------

std::vector<BwSample> parse_samples(std::string_view text) {
  std::vector<BwSample> out;
  size_t row = 0;
  for (std::string_view line : split_lines(text)) {
    ++row;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    auto fields = split(line, ',');
    for (auto& f : fields) f = trim(f);
    if (fields[0] == "x") continue;
    if (fields.size() != 4) {
      throw ParseError(fmt::format("row {}: expected x,y,z,measured_effbw_gbps", row));
    }
    int counts[3];
    for (int i = 0; i < 3; ++i) {
      auto f = fields[static_cast<size_t>(i)];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), counts[i]);
      if (f.empty() || ec != std::errc{} || ptr != f.data() + f.size() || counts[i] < 0) {
        throw ParseError(fmt::format("row {}: '{}' is not a link count", row, f));
      }
    }
    double bw = 0;
    auto [ptr, ec] = std::from_chars(fields[3].data(), fields[3].data() + fields[3].size(), bw);
    if (ec != std::errc{} || ptr != fields[3].data() + fields[3].size() || !(bw > 0)) {
      throw ParseError(fmt::format("row {}: bad measured bandwidth '{}'", row, fields[3]));
    }
    out.push_back({{counts[0], counts[1], counts[2]}, bw});
  }
  return out;
}

EffBwModel parse_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("model syntax error: {}", e.what()));
  }
  if (!doc.is_object() || !doc.contains("coefficients") || !doc["coefficients"].is_object()) {
    throw ParseError("coefficients: missing object");
  }
  const auto& coeffs = doc["coefficients"];
  if (coeffs.size() != kEffBwFeatures) {
    throw ParseError(fmt::format("coefficients: expected {} entries, got {}",
                                 kEffBwFeatures, coeffs.size()));
  }
  EffBwModel model;
  for (int i = 0; i < kEffBwFeatures; ++i) {
    std::string key = fmt::format("theta{}", i + 1);
    if (!coeffs.contains(key) || !coeffs[key].is_number()) {
      throw ParseError(fmt::format("coefficients.{}: missing or not a number", key));
    }
    model.theta[static_cast<size_t>(i)] = coeffs[key].get<double>();
  }
  if (doc.contains("provenance") && doc["provenance"].is_string()) {
    model.provenance = doc["provenance"].get<std::string>();
  }
  return model;
}

std::string serialize_model(const EffBwModel& model, const FitResult* fit) {
  json doc;
  json coeffs = json::object();
  for (int i = 0; i < kEffBwFeatures; ++i) {
    coeffs[fmt::format("theta{}", i + 1)] = model.theta[static_cast<size_t>(i)];
  }
  doc["coefficients"] = std::move(coeffs);
  doc["features"] = {"x", "y", "z", "1/(x+1)", "1/(y+1)", "1/(z+1)", "xy", "yz",
                     "zx", "1/(xy+1)", "1/(yz+1)", "1/(zx+1)", "xyz", "1/(xyz+1)"};
  doc["provenance"] = model.provenance;
  if (fit != nullptr) {
    doc["diagnostics"] = {{"relative_error", fit->relative_error},
                          {"rmse", fit->rmse},
                          {"mae", fit->mae},
                          {"condition_number", fit->condition_number},
                          {"ill_conditioned", fit->ill_conditioned}};
  }
  return doc.dump(2) + "\n";
}

EffBwModel load_model(const std::string& path) {
  try {
    return parse_model(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("{}: {}", path, e.what()));
  }
}

}  // namespace patalloc
