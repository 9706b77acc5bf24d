// Copyright 2026 The patalloc Authors.
// SPDX-License-Identifier: Apache-2.0

#include "patalloc/scoring.h"

#include <random>

#include <gtest/gtest.h>

#include "oracles.h"

namespace patalloc {
namespace {

const HardwareGraph& dgx1v() {
  static const HardwareGraph g = builtin_topology("dgx1v");
  return g;
}

TEST(EffBwModelTest, DefaultCoefficients) {
  auto m = EffBwModel::default_model();
  for (size_t i = 0; i < 14; ++i) EXPECT_EQ(m.theta[i], oracle::kDefaultTheta[i]) << i;
}

TEST(PredictedEffectiveBwTest, SpotValues) {
  auto m = EffBwModel::default_model();
  EXPECT_NEAR(predicted_effective_bw(m, {0, 0, 0}), 12.337, 5e-4);
  EXPECT_NEAR(predicted_effective_bw(m, {1, 0, 0}), 39.080, 5e-4);
  EXPECT_NEAR(predicted_effective_bw(m, {1, 1, 1}), 24.108, 5e-4);
}

TEST(PredictedEffectiveBwTest, AgreesWithIndependentFormula) {
  auto m = EffBwModel::default_model();
  for (int x = 0; x <= 5; ++x) {
    for (int y = 0; y <= 5; ++y) {
      for (int z = 0; z <= 5; ++z) {
        EXPECT_NEAR(predicted_effective_bw(m, {x, y, z}),
                    oracle::effbw(oracle::kDefaultTheta, x, y, z), 1e-9);
      }
    }
  }
}

TEST(PredictedEffectiveBwTest, ExtrapolationFlag) {
  EXPECT_FALSE(census_extrapolated({5, 5, 5}));
  EXPECT_TRUE(census_extrapolated({0, 6, 0}));
}

TEST(AggregatedBwTest, WorkedExamples) {
  auto tri = make_pattern(PatternShape::kFullyConnected, 3);
  EXPECT_EQ(aggregated_bw(make_match(tri, {1, 2, 5}), dgx1v()), 87);
  EXPECT_EQ(aggregated_bw(make_match(tri, {1, 3, 4}), dgx1v()), 125);
  EXPECT_EQ(aggregated_bw(make_match(AppPattern(1, {}), {6}), dgx1v()), 0);
}

TEST(AggregatedBwTest, BoundedByInducedTotal) {
  AllocationState s(dgx1v());
  for (int n = 2; n <= 5; ++n) {
    for (auto shape : {PatternShape::kRing, PatternShape::kTree, PatternShape::kFullyConnected}) {
      bool full = shape == PatternShape::kFullyConnected ||
                  (shape == PatternShape::kRing && n <= 3) ||
                  (shape == PatternShape::kTree && n <= 2);
      for (const Match& m : find_matches(s, make_pattern(shape, n))) {
        Bandwidth agg = aggregated_bw(m, dgx1v());
        Bandwidth total = induced_total_bandwidth(dgx1v(), m.devices);
        EXPECT_LE(agg, total);
        if (full) {
          EXPECT_EQ(agg, total);
        } else {
          EXPECT_LT(agg, total);
        }
      }
    }
  }
}

TEST(PreservedBwTest, Examples) {
  AllocationState s(dgx1v());
  auto tri = make_pattern(PatternShape::kRing, 3);
  EXPECT_EQ(preserved_bw(s, make_match(tri, {1, 2, 4})), 286);
  EXPECT_EQ(oracle::pair_sum({3, 5, 6, 7, 8}, oracle::dgx1v_bw), 286);
  auto all = make_pattern(PatternShape::kRing, 8);
  EXPECT_EQ(preserved_bw(s, make_match(all, {1, 2, 3, 4, 5, 6, 7, 8})), 0);
  EXPECT_EQ(preserved_bw(s, Match{}), 744);
}

TEST(PreservedBwTest, RejectsBusyDevices) {
  AllocationState s(dgx1v());
  s.allocate({2});
  EXPECT_THROW(preserved_bw(s, make_match(make_pattern(PatternShape::kRing, 2), {1, 2})),
               std::invalid_argument);
}

// preserved + bandwidth of every edge touching the match = whole machine.
TEST(PreservedBwTest, EdgePartitionIdentity) {
  AllocationState s(dgx1v());
  for (int n = 1; n <= 4; ++n) {
    for (const Match& m : find_matches(s, make_pattern(PatternShape::kFullyConnected, n))) {
      double incident = 0;
      for (int u = 1; u <= 8; ++u) {
        for (int v = u + 1; v <= 8; ++v) {
          if (m.devices.contains(u) || m.devices.contains(v)) incident += oracle::dgx1v_bw(u, v);
        }
      }
      EXPECT_EQ(preserved_bw(s, m) + incident, 744);
    }
  }
}

std::vector<BwSample> synthetic_samples(const std::array<double, 14>& theta, double sigma,
                                        std::uint64_t seed) {
  std::vector<BwSample> out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0, sigma);
  for (auto c : oracle::dgx1v_ring_censuses()) {
    double y = oracle::effbw(theta, c[0], c[1], c[2]);
    if (y <= 2) continue;
    out.push_back({{c[0], c[1], c[2]}, sigma > 0 ? y + noise(rng) : y});
    if (out.size() == 31) break;
  }
  return out;
}

TEST(FitEffBwModelTest, NoiselessRoundTrip) {
  auto samples = synthetic_samples(oracle::kDefaultTheta, 0, 0);
  ASSERT_EQ(samples.size(), 31u);
  FitResult fit = fit_effbw_model(samples);
  for (size_t i = 0; i < 14; ++i) EXPECT_NEAR(fit.model.theta[i], oracle::kDefaultTheta[i], 1e-6) << i;
  EXPECT_LT(fit.relative_error, 1e-9);
  EXPECT_FALSE(fit.ill_conditioned);
}

TEST(FitEffBwModelTest, RoundTripPerturbedCoefficients) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> scale(0.8, 1.2);
  for (int trial = 0; trial < 20; ++trial) {
    std::array<double, 14> theta = oracle::kDefaultTheta;
    for (auto& t : theta) t *= scale(rng);
    auto samples = synthetic_samples(theta, 0, 0);
    ASSERT_GE(samples.size(), 28u);
    FitResult fit = fit_effbw_model(samples);
    for (size_t i = 0; i < 14; ++i) EXPECT_NEAR(fit.model.theta[i], theta[i], 1e-6) << i;
    for (const auto& s : samples) {
      EXPECT_NEAR(predicted_effective_bw(fit.model, s.census), s.measured_effbw, 1e-8);
    }
  }
}

TEST(FitEffBwModelTest, NoisyFitRelativeError) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    FitResult fit = fit_effbw_model(synthetic_samples(oracle::kDefaultTheta, 0.5, seed));
    EXPECT_LE(fit.relative_error, 0.1) << "seed " << seed;
    EXPECT_GT(fit.rmse, 0);
    EXPECT_LE(fit.mae, fit.rmse);
  }
}

TEST(FitEffBwModelTest, Underdetermined) {
  auto samples = synthetic_samples(oracle::kDefaultTheta, 0, 0);
  samples.resize(13);
  EXPECT_THROW(fit_effbw_model(samples), std::invalid_argument);
}

TEST(FitEffBwModelTest, RankDeficient) {
  std::vector<BwSample> same(31, BwSample{{1, 1, 0}, 40});
  try {
    fit_effbw_model(same);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("rank"), std::string::npos);
  }
}

TEST(FitEffBwModelTest, RejectsNonPositiveMeasurement) {
  auto samples = synthetic_samples(oracle::kDefaultTheta, 0, 0);
  samples[4].measured_effbw = 0;
  EXPECT_THROW(fit_effbw_model(samples), std::invalid_argument);
}

TEST(SamplesFileTest, Parse) {
  auto s = parse_samples("x,y,z,measured_effbw_gbps\n1,0,0,39.5\n# comment\n0,2,1,9.25\n");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[1].census, (LinkCensus{0, 2, 1}));
  EXPECT_EQ(s[1].measured_effbw, 9.25);
  EXPECT_THROW(parse_samples("1,0,39.5\n"), ParseError);
  EXPECT_THROW(parse_samples("1,0,-1,39.5\n"), ParseError);
  EXPECT_THROW(parse_samples("1,0,0,-2\n"), ParseError);
}

TEST(ModelFileTest, RoundTrip) {
  auto m = EffBwModel::default_model();
  EXPECT_EQ(parse_model(serialize_model(m)), m);
  FitResult fit = fit_effbw_model(synthetic_samples(oracle::kDefaultTheta, 0.5, 3));
  EffBwModel back = parse_model(serialize_model(fit.model, &fit));
  EXPECT_EQ(back, fit.model);
}

TEST(ModelFileTest, ShippedModelIsDefault) {
  EXPECT_EQ(load_model(std::string(PATALLOC_DATA_DIR) + "/models/dgx1v_default.json").theta,
            EffBwModel::default_model().theta);
}

TEST(ModelFileTest, Errors) {
  EXPECT_THROW(parse_model("{"), ParseError);
  EXPECT_THROW(parse_model(R"({"coefficients": {"theta1": 1}})"), ParseError);
}

}  // namespace
}  // namespace patalloc
