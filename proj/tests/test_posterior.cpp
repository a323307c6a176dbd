// Copyright 2026 The omc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>

#include "omc/optimize.hpp"
#include "omc/posterior.hpp"
#include "omc/regions.hpp"
#include "omc/simulators.hpp"
#include "test_support.hpp"

using namespace omc;
using omc::testing::gaussian_noise;
using omc::testing::vec;

namespace {

Hyperbox interval(double lo, double hi) {
  const double c = 0.5 * (lo + hi);
  return Hyperbox(vec({c}), Matrix::Identity(1, 1), vec({c - lo}), vec({hi - c}));
}

WeightedSample weighted(double x, double log_w) {
  WeightedSample s;
  s.theta = vec({x});
  s.log_weight = log_w;
  return s;
}

}  // namespace

TEST(ProposalMixture, DensityOfDisjointAndOverlappingBoxes) {
  const ProposalMixture disjoint({{interval(0.0, 0.5), 0, 0}, {interval(1.0, 1.5), 0, 1}});
  EXPECT_NEAR(disjoint.density(vec({0.25})), 1.0 / (2 * 0.5), 1e-12);
  EXPECT_EQ(disjoint.density(vec({0.75})), 0.0);
  const ProposalMixture overlap({{interval(0.0, 0.5), 0, 0}, {interval(0.0, 0.5), 0, 1}});
  EXPECT_NEAR(overlap.density(vec({0.25})), 1.0 / 0.5, 1e-12);
  EXPECT_EQ(overlap.containing(vec({0.25})), (std::vector<std::size_t>{0, 1}));
}

TEST(ProposalMixture, RejectsEmptyAndMixedDimensions) {
  EXPECT_THROW(ProposalMixture(std::vector<ProposalComponent>{}), InferenceError);
  const Hyperbox two(vec({0.0, 0.0}), Matrix::Identity(2, 2), vec({1.0, 1.0}), vec({1.0, 1.0}));
  EXPECT_THROW(ProposalMixture({{interval(0.0, 1.0), 0, 0}, {two, 0, 1}}), SchemaError);
}

TEST(ProposalMixture, SharedAndRotatedFramesAgreeWithBoxes) {
  Rng r(1);
  Matrix rot(2, 2);
  rot << std::cos(0.4), -std::sin(0.4), std::sin(0.4), std::cos(0.4);
  std::vector<ProposalComponent> comps;
  for (std::size_t k = 0; k < 6; ++k) {
    const Matrix axes = k % 2 ? rot : Matrix(Matrix::Identity(2, 2));
    comps.push_back({Hyperbox(vec({r.uniform(), r.uniform()}), axes, vec({0.3, 0.2}), vec({0.1, 0.4})), 0, k});
  }
  const ProposalMixture mix(comps);
  for (int trial = 0; trial < 500; ++trial) {
    const Vector t = vec({r.uniform(-0.5, 1.5), r.uniform(-0.5, 1.5)});
    double expected = 0.0;
    for (const auto& c : comps) expected += c.box.density(t) / 6.0;
    EXPECT_NEAR(mix.density(t), expected, 1e-9 * std::max(1.0, expected));
  }
}

TEST(SampleProposal, ComponentsChosenUniformly) {
  const ProposalMixture mix({{interval(0.0, 0.1), 0, 0}, {interval(5.0, 9.0), 0, 1}});
  const auto draws = sample_proposal(mix, 10000, Rng(2));
  std::size_t first = 0;
  for (const auto& d : draws) {
    EXPECT_GT(mix.density(d), 0.0);
    first += d[0] < 1.0;
  }
  EXPECT_GE(first, 4700u);
  EXPECT_LE(first, 5300u);
  EXPECT_THROW(sample_proposal(mix, 0, Rng(2)), ConfigError);
}

TEST(BuildProposal, UsesAcceptedRecordsOnly) {
  std::vector<OptimizationRecord> recs(3);
  for (std::size_t k = 0; k < 3; ++k) {
    recs[k].seed_index = k;
    recs[k].accepted = k != 1;
  }
  const auto mix = build_proposal(recs, {interval(0, 1), interval(2, 3), interval(4, 5)});
  ASSERT_EQ(mix.size(), 2u);
  EXPECT_EQ(mix.components()[1].seed_index, 2u);
  EXPECT_THROW(build_proposal(recs, {interval(0, 1)}), SchemaError);
  for (auto& r : recs) r.accepted = false;
  EXPECT_THROW(build_proposal(recs, {interval(0, 1), interval(2, 3), interval(4, 5)}), InferenceError);
}

TEST(RegionCounts, CountsSeedsWithinEpsilon) {
  omc::testing::LinearSimulator sim(Matrix::Identity(1, 1));
  const NoiseTable noise{{gaussian_noise({0.0}), gaussian_noise({0.05}), gaussian_noise({1.0})}};
  const auto counts = region_counts(sim, vec({0.0}), noise, {vec({0.0})}, 0.01, Mask::all(1), {{0, 1, 2}});
  EXPECT_EQ(counts, (std::vector<std::size_t>{2}));
  // Only accepted seeds are consulted.
  const auto some = region_counts(sim, vec({0.0}), noise, {vec({0.0})}, 0.01, Mask::all(1), {{1, 2}});
  EXPECT_EQ(some, (std::vector<std::size_t>{1}));
}

TEST(RegionCounts, SurrogateCountsBoxesPerObservation) {
  const ProposalMixture mix({{interval(0, 1), 0, 0}, {interval(0, 2), 0, 1}, {interval(0.5, 3), 1, 0}});
  EXPECT_EQ(region_counts_surrogate(mix, vec({0.75}), 2), (std::vector<std::size_t>{2, 1}));
  EXPECT_EQ(region_counts_surrogate(mix, vec({2.5}), 2), (std::vector<std::size_t>{0, 1}));
}

TEST(Weights, ProductOfCountsScalesWeight) {
  const double base = log_weight_of(0.0, 0.0, {1, 1});
  EXPECT_NEAR(std::exp(log_weight_of(0.0, 0.0, {2, 3}) - base), 6.0, 1e-12);
  EXPECT_EQ(log_weight_of(0.0, 0.0, {1, 0}), kNegInf);
  EXPECT_EQ(log_weight_of(kNegInf, 0.0, {1}), kNegInf);
  EXPECT_NEAR(log_weight_of(std::log(0.5), std::log(2.0), {}), std::log(0.25), 1e-12);
}

TEST(Weights, OutsidePriorGetsZeroWeight) {
  const PriorBox prior = PriorBox::cube(1, 0.0, 1.0);
  const ProposalMixture mix({{interval(0.5, 1.5), 0, 0}});
  const auto ws = compute_weights({vec({0.75}), vec({1.25})}, prior, mix, {{1}, {1}});
  EXPECT_NEAR(ws[0].weight(), 1.0, 1e-12);  // prior 1, proposal 1
  EXPECT_EQ(ws[1].weight(), 0.0);
  EXPECT_THROW(compute_weights({vec({2.0})}, prior, mix, {{1}}), InferenceError);
  EXPECT_THROW(compute_weights({vec({0.75})}, prior, mix, {}), SchemaError);
}

TEST(Ess, KnownValues) {
  EXPECT_NEAR(effective_sample_size(std::vector<double>{1.0, 3.0}), 1.6, 1e-12);
  EXPECT_NEAR(effective_sample_size(std::vector<double>(17, 0.3)), 17.0, 1e-9);
  EXPECT_EQ(effective_sample_size(std::vector<double>{0.0, 0.0}), 0.0);
  EXPECT_NEAR(effective_sample_size({weighted(0, std::log(1.0)), weighted(1, std::log(3.0))}), 1.6, 1e-12);
}

TEST(Resample, FrequenciesFollowWeights) {
  const auto out = resample({weighted(0.0, 0.0), weighted(1.0, 0.0)}, 100000, Rng(3));
  std::size_t ones = 0;
  for (const auto& s : out) ones += s[0] == 1.0;
  EXPECT_NEAR(static_cast<double>(ones) / 100000.0, 0.5, 0.02);
}

TEST(Resample, ZeroWeightNeverDrawn) {
  const auto out = resample({weighted(0.0, kNegInf), weighted(1.0, 0.0), weighted(2.0, kNegInf)}, 1000, Rng(4));
  for (const auto& s : out) EXPECT_EQ(s[0], 1.0);
}

TEST(Resample, AllZeroWeightsThrow) {
  EXPECT_THROW(resample({weighted(0.0, kNegInf)}, 10, Rng(5)), ZeroWeightsError);
  EXPECT_THROW(posterior_expectation({weighted(0.0, kNegInf)}, [](const ParamVector&) { return 1.0; }),
               ZeroWeightsError);
}

TEST(Expectation, ConstantFunctionGivesOne) {
  Rng r(6);
  std::vector<WeightedSample> ws;
  for (int k = 0; k < 100; ++k) ws.push_back(weighted(r.normal(), r.normal()));
  EXPECT_NEAR(posterior_expectation(ws, [](const ParamVector&) { return 1.0; }), 1.0, 1e-12);
  const double mean = posterior_expectation({weighted(1.0, std::log(1.0)), weighted(3.0, std::log(3.0))},
                                            [](const ParamVector& t) { return t[0]; });
  EXPECT_NEAR(mean, 2.5, 1e-12);
}

// Full weighting pipeline on the one-dimensional location model, compared with
// rejection ABC at the same threshold.
TEST(Pipeline, MatchesRejectionAbcOnOneDimensionalMog) {
  MogSimulator sim(1, false, false);
  const Vector y = vec({0.4});
  const Mask mask = Mask::all(1);
  const double eps = 0.04;
  const Rng root(7);
  const NoiseTable noise = draw_noise_table(sim, 1, 100, root);
  OptimizerConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.steps = 100;
  const auto recs = filter_seeds(run_optimizations(sim, {y}, noise, mask, cfg, root), 1.0);
  std::vector<Hyperbox> boxes;
  for (const auto& rec : recs) {
    const NoiseDraw& u = noise[0][rec.seed_index];
    const DistanceFn d = [&](const Vector& t) { return masked_distance(sim, t, u, y, mask); };
    boxes.push_back(build_hyperbox(d, rec.theta_star, sim.jacobian(rec.theta_star, u), LineSearchParams{0.05, 100, 3}, eps));
  }
  const auto mix = build_proposal(recs, boxes);
  const auto draws = sample_proposal(mix, 20000, root);
  std::vector<std::vector<std::size_t>> counts;
  const auto acc = accepted_seeds(recs, 1);
  for (const auto& t : draws) counts.push_back(region_counts(sim, t, noise, {y}, eps, mask, acc));
  const auto ws = compute_weights(draws, sim.prior(), mix, counts);
  for (const auto& s : ws) {
    if (s.log_weight == kNegInf) continue;
    EXPECT_TRUE(sim.prior().contains(s.theta));
    EXPECT_GE(s.region_counts[0], 1u);
  }
  const double mean = posterior_expectation(ws, [](const ParamVector& t) { return t[0]; });
  const double var = posterior_expectation(ws, [&](const ParamVector& t) { return (t[0] - mean) * (t[0] - mean); });

  Rng r(8);
  double s = 0.0, s2 = 0.0;
  std::size_t kept = 0;
  for (int k = 0; k < 1000000; ++k) {
    const double theta = r.uniform(-3.0, 3.0);
    const double yy = theta + 1.0 + 0.2 * r.normal();
    if ((yy - y[0]) * (yy - y[0]) > eps) continue;
    s += theta;
    s2 += theta * theta;
    ++kept;
  }
  ASSERT_GT(kept, 1000u);
  const double abc_mean = s / kept, abc_var = s2 / kept - abc_mean * abc_mean;
  EXPECT_NEAR(mean, abc_mean, 0.05);
  EXPECT_NEAR(var, abc_var, 0.02);
}
