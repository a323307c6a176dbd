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

#include <cstring>
#include <set>

#include "omc/core.hpp"
#include "omc/parallel.hpp"
#include "omc/simulators.hpp"
#include "test_support.hpp"

using namespace omc;
using omc::testing::gaussian_noise;
using omc::testing::vec;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int k = 0; k < 100; ++k) EXPECT_EQ(a(), b());
}

TEST(Rng, SplitDoesNotAdvanceParent) {
  Rng a(7), b(7);
  (void)a.split({1, 2});
  EXPECT_EQ(a(), b());
}

TEST(Rng, SplitKeysGiveDistinctStreams) {
  const Rng root(1);
  std::set<std::uint64_t> firsts;
  for (std::uint64_t k = 0; k < 1000; ++k) firsts.insert(root.split({stream::kNoise, k})());
  EXPECT_EQ(firsts.size(), 1000u);
  EXPECT_NE(root.split({1, 2})(), root.split({2, 1})());
}

TEST(Rng, UniformMoments) {
  Rng r(3);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  EXPECT_NEAR(s / n, 0.5, 0.005);
  EXPECT_NEAR(s2 / n - (s / n) * (s / n), 1.0 / 12.0, 0.002);
}

TEST(Rng, NormalMoments) {
  Rng r(5);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

TEST(Rng, BelowIsUniform) {
  Rng r(11);
  std::vector<int> hist(7, 0);
  for (int k = 0; k < 70000; ++k) ++hist[r.below(7)];
  for (int h : hist) EXPECT_NEAR(h, 10000, 400);
}

TEST(Parallel, ResultsIndependentOfWorkerCount) {
  auto run = [](unsigned workers) {
    set_worker_count(workers);
    std::vector<double> out(1000);
    const Rng root(9);
    parallel_for(out.size(), [&](std::size_t i) {
      Rng r = root.split({i});
      out[i] = r.normal();
    });
    return out;
  };
  const auto a = run(1), b = run(4);
  set_worker_count(0);
  EXPECT_EQ(a, b);
}

TEST(Parallel, PropagatesExceptions) {
  set_worker_count(3);
  EXPECT_THROW(parallel_for(100, [](std::size_t i) {
                 if (i == 57) throw InferenceError("boom");
               }),
               InferenceError);
  set_worker_count(0);
}

TEST(PriorBox, RejectsInvertedBounds) {
  EXPECT_THROW(PriorBox(vec({0.0, 1.0}), vec({1.0, 1.0})), SchemaError);
  EXPECT_THROW(PriorBox(vec({0.0}), vec({1.0, 2.0})), SchemaError);
}

TEST(PriorBox, DensityAndContainment) {
  const PriorBox box = PriorBox::cube(2, -3.0, 3.0);
  EXPECT_DOUBLE_EQ(box.density(vec({0.0, 0.0})), 1.0 / 36.0);
  EXPECT_DOUBLE_EQ(box.density(vec({3.0, -3.0})), 1.0 / 36.0);  // closed
  EXPECT_EQ(box.density(vec({3.1, 0.0})), 0.0);
  EXPECT_NEAR(box.log_volume(), std::log(36.0), 1e-12);
}

TEST(Simulate, MogBaseEvaluatesLocationModel) {
  MogSimulator sim(1, false, false);
  EXPECT_DOUBLE_EQ(sim.simulate(vec({0.0}), gaussian_noise({0.0}))[0], 1.0);
  EXPECT_DOUBLE_EQ(sim.simulate(vec({-1.0}), gaussian_noise({0.0}))[0], 0.0);
  EXPECT_DOUBLE_EQ(sim.simulate(vec({0.0}), gaussian_noise({1.0}))[0], 1.2);
}

TEST(Simulate, TwoModeUsesFrozenSelector) {
  MogSimulator sim(1, true, false);
  EXPECT_DOUBLE_EQ(sim.simulate(vec({0.0}), gaussian_noise({0.0}, {-1}))[0], -1.0);
  EXPECT_DOUBLE_EQ(sim.simulate(vec({0.0}), gaussian_noise({0.0}, {1}))[0], 1.0);
}

TEST(Simulate, RepeatedCallsAreBitIdentical) {
  SlcpSimulator sim(true, 4);
  Rng r(2);
  const NoiseDraw u = sim.sample_noise(r);
  const Vector theta = sim.prior().sample(r);
  const Vector a = sim.simulate(theta, u), b = sim.simulate(theta, u);
  EXPECT_EQ(0, std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())));
}

TEST(Simulate, SchemaMismatchThrows) {
  MogSimulator sim(2, false, false);
  EXPECT_THROW(sim.simulate(vec({0.0}), gaussian_noise({0.0, 0.0})), SchemaError);
  EXPECT_THROW(sim.simulate(vec({0.0, 0.0}), gaussian_noise({0.0})), SchemaError);
  EXPECT_THROW(sim.simulate(vec({0.0, 0.0}), gaussian_noise({0.0, 0.0}, {1})), SchemaError);
}

TEST(Simulate, CountsEvaluations) {
  MogSimulator sim(1, false, false);
  sim.reset_counters();
  for (int k = 0; k < 5; ++k) sim.simulate(vec({0.0}), gaussian_noise({0.0}));
  (void)sim.jacobian(vec({0.0}), gaussian_noise({0.0}));
  EXPECT_EQ(sim.simulate_calls(), 5u);
  EXPECT_EQ(sim.gradient_calls(), 1u);
}

TEST(Jacobian, MogIsIdentityWithZeroDistractorRows) {
  MogSimulator sim(2, false, true);
  Rng r(4);
  const NoiseDraw u = sim.sample_noise(r);
  const Matrix jac = sim.jacobian(vec({0.3, -1.2}), u);
  ASSERT_EQ(jac.rows(), 20);
  EXPECT_TRUE(jac.topRows(2).isIdentity(0.0));
  EXPECT_TRUE(jac.bottomRows(18).isZero(0.0));
}

TEST(Jacobian, FiniteDifferencesExactOnLinearModel) {
  MogSimulator sim(3, false, false);
  Rng r(8);
  const NoiseDraw u = sim.sample_noise(r);
  const Matrix fd = finite_diff_jacobian(sim, sim.prior().sample(r), u, 1e-5);
  EXPECT_LT((fd - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Jacobian, ConstantSimulatorGivesZeroMatrix) {
  omc::testing::ConstantSimulator sim(3, 2);
  const Matrix fd = finite_diff_jacobian(sim, vec({0.1, 0.2, 0.3}), NoiseDraw{});
  EXPECT_TRUE(fd.isZero(0.0));
}

TEST(Jacobian, RejectsNonPositiveStep) {
  omc::testing::ConstantSimulator sim(1, 1);
  EXPECT_THROW(finite_diff_jacobian(sim, vec({0.0}), NoiseDraw{}, 0.0), ConfigError);
}

TEST(MaskedDistance, HandComputedValues) {
  MogSimulator sim(1, false, false);
  const Mask all = Mask::all(1);
  EXPECT_DOUBLE_EQ(masked_distance(sim, vec({0.0}), gaussian_noise({0.0}), vec({0.0}), all), 1.0);
  EXPECT_DOUBLE_EQ(masked_distance(sim, vec({-1.0}), gaussian_noise({0.0}), vec({0.0}), all), 0.0);
}

TEST(MaskedDistance, EmptyMaskIsRejected) {
  MogSimulator sim(1, false, false);
  Mask none{{false}, 0.0, {}};
  EXPECT_THROW(masked_distance(sim, vec({0.0}), gaussian_noise({0.0}), vec({0.0}), none),
               NoInformativeDimensionsError);
}

TEST(MaskedDistance, DistractorMaskMatchesBaseModel) {
  MogSimulator base(2, false, false), dist(2, false, true);
  Rng r(12);
  const NoiseDraw ud = dist.sample_noise(r);
  const NoiseDraw ub = gaussian_noise(ud.gaussian());
  Mask m = Mask::all(20);
  for (std::size_t k = 2; k < 20; ++k) m.active[k] = false;
  for (int trial = 0; trial < 10; ++trial) {
    const Vector theta = base.prior().sample(r);
    const double d_dist = masked_distance(dist, theta, ud, Vector::Zero(20), m);
    const double d_base = masked_distance(base, theta, ub, Vector::Zero(2), Mask::all(2));
    EXPECT_DOUBLE_EQ(d_dist, d_base);
  }
}

TEST(MaskedDistance, NonNegativeAndMonotoneInMask) {
  Rng r(13);
  for (int trial = 0; trial < 50; ++trial) {
    Vector y(6), yo(6);
    for (int k = 0; k < 6; ++k) {
      y[k] = r.normal();
      yo[k] = r.normal();
    }
    Mask m = Mask::all(6);
    for (auto&& a : m.active) a = r.uniform() < 0.5;
    const double before = masked_squared_distance(y, yo, m);
    EXPECT_GE(before, 0.0);
    for (std::size_t k = 0; k < 6; ++k) {
      if (m.active[k]) continue;
      m.active[k] = true;
      EXPECT_GE(masked_squared_distance(y, yo, m), before);
      break;
    }
  }
}

TEST(SeedObjective, GradientMatchesFiniteDifferences) {
  SlcpSimulator sim(false, 4);
  Rng r(21);
  const NoiseDraw u = sim.sample_noise(r);
  const Vector y_obs = sim.simulate(sim.prior().sample(r), sim.sample_noise(r));
  const Mask mask = Mask::all(sim.output_dim());
  SeedObjective obj(sim, u, y_obs, mask);
  const Vector theta = sim.prior().sample(r);
  Vector grad;
  const double d = obj.value_and_gradient(theta, grad);
  EXPECT_DOUBLE_EQ(d, obj(theta));
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    Vector p = theta, m = theta;
    p[j] += 1e-6;
    m[j] -= 1e-6;
    EXPECT_NEAR(grad[j], (obj(p) - obj(m)) / 2e-6, 1e-4 * std::max(1.0, std::abs(grad[j])));
  }
}

TEST(MaskedRows, KeepsActiveRowsInOrder) {
  Matrix j(3, 2);
  j << 1, 2, 3, 4, 5, 6;
  Mask m{{true, false, true}, 0.0, {}};
  const Matrix out = masked_rows(j, m);
  ASSERT_EQ(out.rows(), 2);
  EXPECT_EQ(out(1, 0), 5);
}
