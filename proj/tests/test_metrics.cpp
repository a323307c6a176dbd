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

#include "omc/metrics.hpp"
#include "test_support.hpp"

using namespace omc;

namespace {

Matrix gaussian_cloud(std::size_t n, std::size_t dim, double shift, std::uint64_t seed) {
  Rng r(seed);
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = r.normal() + (j == 0 ? shift : 0.0);
  return m;
}

double accuracy(const MlpClassifier& model, const Matrix& x, const std::vector<int>& labels) {
  const auto pred = classify(model, x);
  std::size_t hits = 0;
  for (std::size_t k = 0; k < pred.size(); ++k) hits += pred[k] == labels[k];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace

TEST(Classifier, LearnsXor) {
  Rng r(1);
  const std::size_t n = 800;
  Matrix x(n, 2);
  std::vector<int> labels(n);
  for (std::size_t k = 0; k < n; ++k) {
    const int a = r.uniform() < 0.5, b = r.uniform() < 0.5;
    x(static_cast<Eigen::Index>(k), 0) = (a ? 1.0 : -1.0) + 0.2 * r.normal();
    x(static_cast<Eigen::Index>(k), 1) = (b ? 1.0 : -1.0) + 0.2 * r.normal();
    labels[k] = a ^ b;
  }
  ClassifierConfig cfg;
  cfg.epochs = 300;
  cfg.learning_rate = 1e-2;
  const auto trained = train_classifier(x, labels, cfg);
  EXPECT_FALSE(trained.diverged);
  EXPECT_GE(accuracy(trained.model, x, labels), 0.95);
}

TEST(Classifier, SeparatesLinearDataWithSmallLoss) {
  Rng r(2);
  const std::size_t n = 400;
  Matrix x(n, 3);
  std::vector<int> labels(n);
  for (std::size_t k = 0; k < n; ++k) {
    labels[k] = static_cast<int>(k % 2);
    for (Eigen::Index j = 0; j < 3; ++j) x(static_cast<Eigen::Index>(k), j) = 0.3 * r.normal();
    x(static_cast<Eigen::Index>(k), 0) += labels[k] ? 2.0 : -2.0;
  }
  ClassifierConfig cfg;
  cfg.epochs = 300;
  cfg.learning_rate = 1e-2;
  const auto trained = train_classifier(x, labels, cfg);
  EXPECT_GE(accuracy(trained.model, x, labels), 0.99);
  ASSERT_EQ(trained.loss_history.size(), cfg.epochs);
  EXPECT_LT(trained.loss_history.back(), 0.01);
  EXPECT_LT(trained.loss_history.back(), trained.loss_history.front());
}

TEST(Classifier, RejectsBadConfig) {
  ClassifierConfig cfg;
  cfg.batch_size = 3;
  EXPECT_THROW(train_classifier(Matrix::Zero(4, 1), {0, 1, 0, 1}, cfg), ConfigError);
  EXPECT_THROW(train_classifier(Matrix::Zero(4, 1), {0, 1}, ClassifierConfig{}), ConfigError);
}

TEST(C2st, IdenticalDistributionsScoreNearHalf) {
  const auto s = c2st(gaussian_cloud(1000, 2, 0.0, 3), gaussian_cloud(1000, 2, 0.0, 4));
  EXPECT_NEAR(s.value, 0.5, 0.04);
  EXPECT_EQ(s.per_fold.size(), 5u);
  EXPECT_TRUE(s.warnings.empty());
}

TEST(C2st, WellSeparatedScoresNearOne) {
  Matrix y = gaussian_cloud(1000, 2, 5.0, 6);
  y.col(1).array() += 5.0;
  EXPECT_GE(c2st(gaussian_cloud(1000, 2, 0.0, 5), y).value, 0.99);
}

TEST(C2st, SymmetricInLabels) {
  const Matrix x = gaussian_cloud(500, 2, 0.0, 7), y = gaussian_cloud(500, 2, 0.7, 8);
  EXPECT_NEAR(c2st(x, y).value, c2st(y, x).value, 0.01);
}

TEST(C2st, GrowsWithSeparation) {
  const Matrix x = gaussian_cloud(600, 1, 0.0, 9);
  double prev = 0.0;
  for (double gap : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    const double v = c2st(x, gaussian_cloud(600, 1, gap, 10)).value;
    EXPECT_GE(v, prev - 0.02) << gap;
    prev = v;
  }
  EXPECT_GT(prev, 0.95);
}

TEST(C2st, DeterministicForFixedSeed) {
  const Matrix x = gaussian_cloud(300, 3, 0.0, 11), y = gaussian_cloud(300, 3, 0.5, 12);
  EXPECT_EQ(c2st(x, y).per_fold, c2st(x, y).per_fold);
}

TEST(C2st, InputValidation) {
  EXPECT_THROW(c2st(gaussian_cloud(99, 2, 0, 1), gaussian_cloud(99, 2, 0, 2)), ConfigError);
  EXPECT_THROW(c2st(gaussian_cloud(200, 2, 0, 1), gaussian_cloud(150, 2, 0, 2)), ConfigError);
  EXPECT_THROW(c2st(gaussian_cloud(200, 2, 0, 1), gaussian_cloud(200, 3, 0, 2)), SchemaError);
  EXPECT_THROW(c2st(Matrix::Ones(200, 2), Matrix::Ones(200, 2)), DegenerateFeaturesError);
}

TEST(C2st, ConstantFeaturesAreDropped) {
  Matrix x = gaussian_cloud(400, 2, 0.0, 13), y = gaussian_cloud(400, 2, 3.0, 14);
  x.col(1).setConstant(7.0);
  y.col(1).setConstant(7.0);
  EXPECT_GE(c2st(x, y).value, 0.9);
}
