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

#pragma once

// Small simulators and helpers shared by the unit tests.

#include <cmath>
#include <string>
#include <vector>

#include "omc/core.hpp"

namespace omc::testing {

// g(theta, u) = c, whatever theta and u are.
class ConstantSimulator final : public Simulator {
 public:
  ConstantSimulator(std::size_t dim, std::size_t out_dim, double value = 0.5)
      : Simulator(dim, out_dim, PriorBox::cube(dim, -1.0, 1.0)), value_(value) {}
  std::string name() const override { return "constant"; }
  NoiseSchema noise_schema() const override { return {}; }
  NoiseDraw sample_noise(Rng&) const override { return {}; }

 protected:
  void do_simulate(const Vector&, const NoiseDraw&, Vector& out) const override { out.setConstant(value_); }
  void do_jacobian(const Vector&, const NoiseDraw&, Matrix& jac) const override { jac.setZero(); }

 private:
  double value_;
};

// g(theta, u) = A theta + z, with z the Gaussian part of u.
class LinearSimulator final : public Simulator {
 public:
  explicit LinearSimulator(Matrix a, double lo = -3.0, double hi = 3.0)
      : Simulator(static_cast<std::size_t>(a.cols()), static_cast<std::size_t>(a.rows()),
                  PriorBox::cube(static_cast<std::size_t>(a.cols()), lo, hi)),
        a_(std::move(a)) {}
  std::string name() const override { return "linear"; }
  NoiseSchema noise_schema() const override { return {output_dim(), 0, 0}; }
  NoiseDraw sample_noise(Rng& rng) const override {
    std::vector<double> z(output_dim());
    for (auto& x : z) x = 0.1 * rng.normal();
    return {std::move(z), {}, {}};
  }
  bool constant_jacobian() const override { return true; }
  static NoiseDraw zero_noise(std::size_t n) { return {std::vector<double>(n, 0.0), {}, {}}; }

 protected:
  void do_simulate(const Vector& theta, const NoiseDraw& u, Vector& out) const override {
    out = a_ * theta;
    for (Eigen::Index k = 0; k < out.size(); ++k) out[k] += u.gaussian()[static_cast<std::size_t>(k)];
  }
  void do_jacobian(const Vector&, const NoiseDraw&, Matrix& jac) const override { jac = a_; }

 private:
  Matrix a_;
};

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v[k++] = x;
  return v;
}

inline NoiseDraw gaussian_noise(std::vector<double> z, std::vector<int> sel = {}, std::vector<double> uni = {}) {
  return {std::move(z), std::move(sel), std::move(uni)};
}

inline double max_relative_error(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double denom = std::max(1.0, std::abs(b(i, j)));
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / denom);
    }
  return worst;
}

}  // namespace omc::testing
