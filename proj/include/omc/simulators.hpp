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

// Benchmark simulators, all written in reparameterized form g(theta, u).

#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "omc/core.hpp"

namespace omc {

// Gaussian location model y = theta + s * mu + sigma * z, optionally with a
// random mode sign s and with appended U(-3, 3) distractor coordinates.
class MogSimulator final : public Simulator {
 public:
  static constexpr double kMu = 1.0;
  static constexpr double kSigma = 0.2;
  static constexpr std::size_t kDistractors = 18;

  MogSimulator(std::size_t dim, bool two_modes, bool distractors)
      : Simulator(dim, dim + (distractors ? kDistractors : 0), PriorBox::cube(dim, -3.0, 3.0)),
        two_modes_(two_modes),
        distractors_(distractors) {}

  std::string name() const override {
    return std::string(two_modes_ ? "mog_two" : "mog_base") + (distractors_ ? "_dist" : "");
  }
  bool two_modes() const noexcept { return two_modes_; }
  bool has_distractors() const noexcept { return distractors_; }
  bool constant_jacobian() const override { return true; }

  NoiseSchema noise_schema() const override {
    return {param_dim(), two_modes_ ? 1u : 0u, distractors_ ? kDistractors : 0u};
  }

  NoiseDraw sample_noise(Rng& rng) const override {
    std::vector<double> z(param_dim());
    for (auto& x : z) x = rng.normal();
    std::vector<int> sel;
    if (two_modes_) sel.push_back(rng.uniform() < 0.5 ? 1 : -1);
    std::vector<double> dist;
    if (distractors_) {
      dist.resize(kDistractors);
      for (auto& x : dist) x = rng.uniform(-3.0, 3.0);
    }
    return {std::move(z), std::move(sel), std::move(dist)};
  }

 protected:
  void do_simulate(const Vector& theta, const NoiseDraw& u, Vector& out) const override {
    const double shift = two_modes_ ? kMu * u.selectors()[0] : kMu;
    const auto& z = u.gaussian();
    for (Eigen::Index j = 0; j < theta.size(); ++j)
      out[j] = theta[j] + shift + kSigma * z[static_cast<std::size_t>(j)];
    if (distractors_)
      for (std::size_t k = 0; k < kDistractors; ++k)
        out[theta.size() + static_cast<Eigen::Index>(k)] = u.uniforms()[k];
  }

  void do_jacobian(const Vector& theta, const NoiseDraw&, Matrix& jac) const override {
    jac.setZero();
    jac.topRows(theta.size()).setIdentity();
  }

  void do_vjp(const Vector& theta, const NoiseDraw&, const Vector& cot, Vector& out) const override {
    out = cot.head(theta.size());
  }

 private:
  bool two_modes_;
  bool distractors_;
};

// I.i.d. 2-d Gaussian draws y_k = m + L z_k with m = (t1, t2),
// L = [[s1, 0], [rho s2, s2 sqrt(1 - rho^2)]], s1 = t3^2, s2 = t4^2,
// rho = tanh(t5). The distractor variant appends 23 U(-3, 3) coordinates to
// each draw. The full model stacks four draws; inference treats each draw as
// one observation and uses draws = 1.
class SlcpSimulator final : public Simulator {
 public:
  static constexpr std::size_t kDistractorsPerDraw = 23;

  explicit SlcpSimulator(bool distractors, std::size_t draws = 4)
      : Simulator(5, draws * (2 + (distractors ? kDistractorsPerDraw : 0)),
                  PriorBox::cube(5, -3.0, 3.0)),
        distractors_(distractors),
        draws_(draws) {
    if (draws == 0) throw ConfigError("slcp: need at least one draw");
  }

  std::string name() const override { return distractors_ ? "slcp_dist" : "slcp"; }
  bool has_distractors() const noexcept { return distractors_; }
  std::size_t draws() const noexcept { return draws_; }
  std::size_t stride() const noexcept { return 2 + (distractors_ ? kDistractorsPerDraw : 0); }

  NoiseSchema noise_schema() const override {
    return {2 * draws_, 0, distractors_ ? draws_ * kDistractorsPerDraw : 0};
  }

  NoiseDraw sample_noise(Rng& rng) const override {
    std::vector<double> z(2 * draws_);
    for (auto& x : z) x = rng.normal();
    std::vector<double> dist;
    if (distractors_) {
      dist.resize(draws_ * kDistractorsPerDraw);
      for (auto& x : dist) x = rng.uniform(-3.0, 3.0);
    }
    return {std::move(z), {}, std::move(dist)};
  }

  // Mean and Cholesky factor entries (l11, l21, l22) at theta.
  struct Factor {
    double m1, m2, l11, l21, l22;
  };
  static Factor factor(const Vector& theta) {
    const double s1 = theta[2] * theta[2];
    const double s2 = theta[3] * theta[3];
    const double rho = std::tanh(theta[4]);
    const double root = 1.0 / std::cosh(theta[4]);  // sqrt(1 - tanh^2)
    return {theta[0], theta[1], s1, rho * s2, s2 * root};
  }

 protected:
  void do_simulate(const Vector& theta, const NoiseDraw& u, Vector& out) const override {
    const Factor f = factor(theta);
    const auto& z = u.gaussian();
    const auto st = static_cast<Eigen::Index>(stride());
    for (std::size_t k = 0; k < draws_; ++k) {
      const double z1 = z[2 * k], z2 = z[2 * k + 1];
      const Eigen::Index base = static_cast<Eigen::Index>(k) * st;
      out[base] = f.m1 + f.l11 * z1;
      out[base + 1] = f.m2 + f.l21 * z1 + f.l22 * z2;
      if (distractors_)
        for (std::size_t j = 0; j < kDistractorsPerDraw; ++j)
          out[base + 2 + static_cast<Eigen::Index>(j)] = u.uniforms()[k * kDistractorsPerDraw + j];
    }
  }

  void do_jacobian(const Vector& theta, const NoiseDraw& u, Matrix& jac) const override {
    jac.setZero();
    const double rho = std::tanh(theta[4]);
    const double root = 1.0 / std::cosh(theta[4]);
    const double s2 = theta[3] * theta[3];
    const auto& z = u.gaussian();
    const auto st = static_cast<Eigen::Index>(stride());
    for (std::size_t k = 0; k < draws_; ++k) {
      const double z1 = z[2 * k], z2 = z[2 * k + 1];
      const Eigen::Index r = static_cast<Eigen::Index>(k) * st;
      jac(r, 0) = 1.0;
      jac(r, 2) = 2.0 * theta[2] * z1;
      jac(r + 1, 1) = 1.0;
      jac(r + 1, 3) = 2.0 * theta[3] * (rho * z1 + root * z2);
      // d rho / d t5 = root^2, d root / d t5 = -rho * root.
      jac(r + 1, 4) = s2 * (root * root * z1 - rho * root * z2);
    }
  }

 private:
  bool distractors_;
  std::size_t draws_;
};

// Two-moons: y = (r cos a + 0.25 + |t1 + t2| / sqrt2, r sin a + (t2 - t1) / sqrt2)
// with r = 0.1 + 0.01 z, a ~ U(-pi/2, pi/2).
class TwoMoonsSimulator final : public Simulator {
 public:
  TwoMoonsSimulator() : Simulator(2, 2, PriorBox::cube(2, -1.0, 1.0)) {}

  std::string name() const override { return "two_moons"; }
  NoiseSchema noise_schema() const override { return {1, 0, 1}; }

  NoiseDraw sample_noise(Rng& rng) const override {
    const double z = rng.normal();
    const double a = rng.uniform(-std::numbers::pi / 2.0, std::numbers::pi / 2.0);
    return {{z}, {}, {a}};
  }

  static double radius(const NoiseDraw& u) { return 0.1 + 0.01 * u.gaussian()[0]; }
  static double angle(const NoiseDraw& u) { return u.uniforms()[0]; }

 protected:
  void do_simulate(const Vector& theta, const NoiseDraw& u, Vector& out) const override {
    const double r = radius(u), a = angle(u);
    out[0] = r * std::cos(a) + 0.25 + std::abs(theta[0] + theta[1]) / std::numbers::sqrt2;
    out[1] = r * std::sin(a) + (theta[1] - theta[0]) / std::numbers::sqrt2;
  }

  void do_jacobian(const Vector& theta, const NoiseDraw&, Matrix& jac) const override {
    const double g = sign0(theta[0] + theta[1]) / std::numbers::sqrt2;
    jac(0, 0) = g;
    jac(0, 1) = g;
    jac(1, 0) = -1.0 / std::numbers::sqrt2;
    jac(1, 1) = 1.0 / std::numbers::sqrt2;
  }
};

// Camera models on a height x width image with a U(0, 1) prior per pixel.
class ImageSimulator : public Simulator {
 public:
  ImageSimulator(std::size_t height, std::size_t width, double noise_sd)
      : Simulator(height * width, height * width, PriorBox::cube(height * width, 0.0, 1.0)),
        height_(height),
        width_(width),
        noise_sd_(noise_sd) {}

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  double noise_sd() const noexcept { return noise_sd_; }
  bool constant_jacobian() const override { return true; }

  NoiseSchema noise_schema() const override { return {param_dim(), 0, 0}; }
  NoiseDraw sample_noise(Rng& rng) const override {
    std::vector<double> z(param_dim());
    for (auto& x : z) x = rng.normal();
    return {std::move(z), {}, {}};
  }

  // Noise-free part of the camera, y = A theta (+ offset).
  virtual Vector apply(const Vector& theta) const = 0;
  virtual Vector apply_transpose(const Vector& v) const = 0;
  virtual double offset() const { return 0.0; }

  Matrix linear_operator() const {
    const auto n = static_cast<Eigen::Index>(param_dim());
    Matrix a(n, n);
    Vector e = Vector::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      e[j] = 1.0;
      a.col(j) = apply(e);
      e[j] = 0.0;
    }
    return a;
  }

 protected:
  void do_simulate(const Vector& theta, const NoiseDraw& u, Vector& out) const override {
    out = apply(theta);
    const auto& z = u.gaussian();
    for (Eigen::Index k = 0; k < out.size(); ++k)
      out[k] += offset() + noise_sd_ * z[static_cast<std::size_t>(k)];
  }
  void do_jacobian(const Vector&, const NoiseDraw&, Matrix& jac) const override {
    jac = linear_operator();
  }
  void do_vjp(const Vector&, const NoiseDraw&, const Vector& cot, Vector& out) const override {
    out = apply_transpose(cot);
  }

 private:
  std::size_t height_;
  std::size_t width_;
  double noise_sd_;
};

// y_ij = a theta_ij + b + sigma z_ij.
class PixelwiseCamera final : public ImageSimulator {
 public:
  PixelwiseCamera(double gain = 0.8, double bias = 0.1, double noise_sd = 0.1,
                  std::size_t height = 28, std::size_t width = 28)
      : ImageSimulator(height, width, noise_sd), gain_(gain), bias_(bias) {
    if (gain_ == 0.0) throw ConfigError("pixel-wise camera needs a non-zero gain");
  }

  std::string name() const override { return "img_pixel"; }
  double gain() const noexcept { return gain_; }
  double offset() const override { return bias_; }

  Vector apply(const Vector& theta) const override { return gain_ * theta; }
  Vector apply_transpose(const Vector& v) const override { return gain_ * v; }

 protected:
  void do_jacobian(const Vector&, const NoiseDraw&, Matrix& jac) const override {
    jac.setZero();
    jac.diagonal().setConstant(gain_);
  }

 private:
  double gain_;
  double bias_;
};

// y = K * theta + sigma z with the 3x3 kernel k_ab = (-1)^(a+b), stride 1,
// zero padding, same output size.
class CheckerboardCamera final : public ImageSimulator {
 public:
  explicit CheckerboardCamera(double noise_sd = 0.1, std::size_t height = 28, std::size_t width = 28)
      : ImageSimulator(height, width, noise_sd) {}

  std::string name() const override { return "img_checker"; }

  static double kernel(int da, int db) { return ((da + db) % 2 == 0) ? 1.0 : -1.0; }

  Vector apply(const Vector& theta) const override { return correlate(theta); }
  // The kernel is symmetric under a 180 degree flip, so K^T = K.
  Vector apply_transpose(const Vector& v) const override { return correlate(v); }

 private:
  Vector correlate(const Vector& x) const {
    const int h = static_cast<int>(height()), w = static_cast<int>(width());
    Vector out = Vector::Zero(x.size());
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        double acc = 0.0;
        for (int a = -1; a <= 1; ++a) {
          const int ii = i + a;
          if (ii < 0 || ii >= h) continue;
          for (int b = -1; b <= 1; ++b) {
            const int jj = j + b;
            if (jj < 0 || jj >= w) continue;
            acc += kernel(a + 1, b + 1) * x[ii * w + jj];
          }
        }
        out[i * w + j] = acc;
      }
    return out;
  }
};

}  // namespace omc
