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

// Simulator abstraction, frozen noise records, and the masked squared
// Euclidean distance shared by the whole pipeline.

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "omc/error.hpp"
#include "omc/rng.hpp"

namespace omc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// A point in parameter space (length D).
using ParamVector = Vector;
// One simulator output (length D_y).
using OutputVector = Vector;

inline bool all_finite(const Vector& v) { return v.allFinite(); }

// Sizes of the three parts of a NoiseDraw that a simulator consumes.
struct NoiseSchema {
  std::size_t gaussian = 0;
  std::size_t selectors = 0;
  std::size_t uniforms = 0;

  friend bool operator==(const NoiseSchema&, const NoiseSchema&) = default;
};

// Frozen nuisance variables u. Once built it never changes, so
// simulate(theta, u) is a deterministic function of theta.
class NoiseDraw {
 public:
  NoiseDraw() = default;
  NoiseDraw(std::vector<double> gaussian, std::vector<int> selectors,
            std::vector<double> uniforms)
      : gaussian_(std::move(gaussian)),
        selectors_(std::move(selectors)),
        uniforms_(std::move(uniforms)) {}

  const std::vector<double>& gaussian() const noexcept { return gaussian_; }
  const std::vector<int>& selectors() const noexcept { return selectors_; }
  const std::vector<double>& uniforms() const noexcept { return uniforms_; }

  NoiseSchema schema() const noexcept {
    return {gaussian_.size(), selectors_.size(), uniforms_.size()};
  }

  friend bool operator==(const NoiseDraw&, const NoiseDraw&) = default;

 private:
  std::vector<double> gaussian_;
  std::vector<int> selectors_;
  std::vector<double> uniforms_;
};

// Axis-aligned uniform prior.
class PriorBox {
 public:
  PriorBox() = default;
  PriorBox(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() != upper_.size() || lower_.size() == 0)
      throw SchemaError("prior bounds must be non-empty and of equal length");
    for (Eigen::Index j = 0; j < lower_.size(); ++j) {
      if (!(lower_[j] < upper_[j]))
        throw SchemaError("prior lower bound must be strictly below upper bound");
    }
    log_volume_ = (upper_ - lower_).array().log().sum();
  }

  static PriorBox cube(std::size_t dim, double lo, double hi) {
    return {Vector::Constant(static_cast<Eigen::Index>(dim), lo),
            Vector::Constant(static_cast<Eigen::Index>(dim), hi)};
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(lower_.size()); }
  const Vector& lower() const noexcept { return lower_; }
  const Vector& upper() const noexcept { return upper_; }

  bool contains(const Vector& theta) const {
    return (theta.array() >= lower_.array()).all() && (theta.array() <= upper_.array()).all();
  }

  double log_volume() const noexcept { return log_volume_; }

  double density(const Vector& theta) const {
    return contains(theta) ? std::exp(-log_volume_) : 0.0;
  }

  Vector mean() const { return 0.5 * (lower_ + upper_); }

  Vector sample(Rng& rng) const {
    Vector out(lower_.size());
    for (Eigen::Index j = 0; j < out.size(); ++j) out[j] = rng.uniform(lower_[j], upper_[j]);
    return out;
  }

 private:
  Vector lower_;
  Vector upper_;
  double log_volume_ = 0.0;
};

// Reparameterized simulator y = g(theta, u).
//
// Subclasses implement do_simulate and, when has_analytic_jacobian() is true,
// do_jacobian. do_vjp may be overridden when J^T c is cheaper than forming J
// (large image models).
class Simulator {
 public:
  Simulator(std::size_t param_dim, std::size_t output_dim, PriorBox prior)
      : param_dim_(param_dim), output_dim_(output_dim), prior_(std::move(prior)) {
    if (param_dim_ == 0) throw SchemaError("simulator needs at least one parameter");
    if (prior_.dim() != param_dim_) throw SchemaError("prior dimension does not match D");
  }
  virtual ~Simulator() = default;
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  virtual std::string name() const = 0;
  virtual NoiseSchema noise_schema() const = 0;
  virtual NoiseDraw sample_noise(Rng& rng) const = 0;
  virtual bool has_analytic_jacobian() const { return true; }
  // True when J(theta, u) is the same matrix everywhere (linear models).
  virtual bool constant_jacobian() const { return false; }

  std::size_t param_dim() const noexcept { return param_dim_; }
  std::size_t output_dim() const noexcept { return output_dim_; }
  const PriorBox& prior() const noexcept { return prior_; }

  void simulate(const Vector& theta, const NoiseDraw& u, Vector& out) const {
    check(theta, u);
    out.resize(static_cast<Eigen::Index>(output_dim_));
    do_simulate(theta, u, out);
    simulate_calls_.fetch_add(1, std::memory_order_relaxed);
  }

  OutputVector simulate(const Vector& theta, const NoiseDraw& u) const {
    OutputVector out;
    simulate(theta, u, out);
    return out;
  }

  // D_y x D matrix of partial derivatives at (theta, u).
  Matrix jacobian(const Vector& theta, const NoiseDraw& u) const {
    check(theta, u);
    if (!has_analytic_jacobian())
      throw CapabilityError(name() + ": no analytic Jacobian available");
    Matrix jac(static_cast<Eigen::Index>(output_dim_), static_cast<Eigen::Index>(param_dim_));
    do_jacobian(theta, u, jac);
    gradient_calls_.fetch_add(1, std::memory_order_relaxed);
    return jac;
  }

  // Vector-Jacobian product J(theta, u)^T * cotangent.
  Vector vjp(const Vector& theta, const NoiseDraw& u, const Vector& cotangent) const {
    check(theta, u);
    if (cotangent.size() != static_cast<Eigen::Index>(output_dim_))
      throw SchemaError(name() + ": cotangent length does not match D_y");
    if (!has_analytic_jacobian())
      throw CapabilityError(name() + ": no analytic Jacobian available");
    Vector out(static_cast<Eigen::Index>(param_dim_));
    do_vjp(theta, u, cotangent, out);
    gradient_calls_.fetch_add(1, std::memory_order_relaxed);
    return out;
  }

  std::uint64_t simulate_calls() const noexcept { return simulate_calls_.load(); }
  std::uint64_t gradient_calls() const noexcept { return gradient_calls_.load(); }
  void reset_counters() const noexcept {
    simulate_calls_ = 0;
    gradient_calls_ = 0;
  }

 protected:
  virtual void do_simulate(const Vector& theta, const NoiseDraw& u, Vector& out) const = 0;
  virtual void do_jacobian(const Vector& /*theta*/, const NoiseDraw& /*u*/, Matrix& /*jac*/) const {
    throw CapabilityError(name() + ": no analytic Jacobian available");
  }
  virtual void do_vjp(const Vector& theta, const NoiseDraw& u, const Vector& cotangent,
                      Vector& out) const {
    Matrix jac(static_cast<Eigen::Index>(output_dim_), static_cast<Eigen::Index>(param_dim_));
    do_jacobian(theta, u, jac);
    out.noalias() = jac.transpose() * cotangent;
  }

 private:
  void check(const Vector& theta, const NoiseDraw& u) const {
    if (theta.size() != static_cast<Eigen::Index>(param_dim_))
      throw SchemaError(name() + ": theta has length " + std::to_string(theta.size()) +
                        ", expected " + std::to_string(param_dim_));
    if (!(u.schema() == noise_schema()))
      throw SchemaError(name() + ": noise draw does not match the simulator's noise schema");
  }

  std::size_t param_dim_;
  std::size_t output_dim_;
  PriorBox prior_;
  mutable std::atomic<std::uint64_t> simulate_calls_{0};
  mutable std::atomic<std::uint64_t> gradient_calls_{0};
};

using SimulatorPtr = std::shared_ptr<const Simulator>;

// Subgradient of |x| with sign(0) = 0.
inline double sign0(double x) noexcept { return (x > 0.0) - (x < 0.0); }

// Central differences, column j = (g(theta + h e_j) - g(theta - h e_j)) / 2h.
inline Matrix finite_diff_jacobian(const Simulator& sim, const Vector& theta,
                                   const NoiseDraw& u, double h = 1e-5) {
  if (!(h > 0.0)) throw ConfigError("finite difference step must be positive");
  const auto dy = static_cast<Eigen::Index>(sim.output_dim());
  Matrix jac(dy, theta.size());
  Vector plus = theta, minus = theta, gp, gm;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    plus[j] = theta[j] + h;
    minus[j] = theta[j] - h;
    sim.simulate(plus, u, gp);
    sim.simulate(minus, u, gm);
    jac.col(j) = (gp - gm) / (2.0 * h);
    plus[j] = theta[j];
    minus[j] = theta[j];
  }
  return jac;
}

// Jacobian, falling back to finite differences only when explicitly allowed.
inline Matrix jacobian(const Simulator& sim, const Vector& theta, const NoiseDraw& u,
                       bool allow_finite_differences = false) {
  if (sim.has_analytic_jacobian() || !allow_finite_differences) return sim.jacobian(theta, u);
  return finite_diff_jacobian(sim, theta, u);
}

// Boolean selection of informative output dimensions.
struct Mask {
  std::vector<bool> active;
  double threshold = 0.0;
  // Monte Carlo estimates of E||grad_theta g_k|| per output dimension.
  std::vector<double> estimates;

  static Mask all(std::size_t n) { return {std::vector<bool>(n, true), 0.0, {}}; }

  std::size_t size() const noexcept { return active.size(); }
  std::size_t active_count() const noexcept {
    std::size_t c = 0;
    for (bool a : active) c += a;
    return c;
  }
  std::vector<std::size_t> active_indices() const {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < active.size(); ++k)
      if (active[k]) idx.push_back(k);
    return idx;
  }
};

class NoInformativeDimensionsError : public InferenceError {
 public:
  NoInformativeDimensionsError()
      : InferenceError("mask has no active output dimension; every output is uninformative") {}
};

inline void check_mask(const Mask& mask, std::size_t output_dim) {
  if (mask.size() != output_dim)
    throw SchemaError("mask length " + std::to_string(mask.size()) + " does not match D_y " +
                      std::to_string(output_dim));
  if (mask.active_count() == 0) throw NoInformativeDimensionsError();
}

// Sum over active k of (y_k - y_obs_k)^2.
inline double masked_squared_distance(const Vector& y, const Vector& y_obs, const Mask& mask) {
  double d = 0.0;
  for (std::size_t k = 0; k < mask.active.size(); ++k) {
    if (!mask.active[k]) continue;
    const double r = y[static_cast<Eigen::Index>(k)] - y_obs[static_cast<Eigen::Index>(k)];
    d += r * r;
  }
  return d;
}

inline double masked_distance(const Simulator& sim, const Vector& theta, const NoiseDraw& u,
                              const OutputVector& y_obs, const Mask& mask) {
  check_mask(mask, sim.output_dim());
  if (y_obs.size() != static_cast<Eigen::Index>(sim.output_dim()))
    throw SchemaError("observation length does not match D_y");
  return masked_squared_distance(sim.simulate(theta, u), y_obs, mask);
}

// d(theta) = masked distance for one frozen (u, y_obs) pair, with gradient
// 2 J^T (m .* (g - y_obs)).
class SeedObjective {
 public:
  SeedObjective(const Simulator& sim, const NoiseDraw& u, const OutputVector& y_obs,
                const Mask& mask)
      : sim_(&sim), u_(&u), y_obs_(&y_obs), mask_(&mask) {
    check_mask(mask, sim.output_dim());
    if (y_obs.size() != static_cast<Eigen::Index>(sim.output_dim()))
      throw SchemaError("observation length does not match D_y");
  }

  double operator()(const Vector& theta) const {
    sim_->simulate(theta, *u_, buffer_);
    return masked_squared_distance(buffer_, *y_obs_, *mask_);
  }

  // Returns d(theta) and writes its gradient.
  double value_and_gradient(const Vector& theta, Vector& grad) const {
    sim_->simulate(theta, *u_, buffer_);
    Vector cot = Vector::Zero(buffer_.size());
    double d = 0.0;
    for (std::size_t k = 0; k < mask_->active.size(); ++k) {
      if (!mask_->active[k]) continue;
      const auto kk = static_cast<Eigen::Index>(k);
      const double r = buffer_[kk] - (*y_obs_)[kk];
      d += r * r;
      cot[kk] = 2.0 * r;
    }
    grad = sim_->vjp(theta, *u_, cot);
    return d;
  }

  const Simulator& simulator() const noexcept { return *sim_; }
  const Mask& mask() const noexcept { return *mask_; }
  const NoiseDraw& noise() const noexcept { return *u_; }

 private:
  const Simulator* sim_;
  const NoiseDraw* u_;
  const OutputVector* y_obs_;
  const Mask* mask_;
  mutable Vector buffer_;
};

// Jacobian restricted to the active rows of a mask.
inline Matrix masked_rows(const Matrix& jac, const Mask& mask) {
  const auto idx = mask.active_indices();
  Matrix out(static_cast<Eigen::Index>(idx.size()), jac.cols());
  for (std::size_t r = 0; r < idx.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = jac.row(static_cast<Eigen::Index>(idx[r]));
  return out;
}

}  // namespace omc
