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

// Per-(observation, seed) deterministic minimization with Adam, seed
// filtering, and threshold selection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <vector>

#include "omc/core.hpp"
#include "omc/format.hpp"
#include "omc/parallel.hpp"

namespace omc {

enum class InitMode { kPriorSample, kPriorMean };

struct OptimizerConfig {
  double learning_rate = 0.01;
  std::size_t steps = 50;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  InitMode init = InitMode::kPriorSample;

  void validate() const {
    detail::require(learning_rate > 0.0 && learning_rate <= 1.0,
                    "optimizer: learning rate must lie in (0, 1]");
    detail::require(steps >= 1, "optimizer: steps must be >= 1");
    detail::require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0,
                    "optimizer: Adam betas must lie in [0, 1)");
    detail::require(epsilon > 0.0, "optimizer: Adam epsilon must be positive");
  }
};

struct OptimizationRecord {
  std::size_t obs_index = 0;
  std::size_t seed_index = 0;
  ParamVector theta_star;
  // Smallest distance over every visited iterate, the start point included.
  double d_star = std::numeric_limits<double>::infinity();
  bool accepted = false;
  // Set when a non-finite gradient or distance was met; never accepted.
  bool failed = false;
};

// Runs cfg.steps Adam iterations on d(theta) and returns the best iterate.
inline OptimizationRecord optimize_seed(const SeedObjective& objective, const ParamVector& theta0,
                                        const OptimizerConfig& cfg) {
  cfg.validate();
  if (!all_finite(theta0)) throw ConfigError("optimize_seed: initial point is not finite");

  OptimizationRecord rec;
  Vector theta = theta0;
  Vector grad;
  Vector m = Vector::Zero(theta.size());
  Vector v = Vector::Zero(theta.size());
  double b1_pow = 1.0, b2_pow = 1.0;

  for (std::size_t t = 1; t <= cfg.steps; ++t) {
    const double d = objective.value_and_gradient(theta, grad);
    if (!std::isfinite(d) || !grad.allFinite()) {
      rec.failed = true;
      break;
    }
    if (d < rec.d_star) {
      rec.d_star = d;
      rec.theta_star = theta;
    }
    b1_pow *= cfg.beta1;
    b2_pow *= cfg.beta2;
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseAbs2();
    const double lr_t = cfg.learning_rate * std::sqrt(1.0 - b2_pow) / (1.0 - b1_pow);
    const double eps_t = cfg.epsilon * std::sqrt(1.0 - b2_pow);
    theta.array() -= lr_t * m.array() / (v.array().sqrt() + eps_t);
  }
  if (!rec.failed) {
    const double d = objective(theta);
    if (std::isfinite(d) && d < rec.d_star) {
      rec.d_star = d;
      rec.theta_star = theta;
    }
  }
  if (rec.theta_star.size() == 0) rec.theta_star = theta0;
  if (rec.failed) rec.accepted = false;
  return rec;
}

inline OptimizationRecord optimize_seed(const Simulator& sim, const NoiseDraw& u,
                                        const OutputVector& y_obs, const Mask& mask,
                                        const ParamVector& theta0, const OptimizerConfig& cfg) {
  return optimize_seed(SeedObjective(sim, u, y_obs, mask), theta0, cfg);
}

// noise[n][i] is the frozen draw u_{i,n}.
using NoiseTable = std::vector<std::vector<NoiseDraw>>;

inline NoiseTable draw_noise_table(const Simulator& sim, std::size_t n_obs, std::size_t seeds,
                                   const Rng& rng) {
  NoiseTable table(n_obs, std::vector<NoiseDraw>(seeds));
  for (std::size_t n = 0; n < n_obs; ++n)
    for (std::size_t i = 0; i < seeds; ++i) {
      Rng r = rng.split({stream::kNoise, n, i});
      table[n][i] = sim.sample_noise(r);
    }
  return table;
}

inline ParamVector initial_point(const Simulator& sim, const OptimizerConfig& cfg, const Rng& rng,
                                 std::size_t n, std::size_t i) {
  if (cfg.init == InitMode::kPriorMean) return sim.prior().mean();
  Rng r = rng.split({stream::kInit, n, i});
  return sim.prior().sample(r);
}

// Records are laid out n-major: index n * S + i.
inline std::vector<OptimizationRecord> run_optimizations(const Simulator& sim,
                                                         const std::vector<OutputVector>& observations,
                                                         const NoiseTable& noise, const Mask& mask,
                                                         const OptimizerConfig& cfg, const Rng& rng) {
  cfg.validate();
  detail::require(!observations.empty(), "run_optimizations: need at least one observation");
  detail::require(noise.size() == observations.size(),
                  "run_optimizations: noise table must have one row per observation");
  const std::size_t seeds = noise.front().size();
  detail::require(seeds >= 1, "run_optimizations: need at least one seed");
  for (const auto& row : noise)
    detail::require(row.size() == seeds, "run_optimizations: ragged noise table");
  check_mask(mask, sim.output_dim());

  std::vector<OptimizationRecord> records(observations.size() * seeds);
  parallel_for(records.size(), [&](std::size_t k) {
    const std::size_t n = k / seeds, i = k % seeds;
    SeedObjective objective(sim, noise[n][i], observations[n], mask);
    OptimizationRecord rec = optimize_seed(objective, initial_point(sim, cfg, rng, n, i), cfg);
    rec.obs_index = n;
    rec.seed_index = i;
    records[k] = std::move(rec);
  });
  return records;
}

inline std::vector<OptimizationRecord> run_optimizations(const Simulator& sim,
                                                         const std::vector<OutputVector>& observations,
                                                         std::size_t seeds, const Mask& mask,
                                                         const OptimizerConfig& cfg, const Rng& rng) {
  detail::require(seeds >= 1, "run_optimizations: need at least one seed");
  return run_optimizations(sim, observations,
                           draw_noise_table(sim, observations.size(), seeds, rng), mask, cfg, rng);
}

inline std::size_t keep_count(double pcg_to_keep, std::size_t seeds) {
  // The small offset stops products like 0.7 * 10 = 7.000000000000001 rounding up.
  const double raw = pcg_to_keep * static_cast<double>(seeds);
  return std::min(seeds, static_cast<std::size_t>(std::ceil(raw - 1e-9)));
}

// Per observation, accepts the ceil(pcg * S) records with smallest d_star
// (ties to the lower seed index). Failed records are never accepted.
inline std::vector<OptimizationRecord> filter_seeds(std::vector<OptimizationRecord> records,
                                                    double pcg_to_keep) {
  detail::require(pcg_to_keep > 0.0 && pcg_to_keep <= 1.0,
                  "filter_seeds: pcg_to_keep must lie in (0, 1]");
  std::size_t n_obs = 0;
  for (const auto& r : records) n_obs = std::max(n_obs, r.obs_index + 1);
  std::vector<std::vector<std::size_t>> groups(n_obs);
  for (std::size_t k = 0; k < records.size(); ++k) groups[records[k].obs_index].push_back(k);

  for (auto& group : groups) {
    std::sort(group.begin(), group.end(), [&](std::size_t a, std::size_t b) {
      const auto& ra = records[a];
      const auto& rb = records[b];
      if (ra.failed != rb.failed) return !ra.failed;
      if (ra.d_star != rb.d_star) return ra.d_star < rb.d_star;
      return ra.seed_index < rb.seed_index;
    });
    const std::size_t keep = keep_count(pcg_to_keep, group.size());
    for (std::size_t r = 0; r < group.size(); ++r) {
      auto& rec = records[group[r]];
      rec.accepted = r < keep && !rec.failed && std::isfinite(rec.d_star);
    }
  }
  return records;
}

enum class EpsilonMode { kTwiceWorstAccepted, kFixed };

struct EpsilonRule {
  EpsilonMode mode = EpsilonMode::kTwiceWorstAccepted;
  std::optional<double> fixed_value;

  static EpsilonRule fixed(double value) { return {EpsilonMode::kFixed, value}; }

  void validate() const {
    if (mode == EpsilonMode::kFixed)
      detail::require(fixed_value.has_value() && *fixed_value > 0.0,
                      "epsilon: fixed mode needs a positive value");
  }
};

inline constexpr double kEpsilonFloor = 1e-8;

inline double select_epsilon(const std::vector<OptimizationRecord>& records,
                             const EpsilonRule& rule) {
  rule.validate();
  double worst = -1.0;
  for (const auto& r : records)
    if (r.accepted) worst = std::max(worst, r.d_star);
  if (worst < 0.0) throw InferenceError("select_epsilon: no accepted optimization record");
  if (rule.mode == EpsilonMode::kFixed) return *rule.fixed_value;
  return std::max(2.0 * worst, kEpsilonFloor);
}

inline void write_records_csv(std::ostream& os, const std::vector<OptimizationRecord>& records) {
  std::size_t dim = 0;
  for (const auto& r : records) dim = std::max<std::size_t>(dim, r.theta_star.size());
  os << "n,i,d_star,accepted";
  for (std::size_t j = 0; j < dim; ++j) os << ",theta_" << j;
  os << '\n';
  for (const auto& r : records) {
    os << r.obs_index << ',' << r.seed_index << ',' << fmt_double(r.d_star) << ','
       << (r.accepted ? 1 : 0);
    for (Eigen::Index j = 0; j < r.theta_star.size(); ++j) os << ',' << fmt_double(r.theta_star[j]);
    os << '\n';
  }
}

}  // namespace omc
