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

// Ground-truth posterior samplers used to score inference runs.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "omc/core.hpp"
#include "omc/parallel.hpp"
#include "omc/problems.hpp"

namespace omc {

namespace detail {

inline constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
inline double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace detail

// Mean of N(mu, sd^2) truncated to [lo, hi].
inline double truncated_normal_mean(double mu, double sd, double lo, double hi) {
  detail::require(sd > 0.0 && lo < hi, "truncated_normal_mean: need sd > 0 and lo < hi");
  const double a = (lo - mu) / sd, b = (hi - mu) / sd;
  // Work on the side of the tail with the larger mass to keep the ratio accurate.
  if (a > 0.0) return -truncated_normal_mean(-mu, sd, -hi, -lo);
  const double za = detail::std_normal_cdf(a), zb = detail::std_normal_cdf(b);
  const double mass = zb - za;
  if (mass <= 1e-300) return std::clamp(mu, lo, hi);
  return mu + sd * (detail::std_normal_pdf(a) - detail::std_normal_pdf(b)) / mass;
}

// Standard normal truncated to [a, b] (Robert 1995 proposals).
inline double sample_truncated_std_normal(double a, double b, Rng& rng) {
  detail::require(a < b, "sample_truncated_std_normal: need a < b");
  if (b <= 0.0) return -sample_truncated_std_normal(-b, -a, rng);
  if (a <= 0.0) {
    if (b - a >= std::sqrt(2.0 * std::numbers::pi)) {
      for (;;) {
        const double z = rng.normal();
        if (z >= a && z <= b) return z;
      }
    }
    for (;;) {
      const double z = rng.uniform(a, b);
      if (rng.uniform() <= std::exp(-0.5 * z * z)) return z;
    }
  }
  if (b - a < 2.0 / (a + 1.0)) {
    for (;;) {
      const double z = rng.uniform(a, b);
      if (rng.uniform() <= std::exp(0.5 * (a * a - z * z))) return z;
    }
  }
  const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a - std::log1p(-rng.uniform()) / alpha;
    if (z > b) continue;
    if (rng.uniform() <= std::exp(-0.5 * (z - alpha) * (z - alpha))) return z;
  }
}

inline double sample_truncated_normal(double mu, double sd, double lo, double hi, Rng& rng) {
  return mu + sd * sample_truncated_std_normal((lo - mu) / sd, (hi - mu) / sd, rng);
}

// N(mean, sd^2 I) restricted to the box, by rejection from the untruncated
// density. Suitable when the box holds most of the mass.
inline ParamVector sample_truncated_isotropic(const Vector& mean, double sd, const PriorBox& box,
                                              Rng& rng, std::size_t max_tries = 1000000) {
  Vector x(mean.size());
  for (std::size_t t = 0; t < max_tries; ++t) {
    for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = mean[j] + sd * rng.normal();
    if (box.contains(x)) return x;
  }
  throw InferenceError("truncated Gaussian rejection sampler: acceptance too low");
}

// Mixture of N(+mu 1, sd^2 I) and N(-mu 1, sd^2 I) restricted to the box.
// Each component's truncated mass decides the mode probabilities; with a
// box symmetric about 0 they are equal.
inline ParamVector sample_truncated_two_mode(double mu, double sd, const PriorBox& box, Rng& rng) {
  const auto d = static_cast<Eigen::Index>(box.dim());
  for (;;) {
    const double s = rng.uniform() < 0.5 ? 1.0 : -1.0;
    Vector x(d);
    for (Eigen::Index j = 0; j < d; ++j) x[j] = s * mu + sd * rng.normal();
    if (box.contains(x)) return x;
  }
}

// ---- SLCP reference by random-walk Metropolis ------------------------------

// log p(y_1..y_K | theta) for the SLCP Gaussian; only the first two
// coordinates of each observation are informative.
inline double slcp_log_likelihood(const ParamVector& theta, const std::vector<OutputVector>& obs) {
  const double l11 = theta[2] * theta[2];
  const double s2 = theta[3] * theta[3];
  const double rho = std::tanh(theta[4]);
  const double l21 = rho * s2;
  const double l22 = s2 / std::cosh(theta[4]);
  if (!(l11 > 0.0) || !(l22 > 0.0)) return detail::kMinusInf;
  double ll = 0.0;
  for (const auto& y : obs) {
    const double r1 = y[0] - theta[0];
    const double r2 = y[1] - theta[1];
    const double v1 = r1 / l11;
    const double v2 = (r2 - l21 * v1) / l22;
    ll += -0.5 * (v1 * v1 + v2 * v2) - std::log(l11) - std::log(l22) -
          std::log(2.0 * std::numbers::pi);
  }
  return ll;
}

struct McmcOptions {
  std::size_t chains = 8;
  std::size_t burn_in = 20000;
  std::size_t thin = 10;
  double rhat_target = 1.05;
  std::size_t max_extensions = 3;
};

struct McmcResult {
  std::vector<ParamVector> samples;
  double max_rhat = 0.0;
  double acceptance_rate = 0.0;
};

// Split-R-hat per coordinate over equally long chains; returns the maximum.
inline double split_rhat(const std::vector<std::vector<ParamVector>>& chains) {
  if (chains.empty() || chains.front().size() < 4) return std::numeric_limits<double>::infinity();
  const std::size_t half = chains.front().size() / 2;
  const auto dim = chains.front().front().size();
  double worst = 0.0;
  for (Eigen::Index j = 0; j < dim; ++j) {
    std::vector<double> means, vars;
    for (const auto& c : chains) {
      for (std::size_t part = 0; part < 2; ++part) {
        double m = 0.0;
        for (std::size_t t = 0; t < half; ++t) m += c[part * half + t][j];
        m /= static_cast<double>(half);
        double v = 0.0;
        for (std::size_t t = 0; t < half; ++t) {
          const double e = c[part * half + t][j] - m;
          v += e * e;
        }
        means.push_back(m);
        vars.push_back(v / static_cast<double>(half - 1));
      }
    }
    const double n = static_cast<double>(half);
    const double mbar = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
    double b = 0.0;
    for (double m : means) b += (m - mbar) * (m - mbar);
    b *= n / static_cast<double>(means.size() - 1);
    const double w = std::accumulate(vars.begin(), vars.end(), 0.0) / static_cast<double>(vars.size());
    if (w <= 0.0) return std::numeric_limits<double>::infinity();
    const double var_plus = (n - 1.0) / n * w + b / n;
    worst = std::max(worst, std::sqrt(var_plus / w));
  }
  return worst;
}

// Posterior samples for SLCP. The likelihood depends on theta_3 and theta_4
// only through their squares, so chains run on the folded space
// theta_3, theta_4 >= 0 and the signs are restored uniformly at random.
inline McmcResult slcp_reference_posterior(const std::vector<OutputVector>& obs, std::size_t count,
                                           const Rng& rng, const McmcOptions& opts = {}) {
  detail::require(count >= 1 && opts.chains >= 2, "slcp reference: need count >= 1 and >= 2 chains");
  constexpr Eigen::Index d = 5;
  Vector lo(d), hi(d);
  lo << -3, -3, 0, 0, -3;
  hi << 3, 3, 3, 3, 3;
  auto log_post = [&](const Vector& t) {
    for (Eigen::Index j = 0; j < d; ++j)
      if (t[j] < lo[j] || t[j] > hi[j]) return detail::kMinusInf;
    return slcp_log_likelihood(t, obs);
  };

  // Starting points: best of a pool of prior draws, one pool per chain.
  std::vector<Vector> start(opts.chains);
  for (std::size_t c = 0; c < opts.chains; ++c) {
    Rng r = rng.split({stream::kOracle, 1, c});
    double best = detail::kMinusInf;
    for (int k = 0; k < 5000; ++k) {
      Vector t(d);
      for (Eigen::Index j = 0; j < d; ++j) t[j] = r.uniform(lo[j], hi[j]);
      const double lp = log_post(t);
      if (lp > best) {
        best = lp;
        start[c] = t;
      }
    }
  }

  // Burn-in with per-coordinate scales tuned towards ~30% acceptance, then a
  // fixed Gaussian proposal shaped by the pooled burn-in covariance.
  std::vector<Vector> state = start;
  std::vector<std::vector<Vector>> trace(opts.chains);
  parallel_for(opts.chains, [&](std::size_t c) {
    Rng r = rng.split({stream::kOracle, 2, c});
    Vector x = state[c];
    double lp = log_post(x);
    Vector scale = Vector::Constant(d, 0.1);
    std::vector<std::size_t> acc(d, 0), tries(d, 0);
    for (std::size_t t = 0; t < opts.burn_in; ++t) {
      const auto j = static_cast<Eigen::Index>(t % d);
      Vector y = x;
      y[j] += scale[j] * r.normal();
      const double lq = log_post(y);
      ++tries[j];
      if (std::log(r.uniform()) < lq - lp) {
        x = y;
        lp = lq;
        ++acc[j];
      }
      if (tries[j] == 100) {
        const double rate = static_cast<double>(acc[j]) / 100.0;
        scale[j] *= std::exp(rate - 0.3);
        acc[j] = tries[j] = 0;
      }
      if (2 * t >= opts.burn_in) trace[c].push_back(x);
    }
    state[c] = x;
  });

  Vector mean = Vector::Zero(d);
  std::size_t total = 0;
  for (const auto& tr : trace)
    for (const auto& x : tr) {
      mean += x;
      ++total;
    }
  mean /= static_cast<double>(total);
  Matrix cov = Matrix::Zero(d, d);
  for (const auto& tr : trace)
    for (const auto& x : tr) cov += (x - mean) * (x - mean).transpose();
  cov /= static_cast<double>(total - 1);
  cov += 1e-10 * Matrix::Identity(d, d);
  const Matrix chol = Eigen::LLT<Matrix>(cov * (2.38 * 2.38 / static_cast<double>(d))).matrixL();

  const std::size_t per_chain = (count + opts.chains - 1) / opts.chains;
  McmcResult result;
  std::size_t length = std::max<std::size_t>(per_chain, 200);
  for (std::size_t ext = 0;; ++ext) {
    std::vector<std::vector<ParamVector>> kept(opts.chains);
    std::vector<std::size_t> accepted(opts.chains, 0);
    parallel_for(opts.chains, [&](std::size_t c) {
      Rng r = rng.split({stream::kOracle, 3, ext, c});
      Vector x = state[c];
      double lp = log_post(x);
      Vector z(d);
      for (std::size_t t = 0; t < length * opts.thin; ++t) {
        for (Eigen::Index j = 0; j < d; ++j) z[j] = r.normal();
        const Vector y = x + chol * z;
        const double lq = log_post(y);
        if (std::log(r.uniform()) < lq - lp) {
          x = y;
          lp = lq;
          ++accepted[c];
        }
        if ((t + 1) % opts.thin == 0) kept[c].push_back(x);
      }
    });
    result.max_rhat = split_rhat(kept);
    result.acceptance_rate =
        static_cast<double>(std::accumulate(accepted.begin(), accepted.end(), std::size_t{0})) /
        static_cast<double>(opts.chains * length * opts.thin);
    if (result.max_rhat < opts.rhat_target || ext >= opts.max_extensions) {
      if (result.max_rhat >= opts.rhat_target)
        throw InferenceError("slcp reference: chains did not mix (R-hat " +
                             std::to_string(result.max_rhat) + ")");
      // Interleave chains so that any prefix mixes all of them, then thin
      // evenly down to the requested count.
      std::vector<ParamVector> pooled;
      for (std::size_t t = 0; t < length; ++t)
        for (std::size_t c = 0; c < opts.chains; ++c) pooled.push_back(kept[c][t]);
      Rng flips = rng.split({stream::kOracle, 4});
      for (std::size_t k = 0; k < count; ++k) {
        ParamVector x = pooled[k * pooled.size() / count];
        if (flips.uniform() < 0.5) x[2] = -x[2];
        if (flips.uniform() < 0.5) x[3] = -x[3];
        result.samples.push_back(std::move(x));
      }
      return result;
    }
    length *= 2;
  }
}

// ---- Two-moons reference ---------------------------------------------------

struct AbcOptions {
  double tolerance = 0.0025;        // Euclidean distance in output space
  std::size_t min_draws = 10000000;
  std::size_t block = 1000000;
  std::size_t max_draws = 2000000000;
};

// Rejection ABC from the U(-1, 1)^2 prior. The simulator formula is written
// out here independently of the library simulator.
inline std::vector<ParamVector> two_moons_abc_reference(const OutputVector& y_obs, std::size_t count,
                                                        const Rng& rng, const AbcOptions& opts = {}) {
  detail::require(count >= 1 && opts.tolerance > 0.0 && opts.block >= 1,
                  "two-moons reference: invalid options");
  const double tol2 = opts.tolerance * opts.tolerance;
  const double y0 = y_obs[0], y1 = y_obs[1];
  constexpr std::size_t kBatch = 8;  // blocks per round; fixed so results ignore worker count
  std::vector<ParamVector> out;
  std::size_t drawn = 0;
  for (std::size_t round = 0; out.size() < count || drawn < opts.min_draws; ++round) {
    if (drawn >= opts.max_draws)
      throw InferenceError("two-moons reference: draw budget exhausted before reaching the sample count");
    std::vector<std::vector<ParamVector>> found(kBatch);
    parallel_for(kBatch, [&](std::size_t b) {
      Rng r = rng.split({stream::kOracle, 5, round, b});
      for (std::size_t k = 0; k < opts.block; ++k) {
        const double t0 = r.uniform(-1.0, 1.0), t1 = r.uniform(-1.0, 1.0);
        const double a = r.uniform(-0.5 * std::numbers::pi, 0.5 * std::numbers::pi);
        const double rad = 0.1 + 0.01 * r.normal();
        const double s0 = rad * std::cos(a) + 0.25 + std::abs(t0 + t1) / std::numbers::sqrt2 - y0;
        const double s1 = rad * std::sin(a) + (t1 - t0) / std::numbers::sqrt2 - y1;
        if (s0 * s0 + s1 * s1 <= tol2) {
          ParamVector t(2);
          t << t0, t1;
          found[b].push_back(std::move(t));
        }
      }
    });
    drawn += kBatch * opts.block;
    for (auto& f : found)
      for (auto& t : f) out.push_back(std::move(t));
  }
  out.resize(count);
  return out;
}

// Exact posterior draws: sample the noise, invert the map and keep the
// solutions inside the prior. The map theta -> y has unit Jacobian, so the
// posterior is the pushforward of the noise restricted to the prior.
inline std::vector<ParamVector> two_moons_exact_posterior(const OutputVector& y_obs, std::size_t count,
                                                          const Rng& rng) {
  Rng r = rng.split({stream::kOracle, 6});
  std::vector<ParamVector> out;
  while (out.size() < count) {
    const double a = r.uniform(-0.5 * std::numbers::pi, 0.5 * std::numbers::pi);
    const double rad = 0.1 + 0.01 * r.normal();
    const double p = (y_obs[0] - 0.25 - rad * std::cos(a)) * std::numbers::sqrt2;  // |t0 + t1|
    const double q = (y_obs[1] - rad * std::sin(a)) * std::numbers::sqrt2;         // t1 - t0
    const double s = r.uniform() < 0.5 ? 1.0 : -1.0;
    if (p < 0.0) continue;
    ParamVector t(2);
    t << 0.5 * (s * p - q), 0.5 * (s * p + q);
    if (std::abs(t[0]) <= 1.0 && std::abs(t[1]) <= 1.0) out.push_back(std::move(t));
  }
  return out;
}

// ---- Camera models ---------------------------------------------------------

// Per-pixel posterior mean of the pixel-wise camera: N((y - b) / a, (s / a)^2)
// truncated to [0, 1].
inline Vector pixelwise_posterior_mean(const PixelwiseCamera& cam, const OutputVector& y) {
  const double a = cam.gain();
  const double sd = cam.noise_sd() / std::abs(a);
  Vector out(y.size());
  for (Eigen::Index k = 0; k < y.size(); ++k)
    out[k] = truncated_normal_mean((y[k] - cam.offset()) / a, sd, 0.0, 1.0);
  return out;
}

// Least-squares reconstruction A^{-1} (y - offset) clipped to [0, 1].
inline Vector linear_camera_mean(const ImageSimulator& cam, const OutputVector& y) {
  const Matrix a = cam.linear_operator();
  Eigen::FullPivLU<Matrix> lu(a);
  // The checkerboard stencil is singular when height + 1 or width + 1 is a
  // multiple of 3.
  if (!lu.isInvertible())
    throw CapabilityError("camera operator is singular; no least-squares posterior mean");
  const Vector x = lu.solve((y.array() - cam.offset()).matrix());
  return x.cwiseMax(0.0).cwiseMin(1.0);
}

// Reference posterior mean for the camera problems.
inline Vector analytic_posterior_mean(const BenchmarkProblem& problem) {
  if (const auto* px = dynamic_cast<const PixelwiseCamera*>(problem.simulator.get()))
    return pixelwise_posterior_mean(*px, problem.observations.front());
  if (const auto* cam = dynamic_cast<const ImageSimulator*>(problem.simulator.get()))
    return linear_camera_mean(*cam, problem.observations.front());
  throw CapabilityError("problem '" + problem.id + "' has no analytic posterior mean");
}

// ---- Dispatch --------------------------------------------------------------

struct OracleOptions {
  McmcOptions mcmc;
  AbcOptions abc;
};

inline std::vector<ParamVector> ground_truth_samples(const BenchmarkProblem& problem, std::size_t count,
                                                     const Rng& rng, const OracleOptions& opts = {}) {
  detail::require(count >= 1, "ground_truth_samples: count must be >= 1");
  const Simulator& sim = problem.sim();
  std::vector<ParamVector> out(count);
  switch (problem.ground_truth) {
    case OracleKind::kClosedForm: {
      if (const auto* mog = dynamic_cast<const MogSimulator*>(&sim)) {
        const Vector y = problem.observations.front().head(static_cast<Eigen::Index>(sim.param_dim()));
        if (mog->two_modes()) {
          // Posterior modes sit at y - mu and y + mu; with y = 0 they are +-mu.
          detail::require(y.isZero(0.0), "two-mode oracle assumes a zero observation");
          parallel_for(count, [&](std::size_t k) {
            Rng r = rng.split({stream::kOracle, 7, k});
            out[k] = sample_truncated_two_mode(MogSimulator::kMu, MogSimulator::kSigma, sim.prior(), r);
          });
        } else {
          const Vector mean = (y.array() - MogSimulator::kMu).matrix();
          parallel_for(count, [&](std::size_t k) {
            Rng r = rng.split({stream::kOracle, 7, k});
            out[k] = sample_truncated_isotropic(mean, MogSimulator::kSigma, sim.prior(), r);
          });
        }
        return out;
      }
      if (const auto* px = dynamic_cast<const PixelwiseCamera*>(&sim)) {
        const auto& y = problem.observations.front();
        const double sd = px->noise_sd() / std::abs(px->gain());
        parallel_for(count, [&](std::size_t k) {
          Rng r = rng.split({stream::kOracle, 7, k});
          Vector x(y.size());
          for (Eigen::Index j = 0; j < y.size(); ++j)
            x[j] = sample_truncated_normal((y[j] - px->offset()) / px->gain(), sd, 0.0, 1.0, r);
          out[k] = std::move(x);
        });
        return out;
      }
      break;
    }
    case OracleKind::kMcmcReference:
      return slcp_reference_posterior(problem.observations, count, rng.split({stream::kOracle, 8}),
                                      opts.mcmc)
          .samples;
    case OracleKind::kAbcReference:
      return two_moons_abc_reference(problem.observations.front(), count,
                                     rng.split({stream::kOracle, 9}), opts.abc);
    case OracleKind::kAnalyticMean:
      throw CapabilityError("problem '" + problem.id +
                            "' has an analytic posterior mean only; no sampler");
    case OracleKind::kNone:
      break;
  }
  throw CapabilityError("problem '" + problem.id + "' has no ground-truth sampler");
}

}  // namespace omc
