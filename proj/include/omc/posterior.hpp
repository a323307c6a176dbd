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

// Mixture-of-hyperboxes proposal and importance weighting over several
// i.i.d. observations:
//
//   q(theta) = 1/K sum_k U_box_k(theta)
//   w_p      = p(theta_p) / q(theta_p) * prod_n #{accepted i : d_i^n(theta_p) <= eps}
//
// Densities and weights are carried in log space; box volumes in a few
// hundred dimensions under- or overflow a double.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <ostream>
#include <vector>

#include "omc/core.hpp"
#include "omc/format.hpp"
#include "omc/optimize.hpp"
#include "omc/parallel.hpp"
#include "omc/regions.hpp"

namespace omc {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_sum_exp(const std::vector<double>& xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

struct ProposalComponent {
  Hyperbox box;
  std::size_t obs_index = 0;
  std::size_t seed_index = 0;
};

class ProposalMixture {
 public:
  ProposalMixture() = default;
  explicit ProposalMixture(std::vector<ProposalComponent> components)
      : components_(std::move(components)) {
    if (components_.empty()) throw InferenceError("proposal mixture needs at least one box");
    const std::size_t dim = components_.front().box.dim();
    for (const auto& c : components_)
      if (c.box.dim() != dim) throw SchemaError("proposal mixture: boxes differ in dimension");
    // Boxes sharing an identical axis frame are projected once per query.
    for (std::size_t k = 0; k < components_.size(); ++k) {
      const Matrix& axes = components_[k].box.axes();
      std::size_t f = 0;
      for (; f < frames_.size(); ++f)
        if (frames_[f].rows() == axes.rows() && frames_[f] == axes) break;
      if (f == frames_.size()) {
        frames_.push_back(axes);
        frame_is_identity_.push_back(axes.isIdentity(0.0));
      }
      frame_of_.push_back(f);
      projected_center_.push_back(frame_is_identity_[f] ? Vector(components_[k].box.center())
                                                        : Vector(axes.transpose() *
                                                                 components_[k].box.center()));
    }
  }

  std::size_t size() const noexcept { return components_.size(); }
  std::size_t dim() const noexcept { return components_.front().box.dim(); }
  const std::vector<ProposalComponent>& components() const noexcept { return components_; }
  double log_component_weight() const { return -std::log(static_cast<double>(size())); }

  // Indices of every component whose box contains theta.
  std::vector<std::size_t> containing(const ParamVector& theta) const {
    std::vector<Vector> projected(frames_.size());
    for (std::size_t f = 0; f < frames_.size(); ++f)
      projected[f] = frame_is_identity_[f] ? theta : Vector(frames_[f].transpose() * theta);
    std::vector<std::size_t> hits;
    for (std::size_t k = 0; k < components_.size(); ++k) {
      const Hyperbox& box = components_[k].box;
      const Vector& x = projected[frame_of_[k]];
      const Vector& c = projected_center_[k];
      bool inside = true;
      for (Eigen::Index d = 0; d < x.size() && inside; ++d) {
        const double local = x[d] - c[d];
        inside = local >= -box.lower_extent()[d] && local <= box.upper_extent()[d];
      }
      if (inside) hits.push_back(k);
    }
    return hits;
  }

  double log_density(const ParamVector& theta) const {
    std::vector<double> terms;
    for (std::size_t k : containing(theta))
      terms.push_back(log_component_weight() - components_[k].box.log_volume());
    return log_sum_exp(terms);
  }

  double density(const ParamVector& theta) const { return std::exp(log_density(theta)); }

 private:
  std::vector<ProposalComponent> components_;
  std::vector<Matrix> frames_;
  std::vector<bool> frame_is_identity_;
  std::vector<std::size_t> frame_of_;
  std::vector<Vector> projected_center_;
};

// Equal-weight mixture over the boxes of accepted records only.
inline ProposalMixture build_proposal(const std::vector<OptimizationRecord>& records,
                                      const std::vector<Hyperbox>& boxes) {
  if (records.size() != boxes.size())
    throw SchemaError("build_proposal: need exactly one box per record");
  std::vector<ProposalComponent> comps;
  for (std::size_t k = 0; k < records.size(); ++k)
    if (records[k].accepted) comps.push_back({boxes[k], records[k].obs_index, records[k].seed_index});
  if (comps.empty()) throw InferenceError("build_proposal: no accepted box");
  return ProposalMixture(std::move(comps));
}

inline double proposal_density(const ProposalMixture& mix, const ParamVector& theta) {
  return mix.density(theta);
}

// Component uniformly at random, then a uniform point inside its box.
inline std::vector<ParamVector> sample_proposal(const ProposalMixture& mix, std::size_t count,
                                                const Rng& rng) {
  detail::require(count >= 1, "sample_proposal: need at least one draw");
  std::vector<ParamVector> out(count);
  for (std::size_t p = 0; p < count; ++p) {
    Rng r = rng.split({stream::kProposal, p});
    const std::size_t k = r.below(mix.size());
    out[p] = mix.components()[k].box.sample(r);
  }
  return out;
}

enum class IndicatorMode {
  kSimulate,  // re-simulate g(theta, u_{i,n}) and compare to epsilon
  kHyperbox,  // use box membership as a surrogate for the acceptance region
};

// Accepted seeds of each observation, in ascending seed order.
inline std::vector<std::vector<std::size_t>> accepted_seeds(
    const std::vector<OptimizationRecord>& records, std::size_t n_obs) {
  std::vector<std::vector<std::size_t>> out(n_obs);
  for (const auto& r : records)
    if (r.accepted && r.obs_index < n_obs) out[r.obs_index].push_back(r.seed_index);
  for (auto& v : out) std::sort(v.begin(), v.end());
  return out;
}

// count_n = number of accepted seeds i with d_i^n(theta) <= epsilon, by direct
// simulation.
inline std::vector<std::size_t> region_counts(const Simulator& sim, const ParamVector& theta,
                                              const NoiseTable& noise,
                                              const std::vector<OutputVector>& observations,
                                              double epsilon, const Mask& mask,
                                              const std::vector<std::vector<std::size_t>>& accepted) {
  detail::require(epsilon > 0.0, "region_counts: epsilon must be positive");
  check_mask(mask, sim.output_dim());
  if (noise.size() != observations.size() || accepted.size() != observations.size())
    throw SchemaError("region_counts: noise table, accepted sets and observations disagree");
  std::vector<std::size_t> counts(observations.size(), 0);
  const double limit = epsilon * (1.0 + kThresholdSlack);
  Vector y;
  for (std::size_t n = 0; n < observations.size(); ++n) {
    for (std::size_t i : accepted[n]) {
      sim.simulate(theta, noise[n][i], y);
      if (masked_squared_distance(y, observations[n], mask) <= limit) ++counts[n];
    }
  }
  return counts;
}

inline std::vector<std::size_t> region_counts_surrogate(const ProposalMixture& mix,
                                                        const ParamVector& theta,
                                                        std::size_t n_obs) {
  std::vector<std::size_t> counts(n_obs, 0);
  for (std::size_t k : mix.containing(theta)) {
    const std::size_t n = mix.components()[k].obs_index;
    if (n < n_obs) ++counts[n];
  }
  return counts;
}

struct WeightedSample {
  ParamVector theta;
  double log_proposal_density = kNegInf;
  double log_prior_density = kNegInf;
  std::vector<std::size_t> region_counts;
  double log_weight = kNegInf;

  double proposal_density() const { return std::exp(log_proposal_density); }
  double prior_density() const { return std::exp(log_prior_density); }
  double weight() const { return std::exp(log_weight); }
};

inline double log_weight_of(double log_prior, double log_proposal,
                            const std::vector<std::size_t>& counts) {
  if (log_prior == kNegInf) return kNegInf;
  double lw = log_prior - log_proposal;
  for (std::size_t c : counts) {
    if (c == 0) return kNegInf;
    lw += std::log(static_cast<double>(c));
  }
  return lw;
}

// counts[p] must hold the per-observation region counts of samples[p].
inline std::vector<WeightedSample> compute_weights(const std::vector<ParamVector>& samples,
                                                   const PriorBox& prior, const ProposalMixture& mix,
                                                   const std::vector<std::vector<std::size_t>>& counts) {
  if (samples.size() != counts.size())
    throw SchemaError("compute_weights: one count vector per sample required");
  std::vector<WeightedSample> out(samples.size());
  parallel_for(samples.size(), [&](std::size_t p) {
    WeightedSample& ws = out[p];
    ws.theta = samples[p];
    ws.log_proposal_density = mix.log_density(samples[p]);
    if (ws.log_proposal_density == kNegInf)
      throw InferenceError("compute_weights: a proposal draw has zero proposal density");
    ws.log_prior_density = prior.contains(samples[p]) ? -prior.log_volume() : kNegInf;
    ws.region_counts = counts[p];
    ws.log_weight = log_weight_of(ws.log_prior_density, ws.log_proposal_density, counts[p]);
  });
  return out;
}

// Weights rescaled so the largest is 1; all zeros when every weight is zero.
inline std::vector<double> relative_weights(const std::vector<WeightedSample>& samples) {
  double m = kNegInf;
  for (const auto& s : samples) m = std::max(m, s.log_weight);
  std::vector<double> w(samples.size(), 0.0);
  if (m == kNegInf) return w;
  for (std::size_t p = 0; p < samples.size(); ++p) w[p] = std::exp(samples[p].log_weight - m);
  return w;
}

inline double effective_sample_size(const std::vector<double>& weights) {
  double s = 0.0, s2 = 0.0;
  for (double w : weights) {
    s += w;
    s2 += w * w;
  }
  return s2 > 0.0 ? s * s / s2 : 0.0;
}

inline double effective_sample_size(const std::vector<WeightedSample>& samples) {
  return effective_sample_size(relative_weights(samples));
}

class ZeroWeightsError : public InferenceError {
 public:
  ZeroWeightsError()
      : InferenceError(
            "every importance weight is zero; increase the weighting epsilon or the number of "
            "candidate draws") {}
};

// Multinomial resampling with replacement, probability proportional to w_p.
inline std::vector<ParamVector> resample(const std::vector<WeightedSample>& samples,
                                         std::size_t count, const Rng& rng) {
  const auto w = relative_weights(samples);
  std::vector<double> cdf(w.size());
  double acc = 0.0;
  for (std::size_t p = 0; p < w.size(); ++p) cdf[p] = (acc += w[p]);
  if (!(acc > 0.0)) throw ZeroWeightsError();
  std::vector<ParamVector> out(count);
  Rng r = rng.split({stream::kResample});
  for (std::size_t m = 0; m < count; ++m) {
    const double u = r.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t idx = static_cast<std::size_t>(it - cdf.begin());
    if (idx >= cdf.size()) idx = cdf.size() - 1;
    // Skip zero-weight entries that share the cumulative value.
    while (w[idx] == 0.0 && idx + 1 < cdf.size()) ++idx;
    out[m] = samples[idx].theta;
  }
  return out;
}

inline double posterior_expectation(const std::vector<WeightedSample>& samples,
                                    const std::function<double(const ParamVector&)>& h) {
  const auto w = relative_weights(samples);
  double num = 0.0, den = 0.0;
  for (std::size_t p = 0; p < samples.size(); ++p) {
    if (w[p] == 0.0) continue;
    num += w[p] * h(samples[p].theta);
    den += w[p];
  }
  if (!(den > 0.0)) throw ZeroWeightsError();
  return num / den;
}

inline void write_weighted_csv(std::ostream& os, const std::vector<WeightedSample>& samples) {
  if (samples.empty()) {
    os << "q,p,w,log_q,log_w\n";
    return;
  }
  const auto dim = samples.front().theta.size();
  const std::size_t n_obs = samples.front().region_counts.size();
  for (Eigen::Index j = 0; j < dim; ++j) os << "theta_" << j << ',';
  os << "q,p";
  for (std::size_t n = 0; n < n_obs; ++n) os << ",count_" << n;
  os << ",w,log_q,log_w\n";
  for (const auto& s : samples) {
    for (Eigen::Index j = 0; j < dim; ++j) os << fmt_double(s.theta[j]) << ',';
    os << fmt_double(s.proposal_density()) << ',' << fmt_double(s.prior_density());
    for (std::size_t c : s.region_counts) os << ',' << c;
    os << ',' << fmt_double(s.weight()) << ',' << fmt_double(s.log_proposal_density) << ','
       << fmt_double(s.log_weight) << '\n';
  }
}

inline void write_samples_csv(std::ostream& os, const std::vector<ParamVector>& samples) {
  if (samples.empty()) return;
  const auto dim = samples.front().size();
  for (Eigen::Index j = 0; j < dim; ++j) os << (j ? "," : "") << "theta_" << j;
  os << '\n';
  for (const auto& s : samples) {
    for (Eigen::Index j = 0; j < dim; ++j) os << (j ? "," : "") << fmt_double(s[j]);
    os << '\n';
  }
}

}  // namespace omc
