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

// Distractor detection: an output dimension k is informative when the Monte
// Carlo mean of ||grad_theta g_k(theta, u)|| over prior and noise draws
// exceeds a threshold tau.

#include <limits>
#include <vector>

#include "omc/core.hpp"
#include "omc/parallel.hpp"

namespace omc {

struct MaskOptions {
  std::size_t n_theta = 50;
  std::size_t n_noise = 50;
  double tau = std::numeric_limits<double>::epsilon();
};

// Never looks at observed data; only the prior and the noise distribution.
inline Mask compute_mask(const Simulator& sim, const MaskOptions& opts, const Rng& rng) {
  detail::require(opts.n_theta >= 1, "mask: n_theta must be >= 1");
  detail::require(opts.n_noise >= 1, "mask: n_noise must be >= 1");
  detail::require(opts.tau >= 0.0, "mask: tau must be >= 0");

  std::vector<Vector> thetas(opts.n_theta);
  for (std::size_t j = 0; j < opts.n_theta; ++j) {
    Rng r = rng.split({stream::kMask, 0, j});
    thetas[j] = sim.prior().sample(r);
  }
  std::vector<NoiseDraw> noises(opts.n_noise);
  for (std::size_t l = 0; l < opts.n_noise; ++l) {
    Rng r = rng.split({stream::kMask, 1, l});
    noises[l] = sim.sample_noise(r);
  }

  const auto dy = static_cast<Eigen::Index>(sim.output_dim());
  // One row-norm vector per noise draw, each summed over all thetas.
  std::vector<Vector> partial(opts.n_noise, Vector::Zero(dy));
  parallel_for(opts.n_noise, [&](std::size_t l) {
    for (std::size_t j = 0; j < opts.n_theta; ++j) {
      const Matrix jac = sim.jacobian(thetas[j], noises[l]);
      partial[l] += jac.rowwise().norm();
    }
  });

  Vector total = Vector::Zero(dy);
  for (const auto& p : partial) total += p;
  total /= static_cast<double>(opts.n_theta * opts.n_noise);

  Mask mask;
  mask.threshold = opts.tau;
  mask.estimates.assign(total.data(), total.data() + total.size());
  mask.active.resize(static_cast<std::size_t>(dy));
  for (Eigen::Index k = 0; k < dy; ++k) mask.active[static_cast<std::size_t>(k)] = total[k] > opts.tau;
  return mask;
}

}  // namespace omc
