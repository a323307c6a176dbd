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

// Benchmark problems: a simulator, its observations and the kind of
// ground-truth oracle available for it, addressable by string id.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "omc/core.hpp"
#include "omc/simulators.hpp"

namespace omc {

enum class OracleKind { kClosedForm, kMcmcReference, kAbcReference, kAnalyticMean, kNone };

inline const char* to_string(OracleKind k) {
  switch (k) {
    case OracleKind::kClosedForm: return "closed_form";
    case OracleKind::kMcmcReference: return "mcmc_reference";
    case OracleKind::kAbcReference: return "abc_reference";
    case OracleKind::kAnalyticMean: return "analytic_mean";
    case OracleKind::kNone: return "none";
  }
  return "none";
}

struct BenchmarkProblem {
  std::string id;
  SimulatorPtr simulator;
  std::vector<OutputVector> observations;
  OracleKind ground_truth = OracleKind::kNone;
  // Parameter that generated the observations, when they were simulated.
  std::optional<ParamVector> theta_true;

  const Simulator& sim() const { return *simulator; }
  const PriorBox& prior() const { return simulator->prior(); }
  std::size_t dim() const { return simulator->param_dim(); }

  void validate() const {
    if (!simulator) throw ConfigError("problem '" + id + "' has no simulator");
    if (observations.empty()) throw ConfigError("problem '" + id + "' has no observation");
    for (const auto& y : observations) {
      if (static_cast<std::size_t>(y.size()) != simulator->output_dim())
        throw SchemaError("problem '" + id + "': observation length does not match D_y");
      if (!y.allFinite()) throw SchemaError("problem '" + id + "': observation is not finite");
    }
  }
};

struct ProblemOptions {
  std::size_t dim = 2;                  // MoG only
  std::uint64_t observation_seed = 1;   // simulated observations
  std::size_t slcp_observations = 4;
  double pixel_gain = 0.8;
  double pixel_bias = 0.1;
  double image_noise_sd = 0.1;
  std::size_t image_height = 28;
  std::size_t image_width = 28;
  // Clean image for the camera problems, row-major in [0, 1]. Empty means the
  // built-in synthetic digit.
  std::vector<double> image;
};

inline const std::vector<std::string>& problem_ids() {
  static const std::vector<std::string> ids = {"mog_base", "mog_base_dist", "mog_two",
                                               "mog_two_dist", "slcp", "slcp_dist",
                                               "two_moons", "img_pixel", "img_checker"};
  return ids;
}

inline bool problem_has_dim(const std::string& id) { return id.rfind("mog_", 0) == 0; }

namespace detail {

inline BenchmarkProblem make_mog(const std::string& id, std::size_t dim, bool two, bool dist) {
  detail::require(dim >= 1, "mog: D must be >= 1");
  BenchmarkProblem p;
  p.id = id;
  p.simulator = std::make_shared<MogSimulator>(dim, two, dist);
  p.observations = {OutputVector::Zero(static_cast<Eigen::Index>(p.simulator->output_dim()))};
  p.ground_truth = OracleKind::kClosedForm;
  return p;
}

inline std::vector<OutputVector> simulate_observations(const Simulator& sim, const ParamVector& theta,
                                                       std::size_t count, std::uint64_t seed) {
  const Rng root(seed);
  std::vector<OutputVector> out;
  for (std::size_t n = 0; n < count; ++n) {
    Rng r = root.split({stream::kObservation, n});
    out.push_back(sim.simulate(theta, sim.sample_noise(r)));
  }
  return out;
}

}  // namespace detail

inline BenchmarkProblem make_mog_base(std::size_t dim) {
  return detail::make_mog("mog_base", dim, false, false);
}
inline BenchmarkProblem make_mog_base_distractors(std::size_t dim) {
  return detail::make_mog("mog_base_dist", dim, false, true);
}
inline BenchmarkProblem make_mog_two(std::size_t dim) {
  return detail::make_mog("mog_two", dim, true, false);
}
inline BenchmarkProblem make_mog_two_distractors(std::size_t dim) {
  return detail::make_mog("mog_two_dist", dim, true, true);
}

inline ParamVector slcp_theta_true() {
  ParamVector t(5);
  t << 0.7, -2.9, -1.0, -0.9, 0.6;
  return t;
}

// Each observation is one 2-d draw (plus distractors); the default four
// observations together form one draw of the full four-draw model.
inline BenchmarkProblem make_slcp(bool distractors = false, std::uint64_t seed = 1,
                                  std::size_t n_obs = 4) {
  detail::require(n_obs >= 1, "slcp: need at least one observation");
  BenchmarkProblem p;
  p.id = distractors ? "slcp_dist" : "slcp";
  p.simulator = std::make_shared<SlcpSimulator>(distractors, 1);
  p.theta_true = slcp_theta_true();
  p.observations = detail::simulate_observations(*p.simulator, *p.theta_true, n_obs, seed);
  p.ground_truth = OracleKind::kMcmcReference;
  return p;
}
inline BenchmarkProblem make_slcp_distractors(std::uint64_t seed = 1, std::size_t n_obs = 4) {
  return make_slcp(true, seed, n_obs);
}

inline ParamVector two_moons_theta_true() {
  ParamVector t(2);
  t << 0.2, 0.4;
  return t;
}

inline BenchmarkProblem make_two_moons(std::uint64_t seed = 1) {
  BenchmarkProblem p;
  p.id = "two_moons";
  p.simulator = std::make_shared<TwoMoonsSimulator>();
  p.theta_true = two_moons_theta_true();
  p.observations = detail::simulate_observations(*p.simulator, *p.theta_true, 1, seed);
  p.ground_truth = OracleKind::kAbcReference;
  return p;
}

// Handwritten-looking "3" drawn with anti-aliased strokes on a black
// background, values in [0, 1].
inline std::vector<double> synthetic_digit(std::size_t height = 28, std::size_t width = 28) {
  std::vector<double> img(height * width, 0.0);
  const double sy = static_cast<double>(height) / 28.0;
  const double sx = static_cast<double>(width) / 28.0;
  const double half_width = 1.3 * std::min(sx, sy);
  // Distance from a pixel centre to the stroke decides its intensity.
  auto arc = [](double px, double py, double cx, double cy, double rad, double a0, double a1) {
    double a = std::atan2(py - cy, px - cx);
    if (a < a0) a += 2.0 * std::numbers::pi;
    if (a >= a0 && a <= a1) return std::abs(std::hypot(px - cx, py - cy) - rad);
    const double d0 = std::hypot(px - cx - rad * std::cos(a0), py - cy - rad * std::sin(a0));
    const double d1 = std::hypot(px - cx - rad * std::cos(a1), py - cy - rad * std::sin(a1));
    return std::min(d0, d1);
  };
  const double pi = std::numbers::pi;
  for (std::size_t i = 0; i < height; ++i)
    for (std::size_t j = 0; j < width; ++j) {
      const double y = (static_cast<double>(i) + 0.5) / sy;
      const double x = (static_cast<double>(j) + 0.5) / sx;
      const double d = std::min(arc(x, y, 13.5, 9.0, 5.0, -pi, 0.5 * pi),
                                arc(x, y, 13.5, 18.5, 5.5, -0.5 * pi, pi));
      const double v = std::clamp(1.0 - (d * std::min(sx, sy) - half_width) / 1.0, 0.0, 1.0);
      img[i * width + j] = (d * std::min(sx, sy) <= half_width) ? 1.0 : v * v;
    }
  return img;
}

namespace detail {

inline BenchmarkProblem make_image(const std::string& id, SimulatorPtr sim, const ProblemOptions& o,
                                   OracleKind oracle) {
  const auto& cam = static_cast<const ImageSimulator&>(*sim);
  std::vector<double> img = o.image.empty() ? synthetic_digit(cam.height(), cam.width()) : o.image;
  if (img.size() != sim->param_dim())
    throw ConfigError("image problem: clean image has " + std::to_string(img.size()) +
                      " pixels, expected " + std::to_string(sim->param_dim()));
  for (double& v : img) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
      throw ConfigError("image problem: clean image values must lie in [0, 1]");
  }
  BenchmarkProblem p;
  p.id = id;
  p.simulator = std::move(sim);
  p.theta_true = Eigen::Map<const Vector>(img.data(), static_cast<Eigen::Index>(img.size()));
  p.observations = simulate_observations(*p.simulator, *p.theta_true, 1, o.observation_seed);
  p.ground_truth = oracle;
  return p;
}

}  // namespace detail

inline BenchmarkProblem make_image_pixelwise(const ProblemOptions& o = {}) {
  auto sim = std::make_shared<PixelwiseCamera>(o.pixel_gain, o.pixel_bias, o.image_noise_sd,
                                               o.image_height, o.image_width);
  return detail::make_image("img_pixel", std::move(sim), o, OracleKind::kClosedForm);
}

inline BenchmarkProblem make_image_checkerboard(const ProblemOptions& o = {}) {
  auto sim = std::make_shared<CheckerboardCamera>(o.image_noise_sd, o.image_height, o.image_width);
  return detail::make_image("img_checker", std::move(sim), o, OracleKind::kAnalyticMean);
}

inline BenchmarkProblem make_problem(const std::string& id, const ProblemOptions& o = {}) {
  BenchmarkProblem p;
  if (id == "mog_base") p = make_mog_base(o.dim);
  else if (id == "mog_base_dist") p = make_mog_base_distractors(o.dim);
  else if (id == "mog_two") p = make_mog_two(o.dim);
  else if (id == "mog_two_dist") p = make_mog_two_distractors(o.dim);
  else if (id == "slcp") p = make_slcp(false, o.observation_seed, o.slcp_observations);
  else if (id == "slcp_dist") p = make_slcp(true, o.observation_seed, o.slcp_observations);
  else if (id == "two_moons") p = make_two_moons(o.observation_seed);
  else if (id == "img_pixel") p = make_image_pixelwise(o);
  else if (id == "img_checker") p = make_image_checkerboard(o);
  else throw ConfigError("unknown problem id '" + id + "'");
  p.validate();
  return p;
}

}  // namespace omc
