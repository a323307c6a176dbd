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

// Hyperbox surrogates for acceptance regions: eigen-axis frame from J^T J,
// per-direction extents from a step-halving line search, and the uniform
// distribution over the resulting oriented box.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "omc/core.hpp"

namespace omc {

struct EigenAxes {
  Matrix axes;         // columns are orthonormal eigenvectors
  Vector eigenvalues;  // descending
  bool converged = true;
  // J^T J was identically zero; the identity frame was used.
  bool degenerate = false;

  bool fallback() const noexcept { return !converged || degenerate; }
};

struct JacobiOptions {
  double tolerance = 1e-10;
  std::size_t max_sweeps = 100;
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix.
inline EigenAxes symmetric_eigen(Matrix a, const JacobiOptions& opts = {}) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n) throw SchemaError("symmetric_eigen: matrix must be square");
  EigenAxes out;
  Matrix v = Matrix::Identity(n, n);

  const double scale = std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
  const double tol = opts.tolerance * scale;
  auto max_offdiag = [&] {
    double m = 0.0;
    for (Eigen::Index q = 1; q < n; ++q)
      for (Eigen::Index p = 0; p < q; ++p) m = std::max(m, std::abs(a(p, q)));
    return m;
  };

  if (a.cwiseAbs().maxCoeff() == 0.0) {
    out.degenerate = true;
  } else {
    out.converged = false;
    for (std::size_t sweep = 0; sweep < opts.max_sweeps; ++sweep) {
      if (max_offdiag() < tol) {
        out.converged = true;
        break;
      }
      for (Eigen::Index p = 0; p < n - 1; ++p) {
        for (Eigen::Index q = p + 1; q < n; ++q) {
          const double apq = a(p, q);
          if (std::abs(apq) < 1e-3 * tol) continue;
          const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
          const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::hypot(theta, 1.0));
          const double c = 1.0 / std::sqrt(t * t + 1.0);
          const double s = t * c;
          double* colp = a.col(p).data();
          double* colq = a.col(q).data();
          for (Eigen::Index k = 0; k < n; ++k) {
            const double akp = colp[k], akq = colq[k];
            colp[k] = c * akp - s * akq;
            colq[k] = s * akp + c * akq;
          }
          for (Eigen::Index k = 0; k < n; ++k) {
            const double apk = a(p, k), aqk = a(q, k);
            a(p, k) = c * apk - s * aqk;
            a(q, k) = s * apk + c * aqk;
          }
          double* vp = v.col(p).data();
          double* vq = v.col(q).data();
          for (Eigen::Index k = 0; k < n; ++k) {
            const double x = vp[k], y = vq[k];
            vp[k] = c * x - s * y;
            vq[k] = s * x + c * y;
          }
        }
      }
    }
    if (!out.converged && max_offdiag() < tol) out.converged = true;
  }

  if (!out.converged || out.degenerate) {
    out.axes = Matrix::Identity(n, n);
    out.eigenvalues = out.degenerate ? Vector::Zero(n) : Vector(a.diagonal());
    return out;
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x) > a(y, y); });
  out.axes.resize(n, n);
  out.eigenvalues.resize(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const Eigen::Index src = order[static_cast<std::size_t>(c)];
    Vector col = v.col(src);
    for (Eigen::Index k = 0; k < n; ++k) {
      if (std::abs(col[k]) > 1e-12) {
        if (col[k] < 0.0) col = -col;
        break;
      }
    }
    out.axes.col(c) = col;
    out.eigenvalues[c] = a(src, src);
  }
  return out;
}

// Eigenvectors of J^T J; J is D_y x D.
inline EigenAxes eigen_axes(const Matrix& jac, const JacobiOptions& opts = {}) {
  if (!jac.allFinite()) throw SchemaError("eigen_axes: Jacobian has non-finite entries");
  Matrix jtj = jac.transpose() * jac;
  return symmetric_eigen(std::move(jtj), opts);
}

struct LineSearchParams {
  double step = 0.1;           // eta
  std::size_t max_steps = 100;  // L
  std::size_t refinements = 1;  // R

  void validate() const {
    detail::require(step > 0.0, "line search: step must be positive");
    detail::require(max_steps >= 1, "line search: max_steps must be >= 1");
    detail::require(refinements >= 1, "line search: refinements must be >= 1");
  }

  // Smallest resolvable extent, eta * 2^-R.
  double floor() const { return std::ldexp(step, -static_cast<int>(refinements)); }
};

using DistanceFn = std::function<double(const Vector&)>;

// Relative slack on the threshold test so that a point whose distance equals
// epsilon up to round-off counts as inside the (closed) acceptance region.
inline constexpr double kThresholdSlack = 1e-12;

// Walks from center along direction until the distance exceeds epsilon or L
// steps are taken, steps back, halves the step and repeats; one coarse pass
// followed by R refinement passes. Returns the distance walked, floored at
// eta * 2^-R. When pass_steps is given, the number of distance evaluations of
// each pass is appended to it.
inline double directional_endpoint(const DistanceFn& d_fn, const Vector& center,
                                   const Vector& direction, const LineSearchParams& params,
                                   double epsilon, std::vector<std::size_t>* pass_steps = nullptr) {
  params.validate();
  detail::require(epsilon > 0.0, "line search: epsilon must be positive");
  const double limit = epsilon * (1.0 + kThresholdSlack);
  double offset = 0.0;
  double step = params.step;
  Vector probe(center.size());
  for (std::size_t pass = 0; pass <= params.refinements; ++pass) {
    std::size_t l = 0;
    for (;;) {
      ++l;
      offset += step;
      probe = center + offset * direction;
      if (d_fn(probe) > limit || l == params.max_steps) break;
    }
    if (pass_steps) pass_steps->push_back(l);
    offset -= step;
    step *= 0.5;
  }
  return std::max(offset, params.floor());
}

class Hyperbox {
 public:
  Hyperbox() = default;
  Hyperbox(ParamVector center, Matrix axes, Vector lower_extent, Vector upper_extent)
      : center_(std::move(center)),
        axes_(std::move(axes)),
        lower_(std::move(lower_extent)),
        upper_(std::move(upper_extent)) {
    const auto d = center_.size();
    if (axes_.rows() != d || axes_.cols() != d || lower_.size() != d || upper_.size() != d)
      throw SchemaError("hyperbox: inconsistent dimensions");
    if ((lower_.array() <= 0.0).any() || (upper_.array() <= 0.0).any())
      throw SchemaError("hyperbox: extents must be positive");
    log_volume_ = (lower_ + upper_).array().log().sum();
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(center_.size()); }
  const ParamVector& center() const noexcept { return center_; }
  const Matrix& axes() const noexcept { return axes_; }
  // Extent along -v_d.
  const Vector& lower_extent() const noexcept { return lower_; }
  // Extent along +v_d.
  const Vector& upper_extent() const noexcept { return upper_; }
  double log_volume() const noexcept { return log_volume_; }
  double volume() const noexcept { return std::exp(log_volume_); }

  // Closed box: faces count as inside.
  bool contains(const ParamVector& theta) const {
    if (theta.size() != center_.size()) throw SchemaError("hyperbox: dimension mismatch");
    const Vector local = axes_.transpose() * (theta - center_);
    return (local.array() >= -lower_.array()).all() && (local.array() <= upper_.array()).all();
  }

  double log_density(const ParamVector& theta) const {
    return contains(theta) ? -log_volume_ : -std::numeric_limits<double>::infinity();
  }
  double density(const ParamVector& theta) const { return std::exp(log_density(theta)); }

  ParamVector sample(Rng& rng) const {
    Vector local(center_.size());
    for (Eigen::Index d = 0; d < local.size(); ++d) local[d] = rng.uniform(-lower_[d], upper_[d]);
    return center_ + axes_ * local;
  }

  bool eigen_fallback = false;

 private:
  ParamVector center_;
  Matrix axes_;
  Vector lower_;
  Vector upper_;
  double log_volume_ = 0.0;
};

// Steps per (direction, pass), directions ordered +v_0, -v_0, +v_1, ...
using LineSearchTrace = std::vector<std::size_t>;

inline Hyperbox build_hyperbox(const DistanceFn& d_fn, const ParamVector& center,
                               const EigenAxes& frame, const LineSearchParams& params,
                               double epsilon, LineSearchTrace* trace = nullptr) {
  const auto dim = center.size();
  if (frame.axes.rows() != dim || frame.axes.cols() != dim)
    throw SchemaError("build_hyperbox: axis frame does not match the parameter dimension");
  Vector lower(dim), upper(dim);
  for (Eigen::Index d = 0; d < dim; ++d) {
    const Vector v = frame.axes.col(d);
    upper[d] = directional_endpoint(d_fn, center, v, params, epsilon, trace);
    lower[d] = directional_endpoint(d_fn, center, -v, params, epsilon, trace);
  }
  Hyperbox box(center, frame.axes, std::move(lower), std::move(upper));
  box.eigen_fallback = frame.fallback();
  return box;
}

inline Hyperbox build_hyperbox(const DistanceFn& d_fn, const ParamVector& center,
                               const Matrix& jac, const LineSearchParams& params, double epsilon) {
  return build_hyperbox(d_fn, center, eigen_axes(jac), params, epsilon);
}

}  // namespace omc
