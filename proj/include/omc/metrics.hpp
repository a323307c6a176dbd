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

// Classifier two-sample test on a small two-hidden-layer ReLU network.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "omc/core.hpp"
#include "omc/parallel.hpp"

namespace omc {

struct ClassifierConfig {
  std::size_t width = 20;
  std::size_t epochs = 100;
  double learning_rate = 1e-3;
  std::size_t batch_size = 128;  // even, so batches hold whole (x, y) pairs
  std::uint64_t seed = 0;

  void validate() const {
    detail::require(width >= 1, "classifier: width must be >= 1");
    detail::require(epochs >= 1, "classifier: epochs must be >= 1");
    detail::require(learning_rate > 0.0, "classifier: learning rate must be positive");
    detail::require(batch_size >= 2 && batch_size % 2 == 0, "classifier: batch size must be even");
  }
};

// Rows of `features` are observations.
class MlpClassifier {
 public:
  MlpClassifier() = default;
  MlpClassifier(std::size_t inputs, std::size_t width, Rng& rng) {
    const auto in = static_cast<Eigen::Index>(inputs), w = static_cast<Eigen::Index>(width);
    auto he = [&](Eigen::Index rows, Eigen::Index cols) {
      const double bound = std::sqrt(6.0 / static_cast<double>(cols));
      Matrix m(rows, cols);
      for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(-bound, bound);
      return m;
    };
    w1_ = he(w, in);
    b1_ = Vector::Zero(w);
    w2_ = he(w, w);
    b2_ = Vector::Zero(w);
    // A zero output layer makes training equivariant under label swap.
    w3_ = Vector::Zero(w);
    b3_ = 0.0;
  }

  std::size_t inputs() const noexcept { return static_cast<std::size_t>(w1_.cols()); }

  // Logits for each row.
  Vector logits(const Matrix& features) const {
    Matrix h1 = ((w1_ * features.transpose()).colwise() + b1_).cwiseMax(0.0);
    Matrix h2 = ((w2_ * h1).colwise() + b2_).cwiseMax(0.0);
    return (w3_.transpose() * h2).transpose().array() + b3_;
  }

  Vector predict_proba(const Matrix& features) const {
    return logits(features).unaryExpr([](double z) { return 1.0 / (1.0 + std::exp(-z)); });
  }

  std::vector<int> classify(const Matrix& features) const {
    const Vector z = logits(features);
    std::vector<int> out(static_cast<std::size_t>(z.size()));
    for (Eigen::Index k = 0; k < z.size(); ++k) out[static_cast<std::size_t>(k)] = z[k] > 0.0 ? 1 : 0;
    return out;
  }

  // Mean binary cross-entropy on the batch; adds the gradient scaled by 1/B
  // into the accumulators.
  struct Grad {
    Matrix w1, w2;
    Vector b1, b2, w3;
    double b3 = 0.0;
  };

  double loss_and_grad(const Matrix& x, const Vector& y, Grad& g) const {
    const double inv_b = 1.0 / static_cast<double>(x.rows());
    const Matrix xt = x.transpose();
    const Matrix a1 = (w1_ * xt).colwise() + b1_;
    const Matrix h1 = a1.cwiseMax(0.0);
    const Matrix a2 = (w2_ * h1).colwise() + b2_;
    const Matrix h2 = a2.cwiseMax(0.0);
    const Vector z = (w3_.transpose() * h2).transpose().array() + b3_;
    double loss = 0.0;
    Vector dz(z.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) {
      // log(1 + exp(-|z|)) + max(z, 0) - y z, stable for large |z|.
      loss += std::log1p(std::exp(-std::abs(z[k]))) + std::max(z[k], 0.0) - y[k] * z[k];
      dz[k] = (1.0 / (1.0 + std::exp(-z[k])) - y[k]) * inv_b;
    }
    g.w3 = h2 * dz;
    g.b3 = dz.sum();
    Matrix d2 = (w3_ * dz.transpose()).cwiseProduct((a2.array() > 0.0).cast<double>().matrix());
    g.w2 = d2 * h1.transpose();
    g.b2 = d2.rowwise().sum();
    Matrix d1 = (w2_.transpose() * d2).cwiseProduct((a1.array() > 0.0).cast<double>().matrix());
    g.w1 = d1 * x;
    g.b1 = d1.rowwise().sum();
    return loss * inv_b;
  }

  Matrix w1_, w2_;
  Vector b1_, b2_, w3_;
  double b3_ = 0.0;
};

struct TrainedClassifier {
  MlpClassifier model;
  std::vector<double> loss_history;  // mean training loss per epoch
  bool diverged = false;
};

// Adam on binary cross-entropy. Rows are visited in pairs (2k, 2k + 1), so a
// caller that interleaves the two classes gets batches invariant to a label
// swap.
inline TrainedClassifier train_classifier(const Matrix& features, const std::vector<int>& labels,
                                          const ClassifierConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(features.rows());
  detail::require(n >= 2 && labels.size() == n, "train_classifier: need matching features and labels");
  Rng rng(cfg.seed);
  Rng init = rng.split({stream::kC2st, 0});
  TrainedClassifier out{MlpClassifier(static_cast<std::size_t>(features.cols()), cfg.width, init), {}, false};
  MlpClassifier& m = out.model;

  struct Moments {
    Matrix w1, w2;
    Vector b1, b2, w3;
    double b3 = 0.0;
  } mom, vel;
  auto zero_like = [&](Moments& s) {
    s.w1 = Matrix::Zero(m.w1_.rows(), m.w1_.cols());
    s.w2 = Matrix::Zero(m.w2_.rows(), m.w2_.cols());
    s.b1 = Vector::Zero(m.b1_.size());
    s.b2 = Vector::Zero(m.b2_.size());
    s.w3 = Vector::Zero(m.w3_.size());
    s.b3 = 0.0;
  };
  zero_like(mom);
  zero_like(vel);
  constexpr double kB1 = 0.9, kB2 = 0.999, kEps = 1e-8;
  double p1 = 1.0, p2 = 1.0;

  auto step = [&](auto& param, auto& m1, auto& m2, const auto& g, double lr_t, double eps_t) {
    m1 = kB1 * m1 + (1.0 - kB1) * g;
    m2 = kB2 * m2 + (1.0 - kB2) * g.cwiseAbs2();
    param.array() -= lr_t * m1.array() / (m2.array().sqrt() + eps_t);
  };

  const std::size_t pairs = n / 2;
  std::vector<std::size_t> order(pairs);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t pairs_per_batch = cfg.batch_size / 2;
  MlpClassifier::Grad g;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle = rng.split({stream::kC2st, 1, epoch});
    for (std::size_t k = pairs; k > 1; --k) std::swap(order[k - 1], order[shuffle.below(k)]);
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < pairs; start += pairs_per_batch) {
      const std::size_t stop = std::min(pairs, start + pairs_per_batch);
      const auto rows = static_cast<Eigen::Index>(2 * (stop - start));
      Matrix xb(rows, features.cols());
      Vector yb(rows);
      Eigen::Index r = 0;
      for (std::size_t q = start; q < stop; ++q)
        for (std::size_t s = 0; s < 2; ++s, ++r) {
          const auto src = static_cast<Eigen::Index>(2 * order[q] + s);
          xb.row(r) = features.row(src);
          yb[r] = labels[static_cast<std::size_t>(src)];
        }
      const double loss = m.loss_and_grad(xb, yb, g);
      if (!std::isfinite(loss)) {
        out.diverged = true;
        return out;
      }
      epoch_loss += loss * static_cast<double>(rows);
      seen += static_cast<std::size_t>(rows);
      p1 *= kB1;
      p2 *= kB2;
      const double lr_t = cfg.learning_rate * std::sqrt(1.0 - p2) / (1.0 - p1);
      const double eps_t = kEps * std::sqrt(1.0 - p2);
      step(m.w1_, mom.w1, vel.w1, g.w1, lr_t, eps_t);
      step(m.w2_, mom.w2, vel.w2, g.w2, lr_t, eps_t);
      step(m.b1_, mom.b1, vel.b1, g.b1, lr_t, eps_t);
      step(m.b2_, mom.b2, vel.b2, g.b2, lr_t, eps_t);
      step(m.w3_, mom.w3, vel.w3, g.w3, lr_t, eps_t);
      mom.b3 = kB1 * mom.b3 + (1.0 - kB1) * g.b3;
      vel.b3 = kB2 * vel.b3 + (1.0 - kB2) * g.b3 * g.b3;
      m.b3_ -= lr_t * mom.b3 / (std::sqrt(vel.b3) + eps_t);
    }
    out.loss_history.push_back(epoch_loss / static_cast<double>(seen));
  }
  return out;
}

inline std::vector<int> classify(const MlpClassifier& model, const Matrix& features) {
  return model.classify(features);
}

struct C2stConfig {
  std::size_t folds = 5;
  std::size_t epochs = 100;
  double learning_rate = 1e-3;
  std::size_t width = 0;      // 0: 10 x input dimension, capped
  std::size_t max_width = 128;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;

  void validate() const {
    detail::require(folds >= 2, "c2st: folds must be >= 2");
    detail::require(epochs >= 1, "c2st: epochs must be >= 1");
    detail::require(max_width >= 1, "c2st: width must be >= 1");
  }
};

struct C2stScore {
  double value = 0.5;
  std::vector<double> per_fold;
  std::vector<std::string> warnings;
};

class DegenerateFeaturesError : public Error {
 public:
  using Error::Error;
};

inline Matrix to_matrix(const std::vector<ParamVector>& rows) {
  detail::require(!rows.empty(), "to_matrix: empty sample set");
  Matrix m(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) throw SchemaError("to_matrix: ragged sample set");
    m.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
  }
  return m;
}

// Held-out accuracy of classifiers telling X (label 0) from Y (label 1).
inline C2stScore c2st(const Matrix& x, const Matrix& y, const C2stConfig& cfg = {}) {
  cfg.validate();
  if (x.rows() != y.rows()) throw ConfigError("c2st: sample sets must have equal size");
  if (x.rows() < 100) throw ConfigError("c2st: need at least 100 samples per set");
  if (x.cols() != y.cols()) throw SchemaError("c2st: sample sets differ in dimension");
  const Eigen::Index n = x.rows();

  // Joint standardization; features constant across both sets are dropped.
  Matrix pooled(2 * n, x.cols());
  pooled << x, y;
  std::vector<Eigen::Index> keep;
  Vector mean(x.cols()), sd(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    mean[j] = pooled.col(j).mean();
    sd[j] = std::sqrt((pooled.col(j).array() - mean[j]).square().sum() / static_cast<double>(2 * n));
    if (sd[j] > 0.0 && std::isfinite(sd[j])) keep.push_back(j);
  }
  if (keep.empty()) throw DegenerateFeaturesError("c2st: every feature has zero variance");
  const auto d = static_cast<Eigen::Index>(keep.size());
  // Interleaved rows: 2k is x_k, 2k + 1 is y_k.
  Matrix feats(2 * n, d);
  std::vector<int> labels(static_cast<std::size_t>(2 * n));
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index c = 0; c < d; ++c) {
      const Eigen::Index j = keep[static_cast<std::size_t>(c)];
      feats(2 * k, c) = (x(k, j) - mean[j]) / sd[j];
      feats(2 * k + 1, c) = (y(k, j) - mean[j]) / sd[j];
    }
    labels[static_cast<std::size_t>(2 * k)] = 0;
    labels[static_cast<std::size_t>(2 * k + 1)] = 1;
  }

  // Stratified folds: the same permutation assigns x_k and y_k to one fold.
  Rng root(cfg.seed);
  Rng perm_rng = root.split({stream::kC2st, 2});
  std::vector<std::size_t> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t k = perm.size(); k > 1; --k) std::swap(perm[k - 1], perm[perm_rng.below(k)]);
  std::vector<std::size_t> fold_of(perm.size());
  for (std::size_t r = 0; r < perm.size(); ++r) fold_of[perm[r]] = r % cfg.folds;

  ClassifierConfig cc;
  cc.width = cfg.width ? cfg.width : std::min<std::size_t>(cfg.max_width, 10 * static_cast<std::size_t>(d));
  cc.epochs = cfg.epochs;
  cc.learning_rate = cfg.learning_rate;
  cc.batch_size = cfg.batch_size;

  C2stScore score;
  score.per_fold.assign(cfg.folds, 0.5);
  std::vector<std::string> fold_warning(cfg.folds);
  parallel_for(cfg.folds, [&](std::size_t f) {
    std::vector<Eigen::Index> train, test;
    for (Eigen::Index k = 0; k < n; ++k) {
      auto& dst = fold_of[static_cast<std::size_t>(k)] == f ? test : train;
      dst.push_back(2 * k);
      dst.push_back(2 * k + 1);
    }
    Matrix xtr(static_cast<Eigen::Index>(train.size()), d), xte(static_cast<Eigen::Index>(test.size()), d);
    std::vector<int> ytr(train.size()), yte(test.size());
    for (std::size_t r = 0; r < train.size(); ++r) {
      xtr.row(static_cast<Eigen::Index>(r)) = feats.row(train[r]);
      ytr[r] = labels[static_cast<std::size_t>(train[r])];
    }
    for (std::size_t r = 0; r < test.size(); ++r) {
      xte.row(static_cast<Eigen::Index>(r)) = feats.row(test[r]);
      yte[r] = labels[static_cast<std::size_t>(test[r])];
    }
    ClassifierConfig fc = cc;
    fc.seed = mix_key(cfg.seed, {stream::kC2st, 3, f});
    TrainedClassifier trained = train_classifier(xtr, ytr, fc);
    if (trained.diverged) {
      fold_warning[f] = "fold " + std::to_string(f) + ": non-finite loss, scored 0.5";
      return;
    }
    const std::vector<int> pred = trained.model.classify(xte);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < pred.size(); ++r) hits += pred[r] == yte[r];
    score.per_fold[f] = static_cast<double>(hits) / static_cast<double>(pred.size());
  });
  for (auto& w : fold_warning)
    if (!w.empty()) score.warnings.push_back(std::move(w));
  score.value = std::accumulate(score.per_fold.begin(), score.per_fold.end(), 0.0) /
                static_cast<double>(score.per_fold.size());
  return score;
}

inline C2stScore c2st(const std::vector<ParamVector>& x, const std::vector<ParamVector>& y,
                      const C2stConfig& cfg = {}) {
  return c2st(to_matrix(x), to_matrix(y), cfg);
}

}  // namespace omc
