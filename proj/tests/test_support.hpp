/*
 * Copyright 2026 The xairan Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "xairan/model.hpp"
#include "xairan/trace.hpp"

namespace xairan::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                            double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index j = 0; j < m.size(); ++j) m.data()[j] = g(rng);
  return m;
}

// Random tanh model with weights large enough to be visibly nonlinear.
inline ModelParams random_params(std::size_t features, std::size_t hidden, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.8);
  ModelParams p = ModelParams::zeros(features, hidden);
  for (Eigen::Index j = 0; j < p.embed_w.size(); ++j) p.embed_w.data()[j] = g(rng);
  for (Eigen::Index j = 0; j < p.embed_b.size(); ++j) p.embed_b(j) = 0.3 * g(rng);
  for (Eigen::Index j = 0; j < p.attn_v.size(); ++j) p.attn_v(j) = g(rng);
  for (Eigen::Index j = 0; j < p.out_w.size(); ++j) p.out_w(j) = g(rng);
  p.out_b = g(rng);
  return p;
}

// Identity activation with attn_v = 0: attention is uniform and the
// prediction is an affine function of the input.
inline ModelParams linear_params(std::size_t features, std::size_t hidden, std::uint64_t seed) {
  ModelParams p = random_params(features, hidden, seed);
  p.activation = Activation::kIdentity;
  p.attn_v.setZero();
  return p;
}

// d prediction / d x(t, i) of the linear model: target_std * out_w^T E / W.
inline Matrix linear_effective_weights(const ModelParams& p, const Normalizer& norm,
                                       std::size_t window) {
  const Eigen::RowVectorXd per_feature = p.out_w.transpose() * p.embed_w;
  Matrix w(static_cast<Eigen::Index>(window), per_feature.size());
  for (Eigen::Index t = 0; t < w.rows(); ++t) {
    w.row(t) = per_feature * norm.target_std / static_cast<double>(window);
  }
  return w;
}

// Scalar-loop recomputation of the forward formula, independent of the
// Eigen implementation.
inline double forward_by_hand(const ModelParams& p, const Matrix& x, const Normalizer& norm) {
  const auto w = static_cast<std::size_t>(x.rows());
  const auto n = static_cast<std::size_t>(x.cols());
  const std::size_t h = p.hidden();
  std::vector<std::vector<double>> u(w, std::vector<double>(h));
  std::vector<double> s(w, 0.0);
  for (std::size_t t = 0; t < w; ++t) {
    for (std::size_t k = 0; k < h; ++k) {
      double z = p.embed_b(static_cast<Eigen::Index>(k));
      for (std::size_t i = 0; i < n; ++i) {
        z += p.embed_w(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) *
             x(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i));
      }
      u[t][k] = p.activation == Activation::kTanh ? std::tanh(z) : z;
      s[t] += p.attn_v(static_cast<Eigen::Index>(k)) * u[t][k];
    }
  }
  double denom = 0.0;
  for (double v : s) denom += std::exp(v);
  double y = p.out_b;
  for (std::size_t k = 0; k < h; ++k) {
    double c = 0.0;
    for (std::size_t t = 0; t < w; ++t) c += std::exp(s[t]) / denom * u[t][k];
    y += p.out_w(static_cast<Eigen::Index>(k)) * c;
  }
  return y * norm.target_std + norm.target_mean;
}

// Central finite differences of the prediction w.r.t. every input cell.
inline Matrix finite_difference_gradient(const ModelParams& p, const Matrix& x,
                                         const Normalizer& norm, double step = 1e-4) {
  Matrix g(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Matrix xp = x;
    Matrix xm = x;
    xp.data()[j] += step;
    xm.data()[j] -= step;
    g.data()[j] = (predict(p, xp, norm) - predict(p, xm, norm)) / (2.0 * step);
  }
  return g;
}

// Relative error with an absolute floor so exactly-zero entries compare.
inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// The default-configuration model on the default trace, trained once per
// test binary.
struct DefaultSetup {
  std::vector<KpmSample> trace;
  std::vector<WindowTarget> windows;
  TrainedModel model;
};

inline const DefaultSetup& default_setup() {
  static const DefaultSetup setup = [] {
    DefaultSetup s;
    s.trace = generate_trace(BurstConfig{});
    s.windows = window_iter(s.trace, kDefaultWindow, 1);
    s.model = train(s.trace, kDefaultWindow, 1, TrainConfig{});
    return s;
  }();
  return setup;
}

// A small tanh model fit to a nonlinear function of a 2 x 2 input.
inline TrainedModel toy_model_2x2() {
  std::vector<Matrix> inputs;
  std::vector<double> targets;
  for (std::uint64_t s = 0; s < 400; ++s) {
    Matrix x = random_matrix(2, 2, 50000 + s);
    inputs.push_back(x);
    targets.push_back(2.0 * std::tanh(x(0, 0) * x(1, 1)) + x(0, 1) - 0.5 * x(1, 0) * x(1, 0));
  }
  TrainConfig cfg;
  cfg.hidden = 6;
  cfg.epochs = 300;
  cfg.lr = 0.05;
  return train(inputs, targets, cfg);
}

}  // namespace xairan::testing
