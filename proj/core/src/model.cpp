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

#include "xairan/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "xairan/errors.hpp"

namespace xairan {
namespace {

Matrix apply_activation(Activation act, const Matrix& z) {
  switch (act) {
    case Activation::kTanh:
      return z.array().tanh().matrix();
    case Activation::kIdentity:
      return z;
  }
  return z;
}

// Accumulates d(head)/d(theta) and d(head)/d(input) scaled by `dout`.
Gradients backward_scaled(const ModelParams& p, const ForwardCache& c, double dout) {
  const auto w = static_cast<Eigen::Index>(c.window());
  const auto h = static_cast<Eigen::Index>(p.hidden());
  require(c.pre.rows() == w && c.pre.cols() == h && c.input.cols() == p.embed_w.cols() &&
              c.attention.size() == w && c.context.size() == h,
          "backward: cache does not match parameters");

  Gradients g;
  g.params = ModelParams::zeros(p.features(), p.hidden());
  g.params.activation = p.activation;

  const Vector dctx = dout * p.out_w;
  g.params.out_w = dout * c.context;
  g.params.out_b = dout;

  // d head / d a_t = dctx . u_t, then through the softmax Jacobian.
  const Vector da = c.act * dctx;
  const double weighted = c.attention.dot(da);
  const Vector ds = c.attention.cwiseProduct(da.array().matrix() - Vector::Constant(w, weighted));

  // d head / d u_t = a_t dctx + ds_t v.
  Matrix du = c.attention * dctx.transpose() + ds * p.attn_v.transpose();
  g.params.attn_v = c.act.transpose() * ds;

  Matrix dz = du;
  if (p.activation == Activation::kTanh) {
    dz = du.cwiseProduct((1.0 - c.act.array().square()).matrix());
  }
  g.params.embed_w = dz.transpose() * c.input;
  g.params.embed_b = dz.colwise().sum().transpose();
  g.input = dz * p.embed_w;
  return g;
}

void check_finite(const Matrix& m, const char* name) {
  require(m.allFinite(), std::string("ModelParams: non-finite ") + name);
}

}  // namespace

ModelParams ModelParams::zeros(std::size_t features, std::size_t hidden) {
  const auto n = static_cast<Eigen::Index>(features);
  const auto h = static_cast<Eigen::Index>(hidden);
  ModelParams p;
  p.embed_w = Matrix::Zero(h, n);
  p.embed_b = Vector::Zero(h);
  p.attn_v = Vector::Zero(h);
  p.out_w = Vector::Zero(h);
  p.out_b = 0.0;
  return p;
}

ModelParams ModelParams::init(std::size_t features, std::size_t hidden, std::uint64_t seed) {
  ModelParams p = zeros(features, hidden);
  std::mt19937_64 rng(seed);
  const auto fill = [&rng](auto& m, std::size_t fan_in) {
    const double bound = 0.5 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = dist(rng);
    }
  };
  fill(p.embed_w, features);
  fill(p.attn_v, hidden);
  fill(p.out_w, hidden);
  return p;
}

void ModelParams::validate() const {
  const auto h = embed_w.rows();
  require(h > 0 && embed_w.cols() > 0, "ModelParams: empty embedding");
  require(embed_b.size() == h && attn_v.size() == h && out_w.size() == h,
          "ModelParams: hidden dimension mismatch");
  check_finite(embed_w, "embed_w");
  check_finite(embed_b, "embed_b");
  check_finite(attn_v, "attn_v");
  check_finite(out_w, "out_w");
  require(std::isfinite(out_b), "ModelParams: non-finite out_b");
}

bool operator==(const ModelParams& a, const ModelParams& b) {
  return a.activation == b.activation && a.out_b == b.out_b && a.embed_w == b.embed_w &&
         a.embed_b == b.embed_b && a.attn_v == b.attn_v && a.out_w == b.out_w;
}

Normalizer Normalizer::identity(std::size_t features) {
  Normalizer n;
  n.mean = Vector::Zero(static_cast<Eigen::Index>(features));
  n.std = Vector::Ones(static_cast<Eigen::Index>(features));
  return n;
}

Normalizer Normalizer::fit(std::span<const Matrix> inputs, std::span<const double> targets) {
  require(!inputs.empty(), "Normalizer::fit: no inputs");
  const auto n = inputs.front().cols();
  Vector sum = Vector::Zero(n);
  Vector sq = Vector::Zero(n);
  double rows = 0.0;
  for (const auto& x : inputs) {
    require(x.cols() == n, "Normalizer::fit: inconsistent feature count");
    sum += x.colwise().sum().transpose();
    sq += x.array().square().matrix().colwise().sum().transpose();
    rows += static_cast<double>(x.rows());
  }
  Normalizer out;
  out.mean = sum / rows;
  out.std = (sq / rows - out.mean.array().square().matrix()).cwiseMax(0.0).cwiseSqrt();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(out.std(i) > 1e-12)) out.std(i) = 1.0;
  }

  if (!targets.empty()) {
    const double count = static_cast<double>(targets.size());
    const double mean = std::accumulate(targets.begin(), targets.end(), 0.0) / count;
    double var = 0.0;
    for (double t : targets) var += (t - mean) * (t - mean);
    var /= count;
    out.target_mean = mean;
    out.target_std = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  return out;
}

Matrix Normalizer::normalize(const Matrix& raw) const {
  require(raw.cols() == mean.size(), "Normalizer: feature count mismatch");
  Matrix out = raw;
  for (Eigen::Index i = 0; i < raw.cols(); ++i) {
    out.col(i) = (raw.col(i).array() - mean(i)) / std(i);
  }
  return out;
}

bool operator==(const Normalizer& a, const Normalizer& b) {
  return a.mean == b.mean && a.std == b.std && a.target_mean == b.target_mean &&
         a.target_std == b.target_std;
}

ForwardCache forward(const ModelParams& params, const Matrix& input, const Normalizer& norm) {
  require(input.rows() > 0, "forward: empty input");
  require(input.cols() == params.embed_w.cols(), "forward: input has wrong feature count");
  require(norm.mean.size() == input.cols(), "forward: normalizer has wrong feature count");
  require(params.embed_b.size() == params.embed_w.rows() &&
              params.attn_v.size() == params.embed_w.rows() &&
              params.out_w.size() == params.embed_w.rows(),
          "forward: parameter dimensions inconsistent");

  ForwardCache c;
  c.input = input;
  c.pre = input * params.embed_w.transpose();
  c.pre.rowwise() += params.embed_b.transpose();
  c.act = apply_activation(params.activation, c.pre);
  c.logits = c.act * params.attn_v;

  const double peak = c.logits.maxCoeff();
  c.attention = (c.logits.array() - peak).exp().matrix();
  c.attention /= c.attention.sum();

  c.context = c.act.transpose() * c.attention;
  c.head = params.out_w.dot(c.context) + params.out_b;
  c.prediction = norm.denormalize_target(c.head);
  c.output_scale = norm.target_std;
  return c;
}

ForwardCache forward(const ModelParams& params, const KpmWindow& window, const Normalizer& norm) {
  return forward(params, norm.normalize(window), norm);
}

double predict(const ModelParams& params, const Matrix& input, const Normalizer& norm) {
  return forward(params, input, norm).prediction;
}

Gradients backward(const ModelParams& params, const ForwardCache& cache) {
  return backward_scaled(params, cache, cache.output_scale);
}

Matrix input_gradient(const ModelParams& params, const ForwardCache& cache) {
  return backward_scaled(params, cache, cache.output_scale).input;
}

double forward_masked(const ModelParams& params, const Matrix& input, const Normalizer& norm,
                      std::span<const Cell> keep, const Matrix& baseline) {
  require(baseline.rows() == input.rows() && baseline.cols() == input.cols(),
          "forward_masked: baseline shape differs from input");
  Matrix masked = baseline;
  for (const Cell& cell : keep) {
    require(cell.t < static_cast<std::size_t>(input.rows()) &&
                cell.i < static_cast<std::size_t>(input.cols()),
            "forward_masked: cell index out of range");
    const auto t = static_cast<Eigen::Index>(cell.t);
    const auto i = static_cast<Eigen::Index>(cell.i);
    masked(t, i) = input(t, i);
  }
  return predict(params, masked, norm);
}

namespace {

void axpy(ModelParams& acc, double scale, const ModelParams& g) {
  acc.embed_w += scale * g.embed_w;
  acc.embed_b += scale * g.embed_b;
  acc.attn_v += scale * g.attn_v;
  acc.out_w += scale * g.out_w;
  acc.out_b += scale * g.out_b;
}

double mse(const ModelParams& p, std::span<const Matrix> xs, std::span<const double> ys,
           const Normalizer& norm) {
  double total = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const double err = forward(p, xs[j], norm).head - ys[j];
    total += err * err;
  }
  return total / static_cast<double>(xs.size());
}

}  // namespace

TrainedModel train(std::span<const Matrix> inputs, std::span<const double> targets,
                   const TrainConfig& config) {
  require(inputs.size() == targets.size(), "train: inputs and targets differ in length");
  if (!(config.train_frac > 0.0 && config.train_frac < 1.0)) {
    throw ConfigError("train_frac must be in (0, 1)");
  }
  if (!(config.lr > 0.0)) throw ConfigError("lr must be > 0");
  if (config.hidden == 0) throw ConfigError("hidden must be >= 1");

  const auto n_train = static_cast<std::size_t>(std::floor(config.train_frac * inputs.size()));
  const std::size_t n_val = inputs.size() - n_train;
  if (n_train == 0 || n_val == 0) {
    throw SizeError("train: need at least one training and one validation window, got " +
                    std::to_string(inputs.size()));
  }

  TrainedModel out;
  out.norm = Normalizer::fit(inputs.first(n_train), targets.first(n_train));
  const std::size_t n_features = static_cast<std::size_t>(inputs.front().cols());
  if (config.target_feature) {
    require(*config.target_feature < n_features, "train: target_feature out of range");
    const auto col = static_cast<Eigen::Index>(*config.target_feature);
    out.norm.target_mean = out.norm.mean(col);
    out.norm.target_std = out.norm.std(col);
  }

  std::vector<Matrix> xs;
  std::vector<double> ys;
  xs.reserve(inputs.size());
  ys.reserve(inputs.size());
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    xs.push_back(out.norm.normalize(inputs[j]));
    ys.push_back(out.norm.normalize_target(targets[j]));
  }
  const std::span<const Matrix> train_x(xs.data(), n_train);
  const std::span<const double> train_y(ys.data(), n_train);
  const std::span<const Matrix> val_x(xs.data() + n_train, n_val);
  const std::span<const double> val_y(ys.data() + n_train, n_val);

  ModelParams params = ModelParams::init(n_features, config.hidden, config.seed);
  ModelParams velocity = ModelParams::zeros(n_features, config.hidden);
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  const std::size_t batch = config.batch_size == 0 ? n_train : config.batch_size;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (batch < n_train) std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t begin = 0; begin < n_train; begin += batch) {
      const std::size_t end = std::min(n_train, begin + batch);
      ModelParams grad = ModelParams::zeros(n_features, config.hidden);
      for (std::size_t b = begin; b < end; ++b) {
        const std::size_t j = order[b];
        const ForwardCache cache = forward(params, train_x[j], out.norm);
        const double residual = cache.head - train_y[j];
        axpy(grad, 1.0, backward_scaled(params, cache, 2.0 * residual).params);
      }
      const double inv = 1.0 / static_cast<double>(end - begin);
      // velocity = momentum * velocity + grad; theta -= lr * velocity
      velocity.embed_w = config.momentum * velocity.embed_w + inv * grad.embed_w;
      velocity.embed_b = config.momentum * velocity.embed_b + inv * grad.embed_b;
      velocity.attn_v = config.momentum * velocity.attn_v + inv * grad.attn_v;
      velocity.out_w = config.momentum * velocity.out_w + inv * grad.out_w;
      velocity.out_b = config.momentum * velocity.out_b + inv * grad.out_b;
      axpy(params, -config.lr, velocity);
    }

    EpochStats stats{epoch + 1, mse(params, train_x, train_y, out.norm),
                     mse(params, val_x, val_y, out.norm)};
    if (!std::isfinite(stats.train_mse) || !std::isfinite(stats.val_mse)) {
      std::ostringstream msg;
      msg << "training diverged at epoch " << stats.epoch << " (lr=" << config.lr << ")";
      throw DivergenceError(msg.str());
    }
    out.report.epochs.push_back(stats);
  }

  double sse = 0.0;
  double mean = 0.0;
  for (std::size_t j = n_train; j < inputs.size(); ++j) mean += targets[j];
  mean /= static_cast<double>(n_val);
  double sst = 0.0;
  for (std::size_t j = 0; j < n_val; ++j) {
    const double pred = forward(params, val_x[j], out.norm).prediction;
    const double target = targets[n_train + j];
    sse += (pred - target) * (pred - target);
    sst += (target - mean) * (target - mean);
  }
  out.report.train_windows = n_train;
  out.report.val_windows = n_val;
  out.report.val_rmse = std::sqrt(sse / static_cast<double>(n_val));
  out.report.val_r2 = sst > 0.0 ? 1.0 - sse / sst : (sse == 0.0 ? 1.0 : 0.0);
  out.params = std::move(params);
  return out;
}

TrainedModel train(std::span<const KpmSample> trace, std::size_t window, std::size_t horizon,
                   const TrainConfig& config) {
  const auto pairs = window_iter(trace, window, horizon);
  std::vector<Matrix> inputs;
  std::vector<double> targets;
  inputs.reserve(pairs.size());
  targets.reserve(pairs.size());
  for (const auto& p : pairs) {
    inputs.push_back(p.window.to_matrix());
    targets.push_back(p.target);
  }
  TrainConfig cfg = config;
  cfg.target_feature = static_cast<std::size_t>(Feature::kTh);
  return train(inputs, targets, cfg);
}

}  // namespace xairan
