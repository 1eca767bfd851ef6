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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "xairan/trace.hpp"
#include "xairan/types.hpp"

namespace xairan {

// Hidden-unit nonlinearity. kIdentity exists for linear test models, where
// every attribution method has a closed form.
enum class Activation { kTanh, kIdentity };

// Embedding -> activation -> additive attention over timesteps -> linear head.
struct ModelParams {
  Matrix embed_w;   // hidden x features
  Vector embed_b;   // hidden
  Vector attn_v;    // hidden
  Vector out_w;     // hidden
  double out_b = 0.0;
  Activation activation = Activation::kTanh;

  std::size_t hidden() const { return static_cast<std::size_t>(embed_w.rows()); }
  std::size_t features() const { return static_cast<std::size_t>(embed_w.cols()); }

  static ModelParams zeros(std::size_t features, std::size_t hidden);
  // uniform(-0.5/sqrt(fan_in), +0.5/sqrt(fan_in)) for weights; zero biases.
  static ModelParams init(std::size_t features, std::size_t hidden, std::uint64_t seed);

  // Throws ContractViolation on inconsistent dimensions or non-finite entries.
  void validate() const;

  friend bool operator==(const ModelParams&, const ModelParams&);
};

// z-score statistics for inputs and the throughput target.
struct Normalizer {
  Vector mean;
  Vector std;
  double target_mean = 0.0;
  double target_std = 1.0;

  static Normalizer identity(std::size_t features);
  // Fits on raw W x n input rows and targets; constant features get std 1.
  static Normalizer fit(std::span<const Matrix> inputs, std::span<const double> targets);

  std::size_t features() const { return static_cast<std::size_t>(mean.size()); }
  Matrix normalize(const Matrix& raw) const;
  Matrix normalize(const KpmWindow& window) const { return normalize(window.to_matrix()); }
  double denormalize_target(double value) const { return value * target_std + target_mean; }
  double normalize_target(double value) const { return (value - target_mean) / target_std; }

  friend bool operator==(const Normalizer&, const Normalizer&);
};

// Everything forward() computed that backward() needs.
struct ForwardCache {
  Matrix input;       // normalized input, W x n
  Matrix pre;         // z_t, W x hidden
  Matrix act;         // u_t = act(z_t), W x hidden
  Vector logits;      // s_t, W
  Vector attention;   // a_t = softmax(s)_t, W
  Vector context;     // c, hidden
  double head = 0.0;  // out_w . c + out_b, normalized target units
  double prediction = 0.0;  // head de-normalized, Mbps
  double output_scale = 1.0;  // d prediction / d head

  std::size_t window() const { return static_cast<std::size_t>(input.rows()); }
};

// Forward pass on an already-normalized W x n input.
ForwardCache forward(const ModelParams& params, const Matrix& input, const Normalizer& norm);
ForwardCache forward(const ModelParams& params, const KpmWindow& window, const Normalizer& norm);

// Prediction only; skips nothing numerically, but avoids keeping the cache.
double predict(const ModelParams& params, const Matrix& input, const Normalizer& norm);

struct Gradients {
  Matrix input;        // d prediction / d normalized input, W x n
  ModelParams params;  // d prediction / d theta
};

// Exact reverse-mode gradients of the prediction (Mbps) given a cache
// produced by forward() with the same params.
Gradients backward(const ModelParams& params, const ForwardCache& cache);

// Input gradient only.
Matrix input_gradient(const ModelParams& params, const ForwardCache& cache);

// Prediction on the input with every cell outside `keep` replaced by
// baseline(t, i). Both matrices are in normalized space.
double forward_masked(const ModelParams& params, const Matrix& input, const Normalizer& norm,
                      std::span<const Cell> keep, const Matrix& baseline);

struct TrainConfig {
  std::size_t hidden = 16;
  double lr = 0.01;
  double momentum = 0.9;
  std::size_t epochs = 200;
  std::size_t batch_size = 0;  // 0: full batch
  std::uint64_t seed = 42;
  double train_frac = 0.8;
  // When set, target normalization reuses this input column's statistics
  // instead of the targets' own.
  std::optional<std::size_t> target_feature;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_mse = 0.0;  // normalized target units
  double val_mse = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::size_t train_windows = 0;
  std::size_t val_windows = 0;
  double val_rmse = 0.0;  // Mbps
  double val_r2 = 0.0;    // prediction vs target on the validation split
};

struct TrainedModel {
  ModelParams params;
  Normalizer norm;
  TrainReport report;
};

// Generic trainer over raw W x n inputs and raw targets. The split is
// chronological: the first train_frac of the examples are used for fitting.
// Throws SizeError if either split is empty and DivergenceError on a
// non-finite loss.
TrainedModel train(std::span<const Matrix> inputs, std::span<const double> targets,
                   const TrainConfig& config);

// Windows the trace and trains a next-step throughput predictor.
TrainedModel train(std::span<const KpmSample> trace, std::size_t window, std::size_t horizon,
                   const TrainConfig& config);

}  // namespace xairan
