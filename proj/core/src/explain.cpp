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

#include "xairan/explain.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "xairan/errors.hpp"

namespace xairan {
namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ns(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
}

void check_shapes(const ExplainInput& in) {
  require(in.input.rows() > 0 && in.input.cols() > 0, "explain: empty input");
  require(in.baseline.rows() == in.input.rows() && in.baseline.cols() == in.input.cols(),
          "explain: baseline shape differs from input");
}

// (x - b) times the midpoint-rule average of the input gradient along the
// straight path from b to x.
Matrix integrated_gradients(const ModelParams& params, const Normalizer& norm, const Matrix& input,
                            const Matrix& baseline, int k) {
  if (k < 1) throw ConfigError("k must be >= 1, got " + std::to_string(k));
  const Matrix delta = input - baseline;
  Matrix grad_sum = Matrix::Zero(input.rows(), input.cols());
  for (int j = 1; j <= k; ++j) {
    const double alpha = (static_cast<double>(j) - 0.5) / static_cast<double>(k);
    const ForwardCache cache = forward(params, baseline + alpha * delta, norm);
    grad_sum += input_gradient(params, cache);
  }
  return delta.cwiseProduct(grad_sum) / static_cast<double>(k);
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kNone:
      return "none";
    case Method::kAttention:
      return "attention";
    case Method::kIg:
      return "ig";
    case Method::kShap:
      return "shap";
    case Method::kHybrid:
      return "hybrid";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Method m : {Method::kNone, Method::kAttention, Method::kIg, Method::kShap, Method::kHybrid}) {
    if (lower == to_string(m)) return m;
  }
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

BaselineSpec BaselineSpec::custom(Matrix normalized) {
  return BaselineSpec(Kind::kCustom, std::move(normalized));
}

BaselineSpec BaselineSpec::parse(std::string_view name) {
  if (name == "normalized-zero") return normalized_zero();
  if (name == "raw-zero") return raw_zero();
  throw ConfigError("unknown baseline '" + std::string(name) + "'");
}

std::string BaselineSpec::id() const {
  switch (kind_) {
    case Kind::kNormalizedZero:
      return "normalized-zero";
    case Kind::kRawZero:
      return "raw-zero";
    case Kind::kCustom:
      return "custom";
  }
  return "unknown";
}

Matrix BaselineSpec::resolve(const Normalizer& norm, std::size_t window) const {
  const auto w = static_cast<Eigen::Index>(window);
  const auto n = static_cast<Eigen::Index>(norm.features());
  switch (kind_) {
    case Kind::kNormalizedZero:
      return Matrix::Zero(w, n);
    case Kind::kRawZero:
      return norm.normalize(Matrix::Zero(w, n));
    case Kind::kCustom:
      require(custom_.rows() == w && custom_.cols() == n, "BaselineSpec: custom baseline shape");
      return custom_;
  }
  return Matrix::Zero(w, n);
}

ExplainInput ExplainInput::from_window(const KpmWindow& window, const Normalizer& norm,
                                       const BaselineSpec& baseline) {
  return from_matrix(norm.normalize(window), norm, baseline);
}

ExplainInput ExplainInput::from_matrix(Matrix normalized_input, const Normalizer& norm,
                                       const BaselineSpec& baseline) {
  ExplainInput in;
  in.baseline = baseline.resolve(norm, static_cast<std::size_t>(normalized_input.rows()));
  in.input = std::move(normalized_input);
  in.baseline_id = baseline.id();
  return in;
}

Attribution explain_attention(const ForwardCache& cache) {
  const auto start = Clock::now();
  const auto w = cache.attention.size();
  const auto n = cache.input.cols();
  require(w > 0 && cache.input.rows() == w, "explain_attention: incomplete forward cache");

  Attribution out;
  out.method = Method::kAttention;
  out.e.resize(w, n);
  for (Eigen::Index t = 0; t < w; ++t) {
    out.e.row(t).setConstant(cache.attention(t) / static_cast<double>(n));
  }
  out.meta.prediction = cache.prediction;
  out.meta.attention = cache.attention;
  out.meta.wallclock_ns = elapsed_ns(start);
  return out;
}

Attribution explain_ig(const ModelParams& params, const Normalizer& norm, const ExplainInput& in,
                       int k) {
  check_shapes(in);
  if (k < 1) throw ConfigError("k must be >= 1, got " + std::to_string(k));
  const auto start = Clock::now();
  Attribution out;
  out.method = Method::kIg;
  out.meta.prediction = predict(params, in.input, norm);
  out.e = integrated_gradients(params, norm, in.input, in.baseline, k);
  out.meta.k_or_m = k;
  out.meta.baseline = in.baseline_id;
  out.meta.forward_evals = static_cast<std::size_t>(k) + 1;
  out.meta.backward_evals = static_cast<std::size_t>(k);
  out.meta.wallclock_ns = elapsed_ns(start);
  return out;
}

Attribution explain_ig(const ModelParams& params, const KpmWindow& window, const Normalizer& norm,
                       const BaselineSpec& baseline, int k) {
  return explain_ig(params, norm, ExplainInput::from_window(window, norm, baseline), k);
}

Attribution explain_shap(const ModelParams& params, const Normalizer& norm, const ExplainInput& in,
                         int m, std::uint64_t seed) {
  check_shapes(in);
  if (m < 1) throw ConfigError("m must be >= 1, got " + std::to_string(m));
  const auto start = Clock::now();
  const auto d = static_cast<std::size_t>(in.input.size());
  const auto cols = in.input.cols();

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(d);
  std::vector<double> sum(d, 0.0);
  std::vector<double> sum_sq(d, 0.0);
  const double base_value = predict(params, in.baseline, norm);
  Matrix z;

  for (int sample = 0; sample < m; ++sample) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    z = in.baseline;
    double prev = base_value;
    for (std::size_t cell : order) {
      const auto t = static_cast<Eigen::Index>(cell) / cols;
      const auto i = static_cast<Eigen::Index>(cell) % cols;
      z(t, i) = in.input(t, i);
      const double cur = predict(params, z, norm);
      const double credit = cur - prev;
      sum[cell] += credit;
      sum_sq[cell] += credit * credit;
      prev = cur;
    }
  }

  Attribution out;
  out.method = Method::kShap;
  out.e.resize(in.input.rows(), cols);
  Matrix se(in.input.rows(), cols);
  const double mm = static_cast<double>(m);
  for (std::size_t cell = 0; cell < d; ++cell) {
    const auto t = static_cast<Eigen::Index>(cell) / cols;
    const auto i = static_cast<Eigen::Index>(cell) % cols;
    const double mean = sum[cell] / mm;
    out.e(t, i) = mean;
    if (m >= 2) {
      const double var = std::max(0.0, (sum_sq[cell] - mm * mean * mean) / (mm - 1.0));
      se(t, i) = std::sqrt(var / mm);
    }
  }
  if (m >= 2) out.meta.std_error = std::move(se);
  out.meta.k_or_m = m;
  out.meta.seed = seed;
  out.meta.baseline = in.baseline_id;
  out.meta.forward_evals = static_cast<std::size_t>(m) * d + 1;
  out.meta.wallclock_ns = elapsed_ns(start);
  return out;
}

Attribution explain_shap(const ModelParams& params, const KpmWindow& window,
                         const Normalizer& norm, const BaselineSpec& baseline, int m,
                         std::uint64_t seed) {
  return explain_shap(params, norm, ExplainInput::from_window(window, norm, baseline), m, seed);
}

Attribution shapley_exact(const ModelParams& params, const Normalizer& norm,
                          const ExplainInput& in) {
  check_shapes(in);
  const auto d = static_cast<std::size_t>(in.input.size());
  if (d > kMaxExactShapleyCells) {
    throw SizeError("shapley_exact: " + std::to_string(d) + " cells exceeds the limit of " +
                    std::to_string(kMaxExactShapleyCells));
  }
  const auto start = Clock::now();
  const auto cols = in.input.cols();
  const std::size_t subsets = std::size_t{1} << d;

  std::vector<double> value(subsets);
  Matrix z;
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    z = in.baseline;
    for (std::size_t cell = 0; cell < d; ++cell) {
      if (mask & (std::size_t{1} << cell)) {
        const auto t = static_cast<Eigen::Index>(cell) / cols;
        const auto i = static_cast<Eigen::Index>(cell) % cols;
        z(t, i) = in.input(t, i);
      }
    }
    value[mask] = predict(params, z, norm);
  }

  // weight(s) = s! (d - s - 1)! / d! = 1 / (d * C(d - 1, s))
  std::vector<double> weight(d);
  double binom = 1.0;
  for (std::size_t s = 0; s < d; ++s) {
    weight[s] = 1.0 / (static_cast<double>(d) * binom);
    binom = binom * static_cast<double>(d - 1 - s) / static_cast<double>(s + 1);
  }

  Attribution out;
  out.method = Method::kShap;
  out.e = Matrix::Zero(in.input.rows(), cols);
  for (std::size_t cell = 0; cell < d; ++cell) {
    const std::size_t bit = std::size_t{1} << cell;
    double phi = 0.0;
    for (std::size_t mask = 0; mask < subsets; ++mask) {
      if (mask & bit) continue;
      const auto size = static_cast<std::size_t>(std::popcount(mask));
      phi += weight[size] * (value[mask | bit] - value[mask]);
    }
    out.e(static_cast<Eigen::Index>(cell) / cols, static_cast<Eigen::Index>(cell) % cols) = phi;
  }
  out.meta.baseline = in.baseline_id;
  out.meta.forward_evals = subsets;
  out.meta.prediction = value[subsets - 1];
  out.meta.wallclock_ns = elapsed_ns(start);
  return out;
}

Attribution explain_hybrid(const ModelParams& params, const Normalizer& norm,
                           const ForwardCache& cache, const Matrix& baseline,
                           std::string baseline_id, int k) {
  require(baseline.rows() == cache.input.rows() && baseline.cols() == cache.input.cols(),
          "explain_hybrid: baseline shape differs from input");
  if (k < 1) throw ConfigError("k must be >= 1, got " + std::to_string(k));
  const auto start = Clock::now();
  Attribution out;
  out.method = Method::kHybrid;
  out.e = integrated_gradients(params, norm, cache.input, baseline, k);
  out.meta.k_or_m = k;
  out.meta.baseline = std::move(baseline_id);
  out.meta.prediction = cache.prediction;
  out.meta.attention = cache.attention;
  out.meta.forward_evals = static_cast<std::size_t>(k);
  out.meta.backward_evals = static_cast<std::size_t>(k);
  out.meta.wallclock_ns = elapsed_ns(start);
  return out;
}

Attribution explain_hybrid(const ModelParams& params, const KpmWindow& window,
                           const Normalizer& norm, const BaselineSpec& baseline, int k) {
  const ForwardCache cache = forward(params, window, norm);
  return explain_hybrid(params, norm, cache, baseline.resolve(norm, window.size()), baseline.id(),
                        k);
}

std::optional<Attribution> explain(const ModelParams& params, const Normalizer& norm,
                                   const ForwardCache& cache, const Matrix& baseline,
                                   const ExplainerConfig& config, std::uint64_t seed) {
  const std::string id = config.baseline.id();
  switch (config.method) {
    case Method::kNone:
      return std::nullopt;
    case Method::kAttention:
      return explain_attention(cache);
    case Method::kIg:
      return explain_ig(params, norm, ExplainInput{cache.input, baseline, id}, config.k);
    case Method::kShap:
      return explain_shap(params, norm, ExplainInput{cache.input, baseline, id}, config.m, seed);
    case Method::kHybrid:
      return explain_hybrid(params, norm, cache, baseline, id, config.k);
  }
  return std::nullopt;
}

double completeness_gap(const ModelParams& params, const Normalizer& norm, const ExplainInput& in,
                        const Attribution& attribution) {
  const double fx = predict(params, in.input, norm);
  const double fb = predict(params, in.baseline, norm);
  return std::abs(attribution.total() - (fx - fb));
}

}  // namespace xairan
