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
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "xairan/model.hpp"
#include "xairan/trace.hpp"
#include "xairan/types.hpp"

namespace xairan {

enum class Method { kNone, kAttention, kIg, kShap, kHybrid };

// "none", "attention", "ig", "shap", "hybrid".
std::string_view to_string(Method method);
// Case-insensitive inverse of to_string; throws ConfigError.
Method parse_method(std::string_view name);

// Reference input that masked and path-based methods move away from.
class BaselineSpec {
 public:
  enum class Kind { kNormalizedZero, kRawZero, kCustom };

  // All-zero in normalized space, i.e. every feature at its training mean.
  static BaselineSpec normalized_zero() { return BaselineSpec(Kind::kNormalizedZero, {}); }
  // Literal zero in raw units, mapped into normalized space.
  static BaselineSpec raw_zero() { return BaselineSpec(Kind::kRawZero, {}); }
  // A W x n matrix already in normalized space.
  static BaselineSpec custom(Matrix normalized);
  // "normalized-zero", "raw-zero"; throws ConfigError otherwise.
  static BaselineSpec parse(std::string_view name);

  Kind kind() const { return kind_; }
  std::string id() const;

  // Normalized W x n baseline matrix. Throws ContractViolation when a custom
  // matrix does not have that shape.
  Matrix resolve(const Normalizer& norm, std::size_t window) const;

 private:
  BaselineSpec(Kind kind, Matrix custom) : kind_(kind), custom_(std::move(custom)) {}

  Kind kind_;
  Matrix custom_;
};

// A normalized input paired with the baseline it is explained against.
struct ExplainInput {
  Matrix input;
  Matrix baseline;
  std::string baseline_id;

  static ExplainInput from_window(const KpmWindow& window, const Normalizer& norm,
                                  const BaselineSpec& baseline);
  static ExplainInput from_matrix(Matrix normalized_input, const Normalizer& norm,
                                  const BaselineSpec& baseline);
};

struct AttributionMeta {
  int k_or_m = 0;
  std::string baseline;
  std::uint64_t seed = 0;
  std::int64_t wallclock_ns = 0;
  std::size_t forward_evals = 0;
  std::size_t backward_evals = 0;
  double prediction = std::numeric_limits<double>::quiet_NaN();  // f(x) when known
  std::optional<Vector> attention;   // temporal profile, ATTENTION and HYBRID
  std::optional<Matrix> std_error;   // per-cell standard error, SHAP with m >= 2
};

// Per-(timestep, feature) contribution to the prediction, in Mbps.
struct Attribution {
  Matrix e;
  Method method = Method::kNone;
  AttributionMeta meta;

  double total() const { return e.sum(); }
};

// Attention weights lifted to W x n: e(t, i) = a_t / n, so row t sums to a_t.
// Uses no model evaluations.
Attribution explain_attention(const ForwardCache& cache);

// Midpoint-rule integrated gradients with k steps, preceded by its own
// forward pass at the input. Throws ConfigError when k < 1.
Attribution explain_ig(const ModelParams& params, const Normalizer& norm, const ExplainInput& in,
                       int k);
Attribution explain_ig(const ModelParams& params, const KpmWindow& window, const Normalizer& norm,
                       const BaselineSpec& baseline, int k);

// Monte-Carlo permutation Shapley over the W * n scalar cells; m
// permutations, m * d + 1 forward evaluations. Throws ConfigError when m < 1.
Attribution explain_shap(const ModelParams& params, const Normalizer& norm, const ExplainInput& in,
                         int m, std::uint64_t seed);
Attribution explain_shap(const ModelParams& params, const KpmWindow& window,
                         const Normalizer& norm, const BaselineSpec& baseline, int m,
                         std::uint64_t seed);

// Exact Shapley values by enumerating all 2^d coalitions. Throws SizeError
// when d = W * n exceeds 16.
Attribution shapley_exact(const ModelParams& params, const Normalizer& norm,
                          const ExplainInput& in);
inline constexpr std::size_t kMaxExactShapleyCells = 16;

// Attention + IG sharing the forward pass that produced `cache`: e is the
// IG matrix, meta.attention the temporal profile from the cache.
Attribution explain_hybrid(const ModelParams& params, const Normalizer& norm,
                           const ForwardCache& cache, const Matrix& baseline,
                           std::string baseline_id, int k = 5);
Attribution explain_hybrid(const ModelParams& params, const KpmWindow& window,
                           const Normalizer& norm, const BaselineSpec& baseline, int k = 5);

struct ExplainerConfig {
  Method method = Method::kHybrid;
  int k = 5;
  int m = 16;
  std::uint64_t seed = 42;
  BaselineSpec baseline = BaselineSpec::normalized_zero();
};

// Runs the configured method for a prediction whose forward pass is `cache`.
// Returns nullopt for Method::kNone. `seed` overrides config.seed so callers
// can derive per-window seeds.
std::optional<Attribution> explain(const ModelParams& params, const Normalizer& norm,
                                   const ForwardCache& cache, const Matrix& baseline,
                                   const ExplainerConfig& config, std::uint64_t seed);

// |sum(e) - (f(x) - f(b))|, the integrated-gradients completeness residual.
double completeness_gap(const ModelParams& params, const Normalizer& norm, const ExplainInput& in,
                        const Attribution& attribution);

}  // namespace xairan
