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

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xairan/explain.hpp"

namespace xairan {

// Analytic overhead model for one explanation, all times in seconds.
struct LatencyModelParams {
  double t_inf = 5.2e-3;
  double t_comm = 0.2e-3;
  double alpha_attn = 0.1;       // attention overhead as a fraction of t_inf
  double beta_ig = 0.1;          // cost of one IG step as a fraction of t_inf
  double p_shap = 1.0;           // parallelism divisor for SHAP forward passes
  double shap_evals_per_sample = 25.0;  // forward passes per permutation (W * n)

  // gamma = k * beta_ig, the IG overhead as a multiple of t_inf.
  double gamma(int k) const { return static_cast<double>(k) * beta_ig; }

  // Throws ConfigError on negative entries or p_shap == 0.
  void validate() const;
};

// ATTENTION: alpha * t_inf; IG and HYBRID: k * beta * t_inf;
// SHAP: m * evals_per_sample / p * t_inf; NONE: 0.
double predict_overhead(Method method, int k_or_m, const LatencyModelParams& params);

struct LatencyRecord {
  std::size_t cycle = 0;
  Method method = Method::kNone;
  int k_or_m = 0;
  double t_inf = 0.0;
  double t_xai = 0.0;
  double t_comm = 0.0;
  double t_total = 0.0;
  bool within_budget = true;
};

// Monotonic timestamps around each stage of one cycle.
struct StageTimings {
  using TimePoint = std::chrono::steady_clock::time_point;
  TimePoint inf_begin;
  TimePoint inf_end;
  TimePoint publish;
  TimePoint receive;
  TimePoint xai_begin;
  TimePoint xai_end;
};

struct Budget {
  double limit = 10e-3;  // seconds

  void validate() const;
};

struct BudgetVerdict {
  bool ok = true;
  double exceeded_by = 0.0;  // seconds, zero when ok
};

// OK iff t_total <= limit.
BudgetVerdict check_budget(const LatencyRecord& record, const Budget& budget);

// Builds a record with t_total = t_inf + t_xai + t_comm. Method NONE has
// t_xai = 0 regardless of the xai timestamps. Throws MeasurementError when a
// stage ends before it begins.
LatencyRecord measure_cycle(const StageTimings& timings, Method method, int k_or_m,
                            std::size_t cycle, const Budget& budget);

inline constexpr std::size_t kMinRecordsPerMethod = 30;

struct LatencyFit {
  LatencyModelParams params;
  bool has_alpha = false;
  bool has_beta = false;
  std::optional<double> p_shap;  // absent when no SHAP records were given
  std::map<Method, double> residual_rms;  // seconds, per fitted method
};

// t_inf is the median NONE inference time; t_comm the median over all
// records; alpha, beta and 1/p are least-squares slopes of the measured t_xai
// against the model forms. Every method present needs kMinRecordsPerMethod
// records and NONE must be present. Throws SizeError otherwise.
LatencyFit fit_model_params(std::span<const LatencyRecord> records,
                            double shap_evals_per_sample = 25.0);

// Aggregate of one latency table row.
struct LatencyRow {
  std::string label;
  Method method = Method::kNone;
  int k_or_m = 0;
  std::size_t cycles = 0;
  double t_inf_mean = 0.0;
  double t_xai_mean = 0.0;
  double t_comm_mean = 0.0;
  double t_total_mean = 0.0;
  double t_xai_median = 0.0;
  std::size_t forward_evals = 0;  // per explanation, the compute proxy
  std::size_t over_budget = 0;
  BudgetVerdict verdict;  // on the mean total
};

// "Non-XAI (Baseline)", "SHAP m=16", "Attention only", "Ours k=5", ...
std::string row_label(Method method, int k_or_m);

// Means and medians over records; the first `warmup` records are dropped.
LatencyRow aggregate(std::span<const LatencyRecord> records, std::size_t warmup,
                     std::size_t forward_evals, const Budget& budget);

}  // namespace xairan
