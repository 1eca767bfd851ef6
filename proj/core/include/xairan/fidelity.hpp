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

#include "xairan/explain.hpp"
#include "xairan/model.hpp"
#include "xairan/trace.hpp"

namespace xairan {

struct NeighborhoodConfig {
  std::size_t n_samples = 64;
  double perturb_std = 0.25;  // normalized units
  std::uint64_t seed = 42;

  // Throws ConfigError.
  void validate() const;
};

// g(x) = w0 + sum w(t,i) x(t,i), built so that g(x_anchor) = f(x_anchor).
struct LinearSurrogate {
  Matrix w;
  double w0 = 0.0;

  double operator()(const Matrix& x) const { return w0 + w.cwiseProduct(x).sum(); }
};

// Cells with |x - b| below this get a zero slope.
inline constexpr double kSurrogateEpsilon = 1e-6;

// w = e / (x - b) per cell, intercept chosen to interpolate f_x at x.
LinearSurrogate surrogate_from_attribution(const Matrix& e, const Matrix& input,
                                           const Matrix& baseline, double f_x);

// Reported R^2 values are floored here; raw values are kept alongside.
inline constexpr double kR2ReportFloor = -10.0;
// Both sums of squares below this mean the neighborhood is flat.
inline constexpr double kFlatTolerance = 1e-12;

struct LocalR2 {
  double value = 0.0;      // raw
  bool degenerate = false; // f flat over the neighborhood but g is not

  double reported() const { return value < kR2ReportFloor ? kR2ReportFloor : value; }
};

// Local R^2 of the attribution's surrogate against the model over N Gaussian
// perturbations of every cell.
LocalR2 local_r2(const ModelParams& params, const Normalizer& norm, const ExplainInput& in,
                 const Attribution& attribution, const NeighborhoodConfig& cfg);

// Feature-wise variant: column i alone is perturbed across all timesteps.
// Returns one entry per feature.
std::vector<LocalR2> featurewise_fidelity(const ModelParams& params, const Normalizer& norm,
                                          const ExplainInput& in, const Attribution& attribution,
                                          const NeighborhoodConfig& cfg);

// Cells ranked by |e| (descending, ties by row-major index), truncated to the
// shortest prefix holding at least `mass` of the total |e|.
std::vector<Cell> top_cells(const Matrix& e, double mass);

struct TopKFidelity {
  double phi = 0.0;
  std::size_t k_used = 0;
  double y_full = 0.0;
  double y_topk = 0.0;
};

// Phi = 1 - |y_full - y_topk| / |y_full| where y_topk keeps only the top
// cells and replaces the rest with the baseline. Throws DegenerateError when
// |y_full| < kPhiDenominatorFloor.
inline constexpr double kPhiDenominatorFloor = 1e-9;
TopKFidelity topk_fidelity(const ModelParams& params, const Normalizer& norm,
                           const ExplainInput& in, const Attribution& attribution,
                           double mass = 0.8);

struct FidelityReport {
  Method method = Method::kNone;
  std::size_t window_index = 0;
  LocalR2 r2_loc;
  std::optional<double> phi;  // empty when the Phi denominator degenerated
  std::size_t k_used = 0;
  std::vector<LocalR2> per_feature_r2;  // empty unless requested
  double completeness_gap = 0.0;
};

FidelityReport evaluate_fidelity(const ModelParams& params, const Normalizer& norm,
                                 const ExplainInput& in, const Attribution& attribution,
                                 const NeighborhoodConfig& cfg, std::size_t window_index,
                                 bool featurewise = false, double mass = 0.8);

struct TemporalFidelity {
  Method method = Method::kNone;
  std::vector<FidelityReport> windows;   // one per prediction window
  std::vector<std::size_t> series_index; // first prediction window of each series entry
  std::vector<double> series;            // sliding mean of reported R^2
  std::size_t eval_window_len = 1;
  double mean = 0.0;
  double std = 0.0;  // population
  std::size_t excluded_r2 = 0;   // degenerate neighborhoods
  std::size_t excluded_phi = 0;  // degenerate Phi denominators
};

// Builds the sliding series and its summary from per-window reports.
// Degenerate windows are excluded; a series entry averages the non-excluded
// reported R^2 values in [j, j + eval_window_len). Throws SizeError if no
// entry survives.
TemporalFidelity summarize_temporal(Method method, std::vector<FidelityReport> windows,
                                    std::size_t eval_window_len);

struct TemporalConfig {
  ExplainerConfig explainer;
  NeighborhoodConfig neighborhood;
  std::size_t eval_window_len = 1;
  double mass = 0.8;
};

// Explains and scores every window. Window j uses seed ^ j for both the
// explainer and the neighborhood, so results do not depend on evaluation
// order.
TemporalFidelity temporal_fidelity(std::span<const WindowTarget> windows,
                                   const ModelParams& params, const Normalizer& norm,
                                   const TemporalConfig& config);

}  // namespace xairan
