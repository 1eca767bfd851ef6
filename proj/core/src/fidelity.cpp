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

#include "xairan/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "xairan/errors.hpp"
#include "xairan/stats.hpp"

namespace xairan {
namespace {

// 1 - SSE / SST with the flat-neighborhood rule applied.
LocalR2 r2_from_samples(std::span<const double> f, std::span<const double> g) {
  const double f_mean = std::accumulate(f.begin(), f.end(), 0.0) / static_cast<double>(f.size());
  double sse = 0.0;
  double sst = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    sse += (f[j] - g[j]) * (f[j] - g[j]);
    sst += (f[j] - f_mean) * (f[j] - f_mean);
  }
  if (sst < kFlatTolerance) {
    if (sse <= kFlatTolerance) return LocalR2{1.0, false};
    return LocalR2{1.0 - sse / std::max(sst, std::numeric_limits<double>::min()), true};
  }
  return LocalR2{1.0 - sse / sst, false};
}

// Perturbs the cells selected by `column` (all cells when column < 0).
LocalR2 neighborhood_r2(const ModelParams& params, const Normalizer& norm, const ExplainInput& in,
                        const Attribution& attribution, const NeighborhoodConfig& cfg,
                        Eigen::Index column) {
  cfg.validate();
  require(attribution.e.rows() == in.input.rows() && attribution.e.cols() == in.input.cols(),
          "fidelity: attribution shape differs from input");
  const double f_x = predict(params, in.input, norm);
  const LinearSurrogate g = surrogate_from_attribution(attribution.e, in.input, in.baseline, f_x);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, cfg.perturb_std);
  std::vector<double> f_vals(cfg.n_samples);
  std::vector<double> g_vals(cfg.n_samples);
  Matrix x;
  for (std::size_t j = 0; j < cfg.n_samples; ++j) {
    x = in.input;
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
      for (Eigen::Index i = 0; i < x.cols(); ++i) {
        if (column < 0 || i == column) x(t, i) += noise(rng);
      }
    }
    f_vals[j] = predict(params, x, norm);
    g_vals[j] = g(x);
  }
  return r2_from_samples(f_vals, g_vals);
}

}  // namespace

void NeighborhoodConfig::validate() const {
  if (n_samples < 2) throw ConfigError("n_samples must be >= 2");
  if (!(perturb_std > 0.0) || !std::isfinite(perturb_std)) {
    throw ConfigError("perturb_std must be > 0");
  }
}

LinearSurrogate surrogate_from_attribution(const Matrix& e, const Matrix& input,
                                           const Matrix& baseline, double f_x) {
  require(e.rows() == input.rows() && e.cols() == input.cols() &&
              baseline.rows() == input.rows() && baseline.cols() == input.cols(),
          "surrogate_from_attribution: shape mismatch");
  LinearSurrogate g;
  g.w = Matrix::Zero(input.rows(), input.cols());
  for (Eigen::Index t = 0; t < input.rows(); ++t) {
    for (Eigen::Index i = 0; i < input.cols(); ++i) {
      const double span = input(t, i) - baseline(t, i);
      if (std::abs(span) > kSurrogateEpsilon) g.w(t, i) = e(t, i) / span;
    }
  }
  g.w0 = f_x - g.w.cwiseProduct(input).sum();
  return g;
}

LocalR2 local_r2(const ModelParams& params, const Normalizer& norm, const ExplainInput& in,
                 const Attribution& attribution, const NeighborhoodConfig& cfg) {
  return neighborhood_r2(params, norm, in, attribution, cfg, -1);
}

std::vector<LocalR2> featurewise_fidelity(const ModelParams& params, const Normalizer& norm,
                                          const ExplainInput& in, const Attribution& attribution,
                                          const NeighborhoodConfig& cfg) {
  std::vector<LocalR2> out;
  out.reserve(static_cast<std::size_t>(in.input.cols()));
  for (Eigen::Index i = 0; i < in.input.cols(); ++i) {
    NeighborhoodConfig per_feature = cfg;
    per_feature.seed = cfg.seed + static_cast<std::uint64_t>(i);
    out.push_back(neighborhood_r2(params, norm, in, attribution, per_feature, i));
  }
  return out;
}

std::vector<Cell> top_cells(const Matrix& e, double mass) {
  const auto d = static_cast<std::size_t>(e.size());
  const auto cols = static_cast<std::size_t>(e.cols());
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto mag = [&](std::size_t c) { return std::abs(e(static_cast<Eigen::Index>(c / cols),
                                                          static_cast<Eigen::Index>(c % cols))); };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return mag(l) > mag(r); });

  // Accumulate in ranked order so the full prefix equals the total exactly.
  double total = 0.0;
  for (std::size_t c : order) total += mag(c);
  const double target = mass * total;

  std::vector<Cell> out;
  double cum = 0.0;
  for (std::size_t c : order) {
    out.push_back(Cell{c / cols, c % cols});
    cum += mag(c);
    if (cum >= target) break;
  }
  return out;
}

TopKFidelity topk_fidelity(const ModelParams& params, const Normalizer& norm,
                           const ExplainInput& in, const Attribution& attribution, double mass) {
  require(attribution.e.rows() == in.input.rows() && attribution.e.cols() == in.input.cols(),
          "topk_fidelity: attribution shape differs from input");
  if (!(mass > 0.0 && mass <= 1.0)) throw ConfigError("mass must be in (0, 1]");
  TopKFidelity out;
  out.y_full = predict(params, in.input, norm);
  if (std::abs(out.y_full) < kPhiDenominatorFloor) {
    throw DegenerateError("topk_fidelity: |y_full| below denominator floor");
  }
  const std::vector<Cell> keep = top_cells(attribution.e, mass);
  out.k_used = keep.size();
  out.y_topk = forward_masked(params, in.input, norm, keep, in.baseline);
  out.phi = 1.0 - std::abs(out.y_full - out.y_topk) / std::abs(out.y_full);
  return out;
}

FidelityReport evaluate_fidelity(const ModelParams& params, const Normalizer& norm,
                                 const ExplainInput& in, const Attribution& attribution,
                                 const NeighborhoodConfig& cfg, std::size_t window_index,
                                 bool featurewise, double mass) {
  FidelityReport r;
  r.method = attribution.method;
  r.window_index = window_index;
  r.r2_loc = local_r2(params, norm, in, attribution, cfg);
  try {
    const TopKFidelity topk = topk_fidelity(params, norm, in, attribution, mass);
    r.phi = topk.phi;
    r.k_used = topk.k_used;
  } catch (const DegenerateError&) {
    r.phi.reset();
    r.k_used = top_cells(attribution.e, mass).size();
  }
  if (featurewise) r.per_feature_r2 = featurewise_fidelity(params, norm, in, attribution, cfg);
  r.completeness_gap = completeness_gap(params, norm, in, attribution);
  return r;
}

TemporalFidelity summarize_temporal(Method method, std::vector<FidelityReport> windows,
                                    std::size_t eval_window_len) {
  if (eval_window_len == 0) throw ConfigError("eval_window_len must be >= 1");
  if (windows.size() < eval_window_len) {
    throw SizeError("temporal_fidelity: " + std::to_string(windows.size()) +
                    " windows is fewer than eval_window_len " + std::to_string(eval_window_len));
  }
  TemporalFidelity out;
  out.method = method;
  out.eval_window_len = eval_window_len;
  for (const auto& w : windows) {
    if (w.r2_loc.degenerate) ++out.excluded_r2;
    if (!w.phi) ++out.excluded_phi;
  }
  for (std::size_t j = 0; j + eval_window_len <= windows.size(); ++j) {
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t k = j; k < j + eval_window_len; ++k) {
      if (windows[k].r2_loc.degenerate) continue;
      sum += windows[k].r2_loc.reported();
      ++used;
    }
    if (used == 0) continue;
    out.series_index.push_back(windows[j].window_index);
    out.series.push_back(sum / static_cast<double>(used));
  }
  if (out.series.empty()) throw SizeError("temporal_fidelity: empty series");
  const Summary s = summarize(out.series, out.excluded_r2);
  out.mean = s.mean;
  out.std = s.std;
  out.windows = std::move(windows);
  return out;
}

TemporalFidelity temporal_fidelity(std::span<const WindowTarget> windows,
                                   const ModelParams& params, const Normalizer& norm,
                                   const TemporalConfig& config) {
  if (config.explainer.method == Method::kNone) {
    throw ConfigError("temporal_fidelity: method 'none' produces no attribution");
  }
  std::vector<FidelityReport> reports;
  reports.reserve(windows.size());
  for (std::size_t j = 0; j < windows.size(); ++j) {
    const std::uint64_t seed = config.explainer.seed ^ static_cast<std::uint64_t>(j);
    const ForwardCache cache = forward(params, windows[j].window, norm);
    const ExplainInput in{cache.input, config.explainer.baseline.resolve(norm, cache.window()),
                          config.explainer.baseline.id()};
    const auto attribution = explain(params, norm, cache, in.baseline, config.explainer, seed);
    NeighborhoodConfig nb = config.neighborhood;
    nb.seed = config.neighborhood.seed ^ static_cast<std::uint64_t>(j);
    reports.push_back(evaluate_fidelity(params, norm, in, *attribution, nb, j, false, config.mass));
  }
  return summarize_temporal(config.explainer.method, std::move(reports), config.eval_window_len);
}

}  // namespace xairan
