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

#include "xairan/latency.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "xairan/errors.hpp"
#include "xairan/stats.hpp"

namespace xairan {
namespace {

double seconds(StageTimings::TimePoint begin, StageTimings::TimePoint end, const char* stage) {
  if (end < begin) throw MeasurementError(std::string("clock went backwards in stage ") + stage);
  return std::chrono::duration<double>(end - begin).count();
}

// Least-squares slope through the origin and the RMS of its residuals.
struct Slope {
  double value = 0.0;
  double rms = 0.0;
};

Slope fit_slope(std::span<const double> x, std::span<const double> y) {
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    sxy += x[j] * y[j];
    sxx += x[j] * x[j];
  }
  Slope s;
  s.value = sxx > 0.0 ? sxy / sxx : 0.0;
  double sq = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double r = y[j] - s.value * x[j];
    sq += r * r;
  }
  s.rms = std::sqrt(sq / static_cast<double>(x.size()));
  return s;
}

}  // namespace

void LatencyModelParams::validate() const {
  if (!(t_inf >= 0.0 && t_comm >= 0.0 && alpha_attn >= 0.0 && beta_ig >= 0.0 &&
        shap_evals_per_sample >= 0.0)) {
    throw ConfigError("latency model parameters must be >= 0");
  }
  if (!(p_shap > 0.0)) throw ConfigError("p_shap must be > 0");
}

double predict_overhead(Method method, int k_or_m, const LatencyModelParams& params) {
  params.validate();
  if (k_or_m < 0) throw ConfigError("k/m must be >= 0");
  const auto count = static_cast<double>(k_or_m);
  switch (method) {
    case Method::kNone:
      return 0.0;
    case Method::kAttention:
      return params.alpha_attn * params.t_inf;
    case Method::kIg:
    case Method::kHybrid:
      return count * params.beta_ig * params.t_inf;
    case Method::kShap:
      return count * params.shap_evals_per_sample / params.p_shap * params.t_inf;
  }
  throw ConfigError("unknown method");
}

void Budget::validate() const {
  if (!(limit > 0.0)) throw ConfigError("budget limit must be > 0");
}

BudgetVerdict check_budget(const LatencyRecord& record, const Budget& budget) {
  if (record.t_total <= budget.limit) return BudgetVerdict{true, 0.0};
  return BudgetVerdict{false, record.t_total - budget.limit};
}

LatencyRecord measure_cycle(const StageTimings& timings, Method method, int k_or_m,
                            std::size_t cycle, const Budget& budget) {
  LatencyRecord r;
  r.cycle = cycle;
  r.method = method;
  r.k_or_m = k_or_m;
  r.t_inf = seconds(timings.inf_begin, timings.inf_end, "inference");
  r.t_comm = seconds(timings.publish, timings.receive, "communication");
  r.t_xai = method == Method::kNone ? 0.0 : seconds(timings.xai_begin, timings.xai_end, "xai");
  r.t_total = r.t_inf + r.t_xai + r.t_comm;
  r.within_budget = check_budget(r, budget).ok;
  return r;
}

LatencyFit fit_model_params(std::span<const LatencyRecord> records,
                            double shap_evals_per_sample) {
  std::map<Method, std::vector<const LatencyRecord*>> by_method;
  for (const auto& r : records) by_method[r.method].push_back(&r);
  if (!by_method.contains(Method::kNone)) {
    throw SizeError("fit_model_params: no NONE records to calibrate t_inf");
  }
  for (const auto& [method, rs] : by_method) {
    if (rs.size() < kMinRecordsPerMethod) {
      std::ostringstream msg;
      msg << "fit_model_params: " << rs.size() << " " << to_string(method) << " records, need "
          << kMinRecordsPerMethod;
      throw SizeError(msg.str());
    }
  }

  LatencyFit fit;
  fit.params.shap_evals_per_sample = shap_evals_per_sample;
  {
    std::vector<double> inf;
    for (const auto* r : by_method[Method::kNone]) inf.push_back(r->t_inf);
    fit.params.t_inf = median(inf);
    std::vector<double> comm;
    for (const auto& r : records) comm.push_back(r.t_comm);
    fit.params.t_comm = median(comm);
  }
  const double t_inf = fit.params.t_inf;

  const auto slope_for = [&](std::initializer_list<Method> methods, auto design) {
    std::vector<double> x;
    std::vector<double> y;
    for (Method m : methods) {
      const auto it = by_method.find(m);
      if (it == by_method.end()) continue;
      for (const auto* r : it->second) {
        x.push_back(design(*r));
        y.push_back(r->t_xai);
      }
    }
    return std::pair{x.empty() ? std::optional<Slope>{} : fit_slope(x, y), x.size()};
  };

  if (auto [s, n] = slope_for({Method::kAttention}, [&](const LatencyRecord&) { return t_inf; });
      s) {
    fit.params.alpha_attn = s->value;
    fit.has_alpha = true;
    fit.residual_rms[Method::kAttention] = s->rms;
  }
  if (auto [s, n] = slope_for({Method::kIg, Method::kHybrid},
                              [&](const LatencyRecord& r) { return r.k_or_m * t_inf; });
      s) {
    fit.params.beta_ig = s->value;
    fit.has_beta = true;
    if (by_method.contains(Method::kIg)) fit.residual_rms[Method::kIg] = s->rms;
    if (by_method.contains(Method::kHybrid)) fit.residual_rms[Method::kHybrid] = s->rms;
  }
  if (auto [s, n] = slope_for({Method::kShap},
                              [&](const LatencyRecord& r) {
                                return r.k_or_m * shap_evals_per_sample * t_inf;
                              });
      s && s->value > 0.0) {
    fit.params.p_shap = 1.0 / s->value;
    fit.p_shap = fit.params.p_shap;
    fit.residual_rms[Method::kShap] = s->rms;
  }
  return fit;
}

std::string row_label(Method method, int k_or_m) {
  switch (method) {
    case Method::kNone:
      return "Non-XAI (Baseline)";
    case Method::kAttention:
      return "Attention only";
    case Method::kShap:
      return "SHAP m=" + std::to_string(k_or_m);
    case Method::kIg:
      return "IG k=" + std::to_string(k_or_m);
    case Method::kHybrid:
      return "Ours k=" + std::to_string(k_or_m);
  }
  return "unknown";
}

LatencyRow aggregate(std::span<const LatencyRecord> records, std::size_t warmup,
                     std::size_t forward_evals, const Budget& budget) {
  if (records.size() <= warmup) {
    throw SizeError("aggregate: " + std::to_string(records.size()) + " records with warmup " +
                    std::to_string(warmup));
  }
  const auto kept = records.subspan(warmup);
  LatencyRow row;
  row.method = kept.front().method;
  row.k_or_m = kept.front().k_or_m;
  row.label = row_label(row.method, row.k_or_m);
  row.cycles = kept.size();
  row.forward_evals = forward_evals;
  std::vector<double> xai;
  for (const auto& r : kept) {
    row.t_inf_mean += r.t_inf;
    row.t_xai_mean += r.t_xai;
    row.t_comm_mean += r.t_comm;
    row.t_total_mean += r.t_total;
    xai.push_back(r.t_xai);
    if (!check_budget(r, budget).ok) ++row.over_budget;
  }
  const double n = static_cast<double>(kept.size());
  row.t_inf_mean /= n;
  row.t_xai_mean /= n;
  row.t_comm_mean /= n;
  row.t_total_mean /= n;
  row.t_xai_median = median(xai);
  LatencyRecord mean_record;
  mean_record.t_total = row.t_total_mean;
  row.verdict = check_budget(mean_record, budget);
  return row;
}

}  // namespace xairan
