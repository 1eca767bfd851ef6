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

#include "xairan/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace xairan {
namespace {

using nlohmann::json;

json matrix_json(const Matrix& m) {
  json arr = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) arr.push_back(m(r, c));
  }
  return arr;
}

json vector_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index j = 0; j < v.size(); ++j) arr.push_back(v(j));
  return arr;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json attribution_json(const Attribution& a, bool canonical) {
  json j;
  j["method"] = std::string(to_string(a.method));
  j["k_or_m"] = a.meta.k_or_m;
  j["seed"] = a.meta.seed;
  j["baseline"] = a.meta.baseline;
  if (!canonical) j["wallclock_ns"] = a.meta.wallclock_ns;
  j["forward_evals"] = a.meta.forward_evals;
  j["rows"] = a.e.rows();
  j["cols"] = a.e.cols();
  j["e"] = matrix_json(a.e);
  j["attention"] = a.meta.attention ? vector_json(*a.meta.attention) : json(nullptr);
  return j;
}

json r2_json(const LocalR2& r) {
  return json{{"raw", finite_or_null(r.value)},
              {"reported", finite_or_null(r.reported())},
              {"degenerate", r.degenerate}};
}

json fidelity_json(const FidelityReport& r) {
  json j;
  j["method"] = std::string(to_string(r.method));
  j["window"] = r.window_index;
  j["r2_loc"] = r2_json(r.r2_loc);
  j["phi"] = r.phi ? finite_or_null(*r.phi) : json(nullptr);
  j["k_used"] = r.k_used;
  j["completeness_gap"] = finite_or_null(r.completeness_gap);
  if (!r.per_feature_r2.empty()) {
    json pf = json::object();
    for (std::size_t i = 0; i < r.per_feature_r2.size(); ++i) {
      const std::string name =
          i < kFeatureNames.size() ? std::string(kFeatureNames[i]) : "f" + std::to_string(i);
      pf[name] = r2_json(r.per_feature_r2[i]);
    }
    j["per_feature_r2"] = pf;
  }
  return j;
}

std::string dump(const json& j, const JsonOptions& options) { return j.dump(options.indent); }

std::string fixed(double v, int digits, bool sign = false) {
  if (!std::isfinite(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof(buf), sign ? "%+.*f" : "%.*f", digits, v);
  return buf;
}

// Three significant digits, so microsecond-scale desk timings stay visible.
std::string millis(double seconds) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3g ms", seconds * 1e3);
  return buf;
}

std::string csv_double(double v) {
  if (!std::isfinite(v)) return "";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string to_json(const Attribution& attribution, const JsonOptions& options) {
  return dump(attribution_json(attribution, options.canonical), options);
}

std::string to_json(const FidelityReport& report, const JsonOptions& options) {
  return dump(fidelity_json(report), options);
}

std::string to_json(const TemporalFidelity& t, const JsonOptions& options) {
  json j;
  j["method"] = std::string(to_string(t.method));
  j["eval_window_len"] = t.eval_window_len;
  j["mean"] = finite_or_null(t.mean);
  j["std"] = finite_or_null(t.std);
  j["excluded_r2"] = t.excluded_r2;
  j["excluded_phi"] = t.excluded_phi;
  j["r2_floor"] = kR2ReportFloor;
  j["featurewise_definition"] = "one feature column perturbed across all timesteps";
  json series = json::array();
  for (std::size_t s = 0; s < t.series.size(); ++s) {
    series.push_back(json{{"window", t.series_index[s]}, {"r2", t.series[s]}});
  }
  j["series"] = series;
  json windows = json::array();
  for (const auto& w : t.windows) windows.push_back(fidelity_json(w));
  j["windows"] = windows;
  return dump(j, options);
}

std::string to_json(const PairedComparison& c, const JsonOptions& options) {
  json j{{"median_delta", c.median_delta}, {"ci_low", c.ci_low},      {"ci_high", c.ci_high},
         {"win_rate", c.win_rate},         {"n_windows", c.n_windows}, {"block_len", c.block_len},
         {"n_resamples", c.n_resamples},   {"seed", c.seed}};
  return dump(j, options);
}

void write_pipeline_jsonl(const PipelineLog& log, std::ostream& out, bool canonical) {
  for (const auto& ev : log.explanations) {
    json j;
    j["cycle"] = ev.cycle;
    j["window_id"] = ev.window_id;
    j["prediction"] = ev.prediction;
    j["attribution"] = ev.attribution ? attribution_json(*ev.attribution, canonical) : json(nullptr);
    j["fidelity"] = ev.fidelity ? fidelity_json(*ev.fidelity) : json(nullptr);
    json lat;
    lat["method"] = std::string(to_string(ev.latency.method));
    lat["k_or_m"] = ev.latency.k_or_m;
    if (!canonical) {
      lat["t_inf"] = ev.latency.t_inf;
      lat["t_xai"] = ev.latency.t_xai;
      lat["t_comm"] = ev.latency.t_comm;
      lat["t_total"] = ev.latency.t_total;
      lat["within_budget"] = ev.latency.within_budget;
    }
    j["latency"] = lat;
    out << j.dump() << '\n';
  }
  json summary;
  summary["method"] = std::string(to_string(log.method));
  summary["cycles"] = log.cycles;
  summary["explanations"] = log.explanations.size();
  summary["dropped"] = log.dropped;
  if (!canonical) summary["budget_violations"] = log.budget_violations;
  out << json{{"summary", summary}}.dump() << '\n';
}

void write_series_csv(std::span<const TemporalFidelity> series, std::ostream& out) {
  out << "window,method,r2,phi,k_used\n";
  for (const auto& t : series) {
    for (const auto& w : t.windows) {
      out << w.window_index << ',' << to_string(t.method) << ',' << csv_double(w.r2_loc.reported())
          << ',' << (w.phi ? csv_double(*w.phi) : std::string()) << ',' << w.k_used << '\n';
    }
  }
}

std::string table1_markdown(std::span<const Table1Row> rows) {
  std::ostringstream os;
  os << "| Comparison | Median ΔR²_loc | 95% CI | Win Rate |\n";
  os << "|---|---:|---:|---:|\n";
  for (const auto& r : rows) {
    const auto& c = r.comparison;
    os << "| " << r.label << " | " << fixed(c.median_delta, 2, true) << " | [ "
       << fixed(c.ci_low, 2, true) << " , " << fixed(c.ci_high, 2, true) << " ] | "
       << fixed(100.0 * c.win_rate, 0) << "% |\n";
  }
  if (!rows.empty()) {
    const auto& c = rows.front().comparison;
    os << "\nBlock bootstrap: block length " << c.block_len << ", " << c.n_resamples
       << " resamples, seed " << c.seed << ", " << c.n_windows << " windows.\n";
  }
  return os.str();
}

std::string table1_json(std::span<const Table1Row> rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    json row = json::parse(to_json(r.comparison));
    row["comparison"] = r.label;
    arr.push_back(row);
  }
  return arr.dump(2);
}

std::string table2_markdown(std::span<const LatencyRow> rows, const Budget& budget) {
  std::ostringstream os;
  os << "| Model | T_inf | T_xai | T_comm | T_total | Forward evals | Budget (" << millis(budget.limit)
     << ") |\n";
  os << "|---|---:|---:|---:|---:|---:|---|\n";
  for (const auto& r : rows) {
    os << "| " << r.label << " | " << millis(r.t_inf_mean) << " | "
       << (r.method == Method::kNone ? std::string("--") : millis(r.t_xai_mean)) << " | "
       << millis(r.t_comm_mean) << " | " << millis(r.t_total_mean) << " | " << r.forward_evals
       << " | "
       << (r.verdict.ok ? std::string("OK") : "EXCEEDED by " + millis(r.verdict.exceeded_by))
       << " |\n";
  }
  os << "\nMeans over measured cycles after warm-up. Forward evals per explanation is the "
        "compute proxy (CPU wall-clock, no GPU).\n";
  return os.str();
}

std::string table2_csv(std::span<const LatencyRow> rows) {
  std::ostringstream os;
  os << "model,method,k_or_m,cycles,t_inf,t_xai,t_comm,t_total,t_xai_median,forward_evals,"
        "over_budget,verdict\n";
  for (const auto& r : rows) {
    os << '"' << r.label << '"' << ',' << to_string(r.method) << ',' << r.k_or_m << ',' << r.cycles
       << ',' << csv_double(r.t_inf_mean) << ',' << csv_double(r.t_xai_mean) << ','
       << csv_double(r.t_comm_mean) << ',' << csv_double(r.t_total_mean) << ','
       << csv_double(r.t_xai_median) << ',' << r.forward_evals << ',' << r.over_budget << ','
       << (r.verdict.ok ? "OK" : "EXCEEDED") << '\n';
  }
  return os.str();
}

}  // namespace xairan
