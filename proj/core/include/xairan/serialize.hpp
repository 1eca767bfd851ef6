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

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "xairan/explain.hpp"
#include "xairan/fidelity.hpp"
#include "xairan/latency.hpp"
#include "xairan/pipeline.hpp"
#include "xairan/stats.hpp"

namespace xairan {

// Canonical output omits every wall-clock field (timestamps, durations,
// wallclock_ns and budget flags derived from them) so that two runs with the
// same seeds produce byte-identical files.
struct JsonOptions {
  bool canonical = false;
  int indent = -1;  // -1: single line
};

// {method, k_or_m, seed, baseline, wallclock_ns, e: row-major array,
//  attention: array|null}, plus rows/cols.
std::string to_json(const Attribution& attribution, const JsonOptions& options = {});
std::string to_json(const FidelityReport& report, const JsonOptions& options = {});
std::string to_json(const TemporalFidelity& temporal, const JsonOptions& options = {});
std::string to_json(const PairedComparison& comparison, const JsonOptions& options = {});

// One ExplanationEvent per line followed by a {"summary": ...} footer.
void write_pipeline_jsonl(const PipelineLog& log, std::ostream& out, bool canonical = false);

// Columns: window,method,r2,phi,k_used. r2 is the reported (floored) value;
// phi is empty when excluded.
void write_series_csv(std::span<const TemporalFidelity> series, std::ostream& out);

struct Table1Row {
  std::string label;  // e.g. "Ours − SHAP"
  PairedComparison comparison;
};

std::string table1_markdown(std::span<const Table1Row> rows);
std::string table1_json(std::span<const Table1Row> rows);

std::string table2_markdown(std::span<const LatencyRow> rows, const Budget& budget);
std::string table2_csv(std::span<const LatencyRow> rows);

}  // namespace xairan
