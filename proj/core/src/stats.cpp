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

#include "xairan/stats.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "xairan/errors.hpp"

namespace xairan {

Summary summarize(std::span<const double> values, std::size_t excluded_count) {
  if (values.empty()) throw SizeError("summarize: empty series");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  Summary s;
  s.count = sorted.size();
  s.excluded_count = excluded_count;
  s.min = sorted.front();
  s.max = sorted.back();
  double total = 0.0;
  for (double v : sorted) total += v;
  s.mean = total / static_cast<double>(s.count);
  double sq = 0.0;
  for (double v : sorted) sq += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(s.count));
  return s;
}

double median(std::vector<double> values) {
  if (values.empty()) throw SizeError("median: empty sample");
  const std::size_t n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw SizeError("percentile: empty sample");
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

PairedComparison paired_delta(std::span<const double> a, std::span<const double> b,
                              const BootstrapConfig& config) {
  if (a.size() != b.size()) {
    throw SizeError("paired_delta: series lengths differ (" + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
  }
  if (config.block_len == 0) throw ConfigError("paired_delta: block_len must be >= 1");
  if (config.resamples == 0) throw ConfigError("paired_delta: resamples must be >= 1");
  const std::size_t n = a.size();
  const std::size_t L = config.block_len;
  if (n < 2 * L) {
    throw SizeError("paired_delta: need at least " + std::to_string(2 * L) + " windows, got " +
                    std::to_string(n));
  }

  std::vector<double> delta(n);
  std::size_t wins = 0;
  for (std::size_t j = 0; j < n; ++j) {
    delta[j] = a[j] - b[j];
    if (delta[j] > 0.0) ++wins;
  }

  PairedComparison out;
  out.median_delta = median(delta);
  out.win_rate = static_cast<double>(wins) / static_cast<double>(n);
  out.n_windows = n;
  out.block_len = L;
  out.n_resamples = config.resamples;
  out.seed = config.seed;

  const std::size_t blocks = (n + L - 1) / L;
  std::vector<double> medians(config.resamples);
  std::vector<double> sample(n);
  for (std::size_t r = 0; r < config.resamples; ++r) {
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                      static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<std::size_t> start_dist(0, n - 1);
    std::size_t filled = 0;
    for (std::size_t blk = 0; blk < blocks && filled < n; ++blk) {
      const std::size_t start = start_dist(rng);
      for (std::size_t k = 0; k < L && filled < n; ++k) sample[filled++] = delta[(start + k) % n];
    }
    medians[r] = median(sample);
  }
  std::sort(medians.begin(), medians.end());
  out.ci_low = percentile_sorted(medians, 0.025);
  out.ci_high = percentile_sorted(medians, 0.975);
  return out;
}

}  // namespace xairan
