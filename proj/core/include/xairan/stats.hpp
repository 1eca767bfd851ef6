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
#include <span>
#include <vector>

namespace xairan {

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // population
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
  std::size_t excluded_count = 0;
};

// Order-free: the values are sorted before accumulation, so any permutation
// of `values` gives a bit-identical result. Throws SizeError when empty.
Summary summarize(std::span<const double> values, std::size_t excluded_count = 0);

// Median of a non-empty sample (mean of the two middle values for even n).
double median(std::vector<double> values);

// Linear-interpolation percentile, q in [0, 1], of an ascending sample.
double percentile_sorted(std::span<const double> sorted, double q);

struct BootstrapConfig {
  std::size_t block_len = 10;
  std::size_t resamples = 1000;
  std::uint64_t seed = 42;
};

struct PairedComparison {
  double median_delta = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double win_rate = 0.0;  // fraction of strictly positive deltas
  std::size_t n_windows = 0;
  std::size_t block_len = 0;
  std::size_t n_resamples = 0;
  std::uint64_t seed = 0;
};

// Median of a_j - b_j with a circular moving-block bootstrap 95% interval.
// Each resample draws ceil(n / L) block starts uniformly, concatenates the
// blocks and truncates to n. Resample r uses its own generator seeded from
// (seed, r). Throws SizeError on length mismatch or n < 2L.
PairedComparison paired_delta(std::span<const double> a, std::span<const double> b,
                              const BootstrapConfig& config = {});

}  // namespace xairan
