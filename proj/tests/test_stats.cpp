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

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "xairan/errors.hpp"

namespace xairan {
namespace {

TEST(Summarize, KnownValues) {
  const std::vector<double> v = {2, 4, 4, 4, 5, 5, 7, 9};
  const Summary s = summarize(v, 3);
  EXPECT_DOUBLE_EQ(s.mean, 5.0);
  EXPECT_DOUBLE_EQ(s.std, 2.0);
  EXPECT_EQ(s.min, 2.0);
  EXPECT_EQ(s.max, 9.0);
  EXPECT_EQ(s.count, 8u);
  EXPECT_EQ(s.excluded_count, 3u);
  EXPECT_THROW(summarize(std::vector<double>{}), SizeError);
}

TEST(Summarize, PermutationInvariantBitwise) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1e3);
  std::vector<double> v(1000);
  for (double& x : v) x = g(rng);
  const Summary base = summarize(v);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(v.begin(), v.end(), rng);
    const Summary s = summarize(v);
    EXPECT_EQ(s.mean, base.mean);
    EXPECT_EQ(s.std, base.std);
  }
}

TEST(Percentiles, MedianAndInterpolation) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  const std::vector<double> sorted = {10, 20, 30, 40, 50};
  EXPECT_DOUBLE_EQ(percentile_sorted(sorted, 0.0), 10.0);
  EXPECT_DOUBLE_EQ(percentile_sorted(sorted, 1.0), 50.0);
  EXPECT_DOUBLE_EQ(percentile_sorted(sorted, 0.5), 30.0);
  EXPECT_DOUBLE_EQ(percentile_sorted(sorted, 0.1), 14.0);
  EXPECT_DOUBLE_EQ(percentile_sorted(sorted, 0.975), 49.0);
}

TEST(PairedDelta, ConstantShiftHasDegenerateInterval) {
  std::vector<double> a(100);
  std::vector<double> b(100);
  for (std::size_t j = 0; j < a.size(); ++j) {
    b[j] = 0.01 * static_cast<double>(j);
    a[j] = b[j] + 0.25;
  }
  const PairedComparison c = paired_delta(a, b);
  EXPECT_NEAR(c.median_delta, 0.25, 1e-12);
  EXPECT_NEAR(c.ci_low, 0.25, 1e-12);
  EXPECT_NEAR(c.ci_high, 0.25, 1e-12);
  EXPECT_EQ(c.win_rate, 1.0);
  EXPECT_EQ(c.n_windows, 100u);
  EXPECT_EQ(c.block_len, 10u);
  EXPECT_EQ(c.n_resamples, 1000u);
}

TEST(PairedDelta, TiesDoNotCountAsWins) {
  std::vector<double> a = {1, 1, 1, 1, 2, 2, 2, 2, 0, 0};
  std::vector<double> b = {1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
  BootstrapConfig cfg;
  cfg.block_len = 2;
  cfg.resamples = 50;
  EXPECT_DOUBLE_EQ(paired_delta(a, b, cfg).win_rate, 0.4);
}

TEST(PairedDelta, SizeChecks) {
  std::vector<double> a(19, 1.0);
  std::vector<double> b(19, 0.0);
  EXPECT_THROW(paired_delta(a, b), SizeError);
  std::vector<double> c(20, 0.0);
  EXPECT_THROW(paired_delta(a, c), SizeError);
  a.push_back(1.0);
  EXPECT_NO_THROW(paired_delta(a, c));
}

TEST(PairedDelta, SameSeedSameInterval) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.1, 1.0);
  std::vector<double> a(200);
  std::vector<double> b(200);
  for (std::size_t j = 0; j < a.size(); ++j) {
    a[j] = g(rng);
    b[j] = g(rng);
  }
  const PairedComparison x = paired_delta(a, b);
  const PairedComparison y = paired_delta(a, b);
  EXPECT_EQ(x.ci_low, y.ci_low);
  EXPECT_EQ(x.ci_high, y.ci_high);
  BootstrapConfig other;
  other.seed = 43;
  const PairedComparison z = paired_delta(a, b, other);
  EXPECT_EQ(z.median_delta, x.median_delta);
  EXPECT_TRUE(z.ci_low != x.ci_low || z.ci_high != x.ci_high);
  EXPECT_LE(x.ci_low, x.median_delta);
  EXPECT_GE(x.ci_high, x.median_delta);
}

TEST(PairedDelta, IidCoverage) {
  int covered = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    std::mt19937_64 rng(10000 + trial);
    std::normal_distribution<double> g(0.4, 0.1);
    std::vector<double> a(500);
    std::vector<double> b(500, 0.0);
    for (double& x : a) x = g(rng);
    BootstrapConfig cfg;
    cfg.seed = trial;
    const PairedComparison c = paired_delta(a, b, cfg);
    if (c.ci_low <= 0.4 && 0.4 <= c.ci_high) ++covered;
  }
  EXPECT_GE(covered, 90);
}

}  // namespace
}  // namespace xairan
