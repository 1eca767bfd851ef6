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

#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"
#include "xairan/errors.hpp"

namespace xairan {
namespace {

using testing::random_matrix;
using testing::random_params;

ExplainInput zero_baseline(const Matrix& x) {
  return ExplainInput{x, Matrix::Zero(x.rows(), x.cols()), "normalized-zero"};
}

Attribution with_e(Matrix e, Method method = Method::kIg) {
  Attribution a;
  a.e = std::move(e);
  a.method = method;
  return a;
}

TEST(Surrogate, InterpolatesAnchorAndSkipsTinyDeltas) {
  Matrix e(1, 3);
  e << 2.0, 5.0, -1.0;
  Matrix x(1, 3);
  x << 1.0, 0.5, 3.0;
  Matrix b(1, 3);
  b << 0.0, 0.5, 1.0;
  const LinearSurrogate g = surrogate_from_attribution(e, x, b, 10.0);
  EXPECT_DOUBLE_EQ(g.w(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(g.w(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(g.w(0, 2), -0.5);
  EXPECT_NEAR(g(x), 10.0, 1e-12);
}

TEST(LocalR2Test, IgOnLinearModelIsExact) {
  const auto p = testing::linear_params(5, 4, 3);
  Normalizer norm = Normalizer::identity(5);
  norm.target_std = 17.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto in = zero_baseline(random_matrix(5, 5, s));
    const Attribution ig = explain_ig(p, norm, in, 5);
    const LocalR2 r2 = local_r2(p, norm, in, ig, NeighborhoodConfig{});
    EXPECT_NEAR(r2.value, 1.0, 1e-9);
    EXPECT_FALSE(r2.degenerate);
    for (const LocalR2& f : featurewise_fidelity(p, norm, in, ig, NeighborhoodConfig{})) {
      EXPECT_NEAR(f.value, 1.0, 1e-9);
    }
  }
}

TEST(LocalR2Test, ZeroAttributionScoresLow) {
  const auto p = random_params(5, 8, 4);
  const Normalizer norm = Normalizer::identity(5);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto in = zero_baseline(random_matrix(5, 5, 50 + s));
    NeighborhoodConfig cfg;
    cfg.seed = s;
    const LocalR2 r2 = local_r2(p, norm, in, with_e(Matrix::Zero(5, 5)), cfg);
    EXPECT_LE(r2.value, 0.1);
  }
}

TEST(LocalR2Test, FlatModelMarksDegenerate) {
  auto p = random_params(5, 4, 5);
  p.out_w.setZero();
  const Normalizer norm = Normalizer::identity(5);
  const auto in = zero_baseline(random_matrix(5, 5, 6));
  EXPECT_TRUE(local_r2(p, norm, in, with_e(Matrix::Constant(5, 5, 0.3)), {}).degenerate);
  const LocalR2 both_flat = local_r2(p, norm, in, with_e(Matrix::Zero(5, 5)), {});
  EXPECT_FALSE(both_flat.degenerate);
  EXPECT_EQ(both_flat.value, 1.0);
}

TEST(LocalR2Test, ReportedValueIsFloored) {
  LocalR2 r{-250.0, false};
  EXPECT_EQ(r.reported(), kR2ReportFloor);
  r.value = -3.0;
  EXPECT_EQ(r.reported(), -3.0);
}

TEST(LocalR2Test, SameSeedSameValue) {
  const auto p = random_params(5, 8, 7);
  const Normalizer norm = Normalizer::identity(5);
  const auto in = zero_baseline(random_matrix(5, 5, 8));
  const Attribution a = explain_ig(p, norm, in, 5);
  EXPECT_EQ(local_r2(p, norm, in, a, {}).value, local_r2(p, norm, in, a, {}).value);
  NeighborhoodConfig bad;
  bad.n_samples = 1;
  EXPECT_THROW(local_r2(p, norm, in, a, bad), ConfigError);
}

TEST(TopCells, RankingMassAndTies) {
  Matrix e(2, 3);
  e << 1.0, -4.0, 0.0,
      2.0, 2.0, 1.0;
  // |e| total 10. Ranked: (0,1)=4, (1,0)=2, (1,1)=2, (0,0)=1, (1,2)=1, (0,2)=0.
  const auto top = top_cells(e, 0.81);
  ASSERT_EQ(top.size(), 4u);
  EXPECT_EQ(top[0].t, 0u);
  EXPECT_EQ(top[0].i, 1u);
  EXPECT_EQ(top[1].t, 1u);
  EXPECT_EQ(top[1].i, 0u);
  EXPECT_EQ(top[2].i, 1u);
  EXPECT_EQ(top[3].t, 0u);
  EXPECT_EQ(top[3].i, 0u);
  EXPECT_EQ(top_cells(e, 0.8).size(), 3u);
  EXPECT_EQ(top_cells(e, 0.4).size(), 1u);
  EXPECT_EQ(top_cells(e, 0.41).size(), 2u);
}

TEST(TopK, KeepAllGivesPhiOne) {
  const auto p = random_params(5, 8, 9);
  const Normalizer norm = Normalizer::identity(5);
  const auto in = zero_baseline(random_matrix(5, 5, 10));
  const Attribution a = with_e(Matrix::Constant(5, 5, 1.0));
  const TopKFidelity f = topk_fidelity(p, norm, in, a, 1.0);
  EXPECT_EQ(f.k_used, 25u);
  EXPECT_EQ(f.phi, 1.0);
  EXPECT_EQ(f.y_full, f.y_topk);
}

TEST(TopK, DegenerateDenominatorThrows) {
  auto p = random_params(5, 4, 11);
  p.out_w.setZero();
  p.out_b = 0.0;
  const auto in = zero_baseline(random_matrix(5, 5, 12));
  EXPECT_THROW(topk_fidelity(p, Normalizer::identity(5), in, with_e(Matrix::Ones(5, 5))),
               DegenerateError);
}

TEST(TopK, PhiMatchesDefinition) {
  const auto p = random_params(5, 8, 13);
  const Normalizer norm = Normalizer::identity(5);
  const auto in = zero_baseline(random_matrix(5, 5, 14));
  const Attribution a = explain_ig(p, norm, in, 16);
  const TopKFidelity f = topk_fidelity(p, norm, in, a, 0.8);
  const auto keep = top_cells(a.e, 0.8);
  const double y_topk = forward_masked(p, in.input, norm, keep, in.baseline);
  const double y_full = predict(p, in.input, norm);
  EXPECT_EQ(f.k_used, keep.size());
  EXPECT_DOUBLE_EQ(f.phi, 1.0 - std::abs(y_full - y_topk) / std::abs(y_full));
}

FidelityReport report_with(std::size_t index, double r2, bool degenerate = false) {
  FidelityReport r;
  r.window_index = index;
  r.r2_loc = LocalR2{r2, degenerate};
  return r;
}

TEST(Temporal, SlidingSeriesAndExclusions) {
  std::vector<FidelityReport> reports = {report_with(0, 1.0), report_with(1, 0.5),
                                         report_with(2, 0.0, true), report_with(3, -20.0),
                                         report_with(4, 0.25)};
  const TemporalFidelity t1 = summarize_temporal(Method::kIg, reports, 1);
  ASSERT_EQ(t1.series.size(), 4u);
  EXPECT_EQ(t1.excluded_r2, 1u);
  EXPECT_EQ(t1.series[2], kR2ReportFloor);
  EXPECT_EQ(t1.series_index[2], 3u);
  EXPECT_DOUBLE_EQ(t1.mean, (1.0 + 0.5 - 10.0 + 0.25) / 4.0);

  const TemporalFidelity t2 = summarize_temporal(Method::kIg, reports, 2);
  ASSERT_EQ(t2.series.size(), 4u);
  EXPECT_DOUBLE_EQ(t2.series[0], 0.75);
  EXPECT_DOUBLE_EQ(t2.series[1], 0.5);
  EXPECT_DOUBLE_EQ(t2.series[2], -10.0);
  EXPECT_DOUBLE_EQ(t2.series[3], (-10.0 + 0.25) / 2.0);

  EXPECT_THROW(summarize_temporal(Method::kIg, {report_with(0, 0.0, true)}, 1), SizeError);
}

TEST(Temporal, WindowResultsIndependentOfRange) {
  const auto& setup = testing::default_setup();
  TemporalConfig cfg;
  cfg.explainer.method = Method::kShap;
  cfg.explainer.m = 2;
  cfg.neighborhood.n_samples = 16;
  std::span<const WindowTarget> all(setup.windows);
  const auto full = temporal_fidelity(all.first(12), setup.model.params, setup.model.norm, cfg);
  const auto part = temporal_fidelity(all.first(6), setup.model.params, setup.model.norm, cfg);
  for (std::size_t j = 0; j < 6; ++j) {
    EXPECT_EQ(full.windows[j].r2_loc.value, part.windows[j].r2_loc.value);
    EXPECT_EQ(full.windows[j].window_index, j);
  }
  cfg.explainer.method = Method::kNone;
  EXPECT_THROW(temporal_fidelity(all.first(3), setup.model.params, setup.model.norm, cfg),
               ConfigError);
}

TEST(Evaluate, ReportCarriesCompletenessGap) {
  const auto p = random_params(5, 8, 15);
  const Normalizer norm = Normalizer::identity(5);
  const auto in = zero_baseline(random_matrix(5, 5, 16));
  const Attribution a = explain_ig(p, norm, in, 4);
  const FidelityReport r = evaluate_fidelity(p, norm, in, a, {}, 3, true);
  EXPECT_EQ(r.window_index, 3u);
  EXPECT_EQ(r.per_feature_r2.size(), 5u);
  EXPECT_DOUBLE_EQ(r.completeness_gap, completeness_gap(p, norm, in, a));
  ASSERT_TRUE(r.phi.has_value());
}

}  // namespace
}  // namespace xairan
