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

#include <array>
#include <cstddef>
#include <string_view>

#include <Eigen/Core>

namespace xairan {

// Row-major so that row t of an input matrix is the feature vector of
// timestep t, and flat index t * n + i addresses cell (t, i).
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// KPM feature columns, in the order they appear in traces and input rows.
enum class Feature : std::size_t { kTh = 0, kBler, kMcs, kRp, kSinr };

inline constexpr std::size_t kNumFeatures = 5;
inline constexpr std::size_t kDefaultWindow = 5;

inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "Th", "BLER", "MCS", "RP", "SINR"};

// One (timestep, feature) cell of an input window.
struct Cell {
  std::size_t t = 0;
  std::size_t i = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
};

}  // namespace xairan
