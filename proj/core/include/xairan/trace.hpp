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
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "xairan/types.hpp"

namespace xairan {

// One timestep of the five KPM features.
struct KpmSample {
  std::int64_t t = 0;
  double th = 0.0;    // downlink throughput, Mbps
  double bler = 0.0;  // block error rate in [0, 1]
  int mcs = 0;        // 0..28
  double rp = 0.0;    // received reference power, dBm
  double sinr = 0.0;  // dB

  // Feature values in kFeatureNames order.
  std::array<double, kNumFeatures> features() const;

  // Throws ValidationError naming the first field out of range.
  void validate() const;

  friend bool operator==(const KpmSample&, const KpmSample&) = default;
};

// W consecutive samples feeding one prediction.
class KpmWindow {
 public:
  // Throws ContractViolation unless timesteps are strictly consecutive and
  // the window is non-empty.
  explicit KpmWindow(std::vector<KpmSample> samples);

  std::size_t size() const { return samples_.size(); }
  const std::vector<KpmSample>& samples() const { return samples_; }
  const KpmSample& operator[](std::size_t t) const { return samples_[t]; }

  // Raw (unnormalized) W x kNumFeatures matrix.
  Matrix to_matrix() const;

 private:
  std::vector<KpmSample> samples_;
};

struct BurstConfig {
  int period = 20;          // steps per full high+low cycle
  double duty = 0.5;        // fraction of the cycle spent at th_high
  double th_high = 100.0;   // Mbps
  double th_low = 10.0;     // Mbps
  double noise_std = 0.05;  // fraction of each feature's nominal range
  std::size_t length = 2000;
  std::uint64_t seed = 42;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// Periodic burst throughput with SINR, BLER and MCS coupled to it and RP as a
// bounded random walk. Deterministic for a fixed config.
std::vector<KpmSample> generate_trace(const BurstConfig& config);

struct WindowTarget {
  KpmWindow window;
  double target = 0.0;     // th at the step `horizon` after the window's end
  std::size_t start = 0;   // index of the window's first sample in the trace
};

// Sliding windows with stride 1. Returns an empty vector when the trace is
// too short to yield a single pair.
std::vector<WindowTarget> window_iter(std::span<const KpmSample> trace,
                                      std::size_t window = kDefaultWindow,
                                      std::size_t horizon = 1);

// CSV with header `t,th,bler,mcs,rp,sinr`. Floats use 9 significant digits.
void write_trace_csv(std::span<const KpmSample> trace, std::ostream& out);
void write_trace_csv(std::span<const KpmSample> trace, const std::filesystem::path& path);
std::vector<KpmSample> read_trace_csv(std::istream& in);
std::vector<KpmSample> read_trace_csv(const std::filesystem::path& path);

}  // namespace xairan
