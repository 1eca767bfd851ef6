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

#include "xairan/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string_view>

#include "xairan/errors.hpp"

namespace xairan {
namespace {

// Nominal feature ranges that scale noise_std for each feature.
constexpr double kSinrBase = 15.0;   // dB
constexpr double kSinrSwing = 10.0;  // dB across the th_low..th_high span
constexpr double kSinrRange = 20.0;  // dB
constexpr double kBlerRange = 0.5;
constexpr double kRpMin = -110.0;
constexpr double kRpMax = -70.0;
constexpr double kRpStart = -90.0;
// Random-walk step as a fraction of the RP range per unit of noise_std.
constexpr double kRpStepScale = 0.25;
constexpr int kMcsMax = 28;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 9);
  if (ec != std::errc{}) throw IntegrityError("failed to format double");
  return std::string(buf, ptr);
}

template <typename T>
T parse_field(std::string_view text, std::string_view field, std::size_t line) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw ParseError("cannot parse " + std::string(field) + " '" + std::string(text) +
                     "', line " + std::to_string(line));
  }
  return value;
}

constexpr std::string_view kCsvHeader = "t,th,bler,mcs,rp,sinr";

}  // namespace

std::array<double, kNumFeatures> KpmSample::features() const {
  return {th, bler, static_cast<double>(mcs), rp, sinr};
}

void KpmSample::validate() const {
  if (!std::isfinite(th) || th < 0.0) throw ValidationError("th out of range");
  if (!std::isfinite(bler) || bler < 0.0 || bler > 1.0) throw ValidationError("bler out of range");
  if (mcs < 0 || mcs > kMcsMax) throw ValidationError("mcs out of range");
  if (!std::isfinite(rp)) throw ValidationError("rp out of range");
  if (!std::isfinite(sinr)) throw ValidationError("sinr out of range");
}

KpmWindow::KpmWindow(std::vector<KpmSample> samples) : samples_(std::move(samples)) {
  require(!samples_.empty(), "KpmWindow: empty window");
  for (std::size_t j = 1; j < samples_.size(); ++j) {
    require(samples_[j].t == samples_[j - 1].t + 1, "KpmWindow: timesteps not consecutive");
  }
}

Matrix KpmWindow::to_matrix() const {
  Matrix x(static_cast<Eigen::Index>(samples_.size()), static_cast<Eigen::Index>(kNumFeatures));
  for (std::size_t t = 0; t < samples_.size(); ++t) {
    const auto f = samples_[t].features();
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      x(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) = f[i];
    }
  }
  return x;
}

void BurstConfig::validate() const {
  if (period < 2) throw ConfigError("period must be >= 2");
  if (!(duty > 0.0 && duty < 1.0)) throw ConfigError("duty must be in (0, 1)");
  if (!(th_low >= 0.0)) throw ConfigError("th_low must be >= 0");
  if (!(th_high > th_low)) throw ConfigError("th_high must exceed th_low");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw ConfigError("noise_std must be >= 0");
}

std::vector<KpmSample> generate_trace(const BurstConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double span = config.th_high - config.th_low;
  const double th_mid = 0.5 * (config.th_high + config.th_low);
  const double high_steps = config.duty * config.period;

  std::vector<KpmSample> trace;
  trace.reserve(config.length);
  double rp = kRpStart;
  for (std::size_t step = 0; step < config.length; ++step) {
    // Draw order is fixed: th, sinr, bler, rp.
    const double n_th = gauss(rng);
    const double n_sinr = gauss(rng);
    const double n_bler = gauss(rng);
    const double n_rp = gauss(rng);

    const auto phase = static_cast<double>(step % static_cast<std::size_t>(config.period));
    const double th_clean = phase < high_steps ? config.th_high : config.th_low;

    KpmSample s;
    s.t = static_cast<std::int64_t>(step);
    s.th = std::max(0.0, th_clean + config.noise_std * span * n_th);
    s.sinr = kSinrBase + kSinrSwing * (s.th - th_mid) / span + config.noise_std * kSinrRange * n_sinr;
    s.bler = std::clamp(0.5 * sigmoid(-(s.sinr - 10.0) / 3.0) + config.noise_std * kBlerRange * n_bler,
                        0.0, 1.0);
    s.mcs = static_cast<int>(std::clamp(std::round(s.sinr), 0.0, static_cast<double>(kMcsMax)));
    rp = std::clamp(rp + config.noise_std * kRpStepScale * (kRpMax - kRpMin) * n_rp, kRpMin, kRpMax);
    s.rp = rp;
    trace.push_back(s);
  }
  return trace;
}

std::vector<WindowTarget> window_iter(std::span<const KpmSample> trace, std::size_t window,
                                      std::size_t horizon) {
  require(window >= 1, "window_iter: window must be >= 1");
  require(horizon >= 1, "window_iter: horizon must be >= 1");
  std::vector<WindowTarget> out;
  if (trace.size() < window + horizon) return out;
  const std::size_t count = trace.size() - window - horizon + 1;
  out.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    std::vector<KpmSample> samples(trace.begin() + static_cast<std::ptrdiff_t>(j),
                                   trace.begin() + static_cast<std::ptrdiff_t>(j + window));
    out.push_back(WindowTarget{KpmWindow(std::move(samples)), trace[j + window - 1 + horizon].th, j});
  }
  return out;
}

void write_trace_csv(std::span<const KpmSample> trace, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& s : trace) {
    out << s.t << ',' << format_double(s.th) << ',' << format_double(s.bler) << ',' << s.mcs << ','
        << format_double(s.rp) << ',' << format_double(s.sinr) << '\n';
  }
}

void write_trace_csv(std::span<const KpmSample> trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_trace_csv(trace, out);
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<KpmSample> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing CSV header, line 1");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) {
    throw ParseError("unexpected CSV header '" + line + "', expected '" + std::string(kCsvHeader) +
                     "', line 1");
  }

  std::vector<KpmSample> trace;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 6) {
      throw ParseError("expected 6 fields, got " + std::to_string(fields.size()) + ", line " +
                       std::to_string(line_no));
    }

    KpmSample s;
    s.t = parse_field<std::int64_t>(fields[0], "t", line_no);
    s.th = parse_field<double>(fields[1], "th", line_no);
    s.bler = parse_field<double>(fields[2], "bler", line_no);
    s.mcs = parse_field<int>(fields[3], "mcs", line_no);
    s.rp = parse_field<double>(fields[4], "rp", line_no);
    s.sinr = parse_field<double>(fields[5], "sinr", line_no);
    try {
      s.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(std::string(e.what()) + ", line " + std::to_string(line_no));
    }
    trace.push_back(s);
  }
  return trace;
}

std::vector<KpmSample> read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_trace_csv(in);
}

}  // namespace xairan
