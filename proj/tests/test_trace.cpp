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

#include <gtest/gtest.h>

#include <random>
#include <sstream>
#include <string>

#include "xairan/errors.hpp"

namespace xairan {
namespace {

BurstConfig square_wave() {
  BurstConfig c;
  c.period = 20;
  c.duty = 0.5;
  c.th_high = 100;
  c.th_low = 10;
  c.noise_std = 0.0;
  c.length = 40;
  return c;
}

std::string to_csv(const std::vector<KpmSample>& trace) {
  std::ostringstream os;
  write_trace_csv(trace, os);
  return os.str();
}

// Parses the th column without going through read_trace_csv.
std::vector<double> th_column(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<double> th;
  while (std::getline(in, line)) {
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    th.push_back(std::stod(line.substr(a + 1, b - a - 1)));
  }
  return th;
}

double autocorrelation(const std::vector<double>& x, std::size_t lag) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    den += (x[j] - mean) * (x[j] - mean);
    if (j + lag < x.size()) num += (x[j] - mean) * (x[j + lag] - mean);
  }
  return num / den;
}

TEST(GenerateTrace, ZeroNoiseIsExactSquareWave) {
  const auto trace = generate_trace(square_wave());
  ASSERT_EQ(trace.size(), 40u);
  for (std::size_t t = 0; t < trace.size(); ++t) {
    const double expected = (t % 20) < 10 ? 100.0 : 10.0;
    EXPECT_EQ(trace[t].th, expected) << "t=" << t;
    EXPECT_EQ(trace[t].t, static_cast<std::int64_t>(t));
  }
}

TEST(GenerateTrace, ZeroNoiseIsPeriodicInEveryFeature) {
  BurstConfig c = square_wave();
  c.length = 200;
  c.period = 13;
  c.duty = 0.3;
  const auto trace = generate_trace(c);
  for (std::size_t t = 13; t < trace.size(); ++t) {
    EXPECT_EQ(trace[t].features(), trace[t - 13].features()) << "t=" << t;
  }
}

TEST(GenerateTrace, SameSeedIsBitIdentical) {
  BurstConfig c = square_wave();
  c.noise_std = 0.05;
  c.seed = 7;
  const auto a = generate_trace(c);
  const auto b = generate_trace(c);
  EXPECT_EQ(a, b);
  EXPECT_EQ(to_csv(a), to_csv(b));
  c.seed = 8;
  EXPECT_NE(to_csv(generate_trace(c)), to_csv(a));
}

TEST(GenerateTrace, LagPeriodAutocorrelationFromCsv) {
  BurstConfig c;
  c.period = 20;
  c.noise_std = 0.05;
  c.length = 2000;
  const auto th = th_column(to_csv(generate_trace(c)));
  ASSERT_EQ(th.size(), 2000u);
  EXPECT_GT(autocorrelation(th, 20), 0.8);
}

TEST(GenerateTrace, SinrTracksThroughputAndBlerOpposesSinr) {
  BurstConfig c;
  c.noise_std = 0.0;
  c.length = 40;
  const auto trace = generate_trace(c);
  const auto& high = trace[0];
  const auto& low = trace[10];
  EXPECT_DOUBLE_EQ(high.sinr, 20.0);
  EXPECT_DOUBLE_EQ(low.sinr, 10.0);
  EXPECT_LT(high.bler, low.bler);
  EXPECT_EQ(high.mcs, 20);
  EXPECT_EQ(low.mcs, 10);
  EXPECT_DOUBLE_EQ(high.rp, -90.0);
}

TEST(GenerateTrace, FuzzedConfigsAlwaysSatisfyInvariants) {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    BurstConfig c;
    c.period = 2 + static_cast<int>(u(rng) * 60);
    c.duty = 0.01 + 0.98 * u(rng);
    c.th_low = 200.0 * u(rng);
    c.th_high = c.th_low + 0.1 + 500.0 * u(rng);
    c.noise_std = 3.0 * u(rng);
    c.length = 50;
    c.seed = trial;
    for (const auto& s : generate_trace(c)) {
      EXPECT_NO_THROW(s.validate()) << "trial " << trial;
      EXPECT_GE(s.rp, -110.0);
      EXPECT_LE(s.rp, -70.0);
    }
  }
}

TEST(GenerateTrace, InvalidConfigNamesField) {
  const auto message = [](BurstConfig c) {
    try {
      generate_trace(c);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  BurstConfig c;
  c.period = 1;
  EXPECT_NE(message(c).find("period"), std::string::npos);
  c = BurstConfig{};
  c.duty = 1.0;
  EXPECT_NE(message(c).find("duty"), std::string::npos);
  c = BurstConfig{};
  c.th_high = 5;
  EXPECT_NE(message(c).find("th_high"), std::string::npos);
  c = BurstConfig{};
  c.noise_std = -0.1;
  EXPECT_NE(message(c).find("noise_std"), std::string::npos);
  c = BurstConfig{};
  c.th_low = -1;
  EXPECT_NE(message(c).find("th_low"), std::string::npos);
}

TEST(WindowIter, CountsAndTargets) {
  BurstConfig c = square_wave();
  c.noise_std = 0.05;
  auto trace = generate_trace(c);

  std::vector<KpmSample> ten(trace.begin(), trace.begin() + 10);
  EXPECT_EQ(window_iter(ten, 5, 1).size(), 5u);

  std::vector<KpmSample> six(trace.begin(), trace.begin() + 6);
  const auto one = window_iter(six, 5, 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].target, six[5].th);
  EXPECT_EQ(one[0].window.size(), 5u);

  std::vector<KpmSample> five(trace.begin(), trace.begin() + 5);
  EXPECT_TRUE(window_iter(five, 5, 1).empty());
}

TEST(WindowIter, PairUsesExpectedSamples) {
  BurstConfig c;
  c.length = 30;
  const auto trace = generate_trace(c);
  const auto pairs = window_iter(trace, 4, 3);
  ASSERT_EQ(pairs.size(), 30u - 4 - 3 + 1);
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    EXPECT_EQ(pairs[j].start, j);
    EXPECT_EQ(pairs[j].window[0], trace[j]);
    EXPECT_EQ(pairs[j].window[3], trace[j + 3]);
    EXPECT_EQ(pairs[j].target, trace[j + 3 + 3].th);
  }
}

TEST(KpmWindowTest, RejectsNonConsecutiveTimesteps) {
  std::vector<KpmSample> s(3);
  s[0].t = 0;
  s[1].t = 1;
  s[2].t = 3;
  EXPECT_THROW(KpmWindow{s}, ContractViolation);
  EXPECT_THROW(KpmWindow{std::vector<KpmSample>{}}, ContractViolation);
}

TEST(TraceCsv, RoundTripWithinNineDigits) {
  BurstConfig c;
  c.length = 300;
  const auto trace = generate_trace(c);
  std::istringstream in(to_csv(trace));
  const auto back = read_trace_csv(in);
  ASSERT_EQ(back.size(), trace.size());
  for (std::size_t j = 0; j < trace.size(); ++j) {
    EXPECT_EQ(back[j].t, trace[j].t);
    EXPECT_EQ(back[j].mcs, trace[j].mcs);
    EXPECT_NEAR(back[j].th, trace[j].th, 1e-8 * std::abs(trace[j].th) + 1e-12);
    EXPECT_NEAR(back[j].bler, trace[j].bler, 1e-8 * std::abs(trace[j].bler) + 1e-12);
    EXPECT_NEAR(back[j].rp, trace[j].rp, 1e-8 * std::abs(trace[j].rp));
    EXPECT_NEAR(back[j].sinr, trace[j].sinr, 1e-8 * std::abs(trace[j].sinr) + 1e-12);
  }
  // Once quantized, another cycle is the identity byte for byte.
  EXPECT_EQ(to_csv(back), to_csv(trace));
}

TEST(TraceCsv, HeaderOnlyIsEmptyTrace) {
  std::istringstream in("t,th,bler,mcs,rp,sinr\n");
  EXPECT_TRUE(read_trace_csv(in).empty());
}

TEST(TraceCsv, OutOfRangeBlerReportsLine) {
  std::istringstream in(
      "t,th,bler,mcs,rp,sinr\n"
      "0,50,0.1,12,-90,15\n"
      "1,50,1.5,12,-90,15\n");
  try {
    read_trace_csv(in);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_STREQ(e.what(), "bler out of range, line 3");
  }
}

TEST(TraceCsv, MalformedRowsReportLine) {
  std::istringstream bad_number("t,th,bler,mcs,rp,sinr\n0,abc,0.1,12,-90,15\n");
  try {
    read_trace_csv(bad_number);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  std::istringstream short_row("t,th,bler,mcs,rp,sinr\n0,1,0.1\n");
  EXPECT_THROW(read_trace_csv(short_row), ParseError);
  std::istringstream bad_header("t,th,bler\n");
  EXPECT_THROW(read_trace_csv(bad_header), ParseError);
  std::istringstream bad_mcs("t,th,bler,mcs,rp,sinr\n0,1,0.1,29,-90,15\n");
  EXPECT_THROW(read_trace_csv(bad_mcs), ValidationError);
}

}  // namespace
}  // namespace xairan
