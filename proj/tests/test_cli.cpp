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

#include "xairan/cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace xairan::cli {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / ("xairan_cli_" + std::string(info->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    unsetenv("XAI_RAN_SEED");
  }
  void TearDown() override {
    unsetenv("XAI_RAN_SEED");
    fs::remove_all(root_);
  }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return cli_main(args, out_, err_);
  }

  std::string dir(const std::string& name) const { return (root_ / name).string(); }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path root_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST_F(CliTest, GenTraceTwiceIsIdentical) {
  ASSERT_EQ(run({"gen-trace", "--seed", "42", "--out-dir", dir("a"), "--out", "t1.csv"}), 0);
  ASSERT_EQ(run({"gen-trace", "--seed", "42", "--out-dir", dir("a"), "--out", "t2.csv"}), 0);
  const std::string first = slurp(root_ / "a" / "t1.csv");
  EXPECT_FALSE(first.empty());
  EXPECT_EQ(first, slurp(root_ / "a" / "t2.csv"));
  EXPECT_TRUE(fs::exists(root_ / "a" / "config.json"));
}

TEST_F(CliTest, EndToEndByteIdentical) {
  for (const std::string run_dir : {"x", "y"}) {
    const std::string d = dir(run_dir);
    ASSERT_EQ(run({"gen-trace", "--seed", "7", "--length", "400", "--out-dir", d}), 0);
    ASSERT_EQ(run({"train", "--seed", "7", "--trace", "trace.csv", "--epochs", "50",
                   "--out-dir", d}), 0);
    ASSERT_EQ(run({"run", "--seed", "7", "--trace", "trace.csv", "--checkpoint", "model.ckpt",
                   "--method", "shap", "--m", "4", "--canonical", "--out-dir", d}), 0)
        << err_.str();
  }
  for (const char* file : {"trace.csv", "model.ckpt", "pipeline.jsonl", "config.json"}) {
    const std::string a = slurp(root_ / "x" / file);
    EXPECT_FALSE(a.empty()) << file;
    EXPECT_EQ(a, slurp(root_ / "y" / file)) << file;
  }
  EXPECT_EQ(slurp(root_ / "x" / "pipeline.jsonl").find("t_inf"), std::string::npos);
}

TEST_F(CliTest, SeedEnvironmentVariable) {
  ASSERT_EQ(run({"gen-trace", "--seed", "9", "--length", "50", "--out-dir", dir("flag")}), 0);
  setenv("XAI_RAN_SEED", "9", 1);
  ASSERT_EQ(run({"gen-trace", "--length", "50", "--out-dir", dir("env")}), 0);
  EXPECT_EQ(slurp(root_ / "flag" / "trace.csv"), slurp(root_ / "env" / "trace.csv"));
  const auto config = nlohmann::json::parse(slurp(root_ / "env" / "config.json"));
  EXPECT_EQ(config["gen-trace"]["seed_source"], "env");
  EXPECT_EQ(config["gen-trace"]["trace"]["seed"], 9);
  // An explicit flag still wins.
  ASSERT_EQ(run({"gen-trace", "--seed", "10", "--length", "50", "--out-dir", dir("both")}), 0);
  EXPECT_NE(slurp(root_ / "both" / "trace.csv"), slurp(root_ / "env" / "trace.csv"));
  setenv("XAI_RAN_SEED", "abc", 1);
  EXPECT_EQ(run({"gen-trace", "--out-dir", dir("bad")}), 2);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"frobnicate"}), 2);
  EXPECT_EQ(run({"gen-trace", "--no-such-flag"}), 2);
  EXPECT_EQ(run({"gen-trace", "--length", "ten"}), 2);
  EXPECT_EQ(run({"gen-trace", "--period", "1", "--out-dir", dir("p")}), 2);
  EXPECT_NE(err_.str().find("period"), std::string::npos);
  EXPECT_EQ(run({"run", "--method", "lime", "--out-dir", dir("m")}), 2);
  EXPECT_EQ(run({"run", "--checkpoint", "missing.ckpt", "--out-dir", dir("m")}), 1);
  EXPECT_NE(err_.str().find("missing.ckpt"), std::string::npos);
  EXPECT_EQ(run({"--help"}), 0);
}

TEST_F(CliTest, CompareWritesTableOneRows) {
  ASSERT_EQ(run({"compare", "--methods", "hybrid,shap,attention", "--seed", "42", "--length",
                 "300", "--windows", "80", "--resamples", "200", "--out-dir", dir("c")}),
            0)
      << err_.str();
  const std::string md = slurp(root_ / "c" / "table1.md");
  EXPECT_NE(md.find("| Ours − SHAP |"), std::string::npos);
  EXPECT_NE(md.find("| Ours − Attention |"), std::string::npos);
  EXPECT_NE(md.find("Win Rate"), std::string::npos);
  const auto table = nlohmann::json::parse(slurp(root_ / "c" / "table1.json"));
  ASSERT_EQ(table.size(), 2u);
  EXPECT_EQ(table[0]["n_windows"], 80);
  const std::string series = slurp(root_ / "c" / "series.csv");
  EXPECT_EQ(series.rfind("window,method,r2,phi,k_used\n", 0), 0u);
  EXPECT_EQ(run({"compare", "--methods", "hybrid", "--out-dir", dir("c")}), 2);
}

TEST_F(CliTest, EvaluateReportsCompletenessGap) {
  for (const std::string k : {"512", "5"}) {
    ASSERT_EQ(run({"evaluate", "--method", "ig", "--k", k, "--length", "300", "--windows", "30",
                   "--out-dir", dir("e")}),
              0)
        << err_.str();
    const std::string md = slurp(root_ / "e" / ("evaluate_ig_k" + k + ".md"));
    EXPECT_NE(md.find("completeness gap"), std::string::npos) << k;
    const auto j = nlohmann::json::parse(slurp(root_ / "e" / ("evaluate_ig_k" + k + ".json")));
    EXPECT_TRUE(j.contains("completeness_gap_median"));
  }
  const auto k512 = nlohmann::json::parse(slurp(root_ / "e" / "evaluate_ig_k512.json"));
  const auto k5 = nlohmann::json::parse(slurp(root_ / "e" / "evaluate_ig_k5.json"));
  EXPECT_LT(k512["completeness_gap_median"].get<double>(),
            k5["completeness_gap_median"].get<double>());
  const auto config = nlohmann::json::parse(slurp(root_ / "e" / "config.json"));
  EXPECT_TRUE(config["evaluate"].contains("ig_k512"));
  EXPECT_TRUE(config["evaluate"].contains("ig_k5"));
}

TEST_F(CliTest, LatencyTableHasAllRows) {
  ASSERT_EQ(run({"latency-table", "--length", "300", "--cycles", "40", "--warmup", "5",
                 "--out-dir", dir("l")}),
            0)
      << err_.str();
  const std::string md = slurp(root_ / "l" / "table2.md");
  for (const char* row : {"Non-XAI (Baseline)", "Attention only", "Ours k=5", "SHAP m=16"}) {
    EXPECT_NE(md.find(row), std::string::npos) << row;
  }
  const auto fit = nlohmann::json::parse(slurp(root_ / "l" / "latency_fit.json"));
  EXPECT_TRUE(fit.contains("alpha_attn"));
  EXPECT_TRUE(fit.contains("reference_testbed"));
}

TEST_F(CliTest, ReportProvenanceGuard) {
  const std::vector<std::string> small = {"--length", "300", "--windows", "40", "--resamples",
                                          "100"};
  auto compare_in = [&](const std::string& d, const std::string& seed) {
    std::vector<std::string> args = {"compare", "--seed", seed, "--out-dir", dir(d)};
    args.insert(args.end(), small.begin(), small.end());
    return run(args);
  };
  ASSERT_EQ(compare_in("s1", "1"), 0);
  ASSERT_EQ(compare_in("s2", "2"), 0);
  ASSERT_EQ(compare_in("s1b", "1"), 0);

  EXPECT_EQ(run({"report", "--runs", "s1,s2", "--out-dir", root_.string()}), 1);
  EXPECT_NE(err_.str().find("--force"), std::string::npos);
  EXPECT_FALSE(fs::exists(root_ / "report.md"));

  ASSERT_EQ(run({"report", "--runs", "s1,s2", "--force", "--out-dir", root_.string()}), 0);
  EXPECT_NE(slurp(root_ / "report.md").find("Warning"), std::string::npos);
  EXPECT_TRUE(fs::exists(root_ / "s1-series.csv"));

  ASSERT_EQ(run({"report", "--runs", "s1,s1b", "--out-dir", root_.string()}), 0);
  EXPECT_EQ(slurp(root_ / "report.md").find("Warning"), std::string::npos);
}

TEST_F(CliTest, ReportComputesBothTables) {
  ASSERT_EQ(run({"report", "--length", "300", "--windows", "40", "--cycles", "30", "--out-dir",
                 dir("r")}),
            0)
      << err_.str();
  const std::string md = slurp(root_ / "r" / "report.md");
  EXPECT_NE(md.find("Ours − SHAP"), std::string::npos);
  EXPECT_NE(md.find("SHAP m=16"), std::string::npos);
  EXPECT_TRUE(fs::exists(root_ / "r" / "series.csv"));
  EXPECT_TRUE(fs::exists(root_ / "r" / "table2.csv"));
}

}  // namespace
}  // namespace xairan::cli
