// Copyright 2026 The miaudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "json.hpp"
#include "miaudit/cli.h"
#include "miaudit/io.h"
#include "miaudit/rng.h"
#include "test_util.h"

namespace miaudit {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun Cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

json LoadJson(const fs::path& p) { return json::parse(ReadFileToString(p)); }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override { dir_ = testing::ScratchDir(); }
  std::string P(const std::string& name) const { return (dir_ / name).string(); }

  // 100 train + 100 test records in 6-d, samples with rho = 0.5.
  void Simulate(const std::string& sub, const std::string& rho = "0.5",
                const std::string& sigma = "0.05") {
    const CliRun r = Cli({"--seed", "7", "simulate", "--dim", "6",
                       "--train-pool-size", "100", "--test-pool-size", "100",
                       "--rho", rho, "--sigma", sigma, "--n", "2000",
                       "--out-dir", P(sub)});
    ASSERT_EQ(r.code, kExitOk) << r.err;
  }

  fs::path dir_;
};

TEST_F(CliTest, FitPcaDeterministic) {
  Rng rng(1);
  WriteMatrix(testing::RandomMatrix(50, 8, rng, -1, 1), P("ref.miam"));
  ASSERT_EQ(Cli({"fit-pca", "--reference", P("ref.miam"), "--k", "3",
                 "--out", P("a.pca")}).code, kExitOk);
  ASSERT_EQ(Cli({"fit-pca", "--reference", P("ref.miam"), "--k", "3",
                 "--out", P("b.pca")}).code, kExitOk);
  EXPECT_EQ(ReadFileToString(P("a.pca")), ReadFileToString(P("b.pca")));
  EXPECT_TRUE(fs::exists(P("a.pca.manifest.json")));

  const CliRun bad = Cli({"fit-pca", "--reference", P("ref.miam"), "--k", "9",
                       "--out", P("c.pca")});
  EXPECT_EQ(bad.code, kExitDataError);
  EXPECT_NE(bad.err.find("RankError"), std::string::npos) << bad.err;
}

TEST_F(CliTest, AttackMedianFlagsHalfTheRecords) {
  Simulate("sim");
  const CliRun r = Cli({"attack", "--kind", "mc-eps", "--records",
                     P("sim/records.miam"), "--ids", P("sim/records.ids.csv"),
                     "--samples", P("sim/samples.miam"), "--heuristic",
                     "median", "--out", P("s.csv")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const ScoreVector s = ReadScores(P("s.csv"));
  ASSERT_EQ(s.size(), 200u);
  int positive = 0;
  for (const auto& e : s.entries()) positive += e.score > 0;
  EXPECT_EQ(positive, 100);
  const json m = LoadJson(P("s.csv.manifest.json"));
  EXPECT_TRUE(m.contains("resolved_epsilon"));
  EXPECT_EQ(m["inputs"]["samples"]["sha256"],
            FileSha256(P("sim/samples.miam")));

  // Same inputs and flags give byte-identical scores.
  ASSERT_EQ(Cli({"attack", "--kind", "mc-eps", "--records",
                 P("sim/records.miam"), "--ids", P("sim/records.ids.csv"),
                 "--samples", P("sim/samples.miam"), "--heuristic", "median",
                 "--threads", "2", "--out", P("s2.csv")}).code,
            kExitOk);
  EXPECT_EQ(ReadFileToString(P("s.csv")), ReadFileToString(P("s2.csv")));
}

TEST_F(CliTest, ScoreFilePassthrough) {
  testing::WriteText(dir_ / "in.csv", "record_id,score\na,0.5\nb,-1\nc,3\n");
  const CliRun r = Cli({"attack", "--kind", "score-file", "--scores-in",
                     P("in.csv"), "--out", P("out.csv")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const ScoreVector s = ReadScores(P("out.csv"));
  EXPECT_EQ(s.At("a"), 0.5);
  EXPECT_EQ(s.At("b"), -1.0);
  EXPECT_EQ(s.At("c"), 3.0);
}

TEST_F(CliTest, KdeFormsDifferButCoverSameRecords) {
  Simulate("sim");
  const std::vector<std::string> base = {
      "attack", "--kind", "kde", "--records", P("sim/records.miam"), "--ids",
      P("sim/records.ids.csv"), "--samples", P("sim/samples.miam"),
      "--bandwidth", "0.7"};
  auto a = base;
  a.insert(a.end(), {"--out", P("k1.csv")});
  auto b = base;
  b.insert(b.end(), {"--kde-textbook", "--out", P("k2.csv")});
  ASSERT_EQ(Cli(a).code, kExitOk);
  ASSERT_EQ(Cli(b).code, kExitOk);
  const ScoreVector s1 = ReadScores(P("k1.csv"));
  const ScoreVector s2 = ReadScores(P("k2.csv"));
  ASSERT_EQ(s1.size(), s2.size());
  bool differ = false;
  for (const auto& e : s1.entries()) {
    ASSERT_TRUE(s2.Find(e.record_id).has_value());
    differ |= s2.At(e.record_id) != e.score;
  }
  EXPECT_TRUE(differ);
}

TEST_F(CliTest, ReconstructionFromSimulatedDirectory) {
  const CliRun sim = Cli({"--seed", "3", "simulate", "--dim", "5",
                       "--train-pool-size", "20", "--test-pool-size", "20",
                       "--n", "100", "--recon-n", "50", "--out-dir", P("sim")});
  ASSERT_EQ(sim.code, kExitOk) << sim.err;
  const CliRun r = Cli({"attack", "--kind", "rec", "--records",
                     P("sim/records.miam"), "--ids", P("sim/records.ids.csv"),
                     "--reconstructions", P("sim/recon"), "--out", P("r.csv")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(ReadScores(P("r.csv")).size(), 40u);
}

void WriteScenarioInputs(const fs::path& dir, int m, bool separated) {
  std::ofstream scores(dir / "scores.csv");
  std::ofstream ids(dir / "ids.csv");
  scores << "record_id,score\n";
  ids << "record_id,origin\n";
  for (int i = 0; i < m; ++i) {
    scores << "tr" << i << "," << (separated ? 10 + i : 1) << "\n";
    scores << "te" << i << "," << (separated ? -10 - i : 1) << "\n";
    ids << "tr" << i << ",train\nte" << i << ",test\n";
  }
}

TEST_F(CliTest, ScenarioSeparatedScoresArePerfect) {
  WriteScenarioInputs(dir_, 50, true);
  const CliRun r = Cli({"--seed", "1", "scenario", "--scores", P("scores.csv"),
                     "--membership", P("ids.csv"), "--M", "20", "--trials",
                     "10", "--out", P("rep.json")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json rep = LoadJson(P("rep.json"));
  EXPECT_EQ(rep["single_mean"].get<double>(), 1.0);
  EXPECT_EQ(rep["set_mean"].get<double>(), 1.0);
  EXPECT_EQ(rep["M"].get<int>(), 20);
}

TEST_F(CliTest, ScenarioConstantScoresAreChance) {
  WriteScenarioInputs(dir_, 10, false);
  const CliRun r = Cli({"--seed", "2", "scenario", "--scores", P("scores.csv"),
                     "--membership", P("ids.csv"), "--trials", "10000",
                     "--out", P("rep.json")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json rep = LoadJson(P("rep.json"));
  EXPECT_NEAR(rep["single_mean"].get<double>(), 0.5, 0.015);
  EXPECT_NEAR(rep["set_mean"].get<double>(), 0.5, 0.015);

  ASSERT_EQ(Cli({"--seed", "2", "scenario", "--scores", P("scores.csv"),
                 "--membership", P("ids.csv"), "--trials", "10000", "--out",
                 P("rep2.json")}).code,
            kExitOk);
  EXPECT_EQ(ReadFileToString(P("rep.json")), ReadFileToString(P("rep2.json")));
}

TEST_F(CliTest, ScenarioImbalancedWithoutM) {
  WriteScenarioInputs(dir_, 5, true);
  testing::WriteText(dir_ / "ids2.csv",
            "record_id,origin\ntr0,train\ntr1,train\nte0,test\n");
  testing::WriteText(dir_ / "s2.csv", "record_id,score\ntr0,1\ntr1,2\nte0,3\n");
  const CliRun r = Cli({"--seed", "1", "scenario", "--scores", P("s2.csv"),
                     "--membership", P("ids2.csv"), "--out", P("rep.json")});
  EXPECT_EQ(r.code, kExitDataError);
  EXPECT_NE(r.err.find("ImbalanceError"), std::string::npos) << r.err;
}

TEST_F(CliTest, SimulateFullMemorizationCopiesPool) {
  Rng rng(4);
  const Matrix pool = testing::RandomMatrix(15, 3, rng, -5, 5);
  WriteMatrix(pool, P("pool.miam"));
  const CliRun r = Cli({"--seed", "5", "simulate", "--dim", "3", "--train-pool",
                     P("pool.miam"), "--test-pool-size", "0", "--rho", "1",
                     "--sigma", "0", "--n", "300", "--dtype", "f64",
                     "--out-dir", P("sim")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::set<std::vector<double>> rows;
  for (std::size_t i = 0; i < pool.rows(); ++i) {
    rows.emplace(pool.row(i).begin(), pool.row(i).end());
  }
  const Matrix s = ReadMatrix(P("sim/samples.miam"));
  ASSERT_EQ(s.rows(), 300u);
  for (std::size_t i = 0; i < s.rows(); ++i) {
    EXPECT_TRUE(rows.contains({s.row(i).begin(), s.row(i).end()}));
  }
}

TEST_F(CliTest, SimulateNeedsPoolForMemorization) {
  const CliRun r = Cli({"--seed", "5", "simulate", "--dim", "3",
                     "--train-pool-size", "0", "--rho", "0.5", "--n", "10",
                     "--out-dir", P("sim")});
  EXPECT_EQ(r.code, kExitDataError);
  EXPECT_NE(r.err.find("ConfigError"), std::string::npos) << r.err;
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(Cli({}).code, kExitUsage);
  EXPECT_EQ(Cli({"bogus"}).code, kExitUsage);
  EXPECT_EQ(Cli({"attack", "--kind", "mc-eps", "--out", P("x.csv")}).code,
            kExitUsage);
  EXPECT_EQ(Cli({"attack", "--kind", "nope", "--out", P("x.csv")}).code,
            kExitUsage);
  EXPECT_EQ(Cli({"--help"}).code, kExitOk);
}

TEST_F(CliTest, MissingInputIsDataError) {
  const CliRun r = Cli({"attack", "--kind", "mc-eps", "--records",
                     P("none.miam"), "--samples", P("none2.miam"), "--out",
                     P("x.csv")});
  EXPECT_EQ(r.code, kExitDataError);
}

TEST_F(CliTest, ReportMerge) {
  WriteScenarioInputs(dir_, 30, true);
  for (const char* seed : {"1", "2"}) {
    ASSERT_EQ(Cli({"--seed", seed, "scenario", "--scores", P("scores.csv"),
                   "--membership", P("ids.csv"), "--M", "10", "--trials", "4",
                   "--out", P(std::string("r") + seed + ".json")}).code,
              kExitOk);
  }
  const CliRun r = Cli({"report", "merge", P("r1.json"), P("r2.json"), "--out",
                     P("m.json")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json m = LoadJson(P("m.json"));
  EXPECT_EQ(m["trials"].get<int>(), 8);
  EXPECT_EQ(m["per_trial"].size(), 8u);

  testing::WriteText(dir_ / "junk.json", "{not json");
  EXPECT_EQ(Cli({"report", "merge", P("r1.json"), P("junk.json"), "--out",
                 P("m2.json")}).code,
            kExitDataError);
}

}  // namespace
}  // namespace miaudit
