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

#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_set>

#include "gtest/gtest.h"
#include "json.hpp"
#include "miaudit/attacks.h"
#include "miaudit/error.h"
#include "miaudit/synth.h"
#include "properties.h"
#include "test_util.h"

namespace miaudit {
namespace {

using testing::RandomMatrix;

TEST(EpsilonHeuristicTest, ParseAndName) {
  EXPECT_EQ(EpsilonHeuristic::Parse("median").kind,
            EpsilonHeuristic::Kind::kMedian);
  const auto p = EpsilonHeuristic::Parse("percentile:0.001");
  EXPECT_EQ(p.kind, EpsilonHeuristic::Kind::kPercentile);
  EXPECT_EQ(p.value, 0.001);
  EXPECT_EQ(p.Name(), "percentile:0.001");
  EXPECT_TRUE(std::isinf(EpsilonHeuristic::Parse("fixed:inf").value));
  EXPECT_THROW(EpsilonHeuristic::Parse("percentile:1.5"), ConfigError);
  EXPECT_THROW(EpsilonHeuristic::Parse("percentile:0"), ConfigError);
  EXPECT_THROW(EpsilonHeuristic::Parse("mean"), ConfigError);
  EXPECT_THROW(EpsilonHeuristic::Parse("fixed:-1"), ConfigError);
}

TEST(EpsilonMedianTest, Examples) {
  const Matrix records = Matrix::FromRows({{0}, {10}});
  const Matrix samples = Matrix::FromRows({{1}, {2}, {12}});
  EXPECT_EQ(EpsilonMedian(records.view(), samples.view()), 1.5);
  const Matrix one = Matrix::FromRows({{10}});
  EXPECT_EQ(EpsilonMedian(one.view(), samples.view()), 2.0);
  EXPECT_EQ(EpsilonMedian(samples.view(), samples.view()), 0.0);
  EXPECT_THROW(EpsilonMedian(Matrix(0, 1).view(), samples.view()),
               EmptyInputError);
  EXPECT_THROW(EpsilonMedian(records.view(), Matrix(0, 1).view()),
               EmptyInputError);
}

TEST(EpsilonPercentileTest, NearestRankOnKnownDistances) {
  // One record at 0, samples at 1..1000: the distances are 1..1000.
  const Matrix record = Matrix::FromRows({{0}});
  Matrix samples(1000, 1);
  for (std::size_t i = 0; i < 1000; ++i) samples(i, 0) = double(i + 1);
  EXPECT_EQ(EpsilonPercentile(record.view(), samples.view(), 0.01), 10.0);
  EXPECT_EQ(EpsilonPercentile(record.view(), samples.view(), 0.0001), 1.0);
  EXPECT_EQ(EpsilonPercentile(record.view(), samples.view(), 0.9999), 1000.0);
  EXPECT_EQ(EpsilonPercentile(record.view(), samples.view(), 0.07), 70.0);
  EXPECT_THROW(EpsilonPercentile(record.view(), samples.view(), 1.0),
               ConfigError);
}

TEST(NearestRankTest, DecimalFractions) {
  EXPECT_EQ(NearestRank(0.07, 100), 7u);
  EXPECT_EQ(NearestRank(0.001, 8000000), 8000u);
  EXPECT_EQ(NearestRank(0.5, 3), 2u);
  EXPECT_EQ(NearestRank(1e-9, 10), 1u);
  EXPECT_EQ(NearestRank(0.999999, 10), 10u);
}

TEST(McScoreTest, EpsilonScoreExample) {
  const std::vector<double> x = {0};
  const Matrix samples = Matrix::FromRows({{-2}, {-0.5}, {0.3}, {1.5}, {5}});
  EXPECT_DOUBLE_EQ(McEpsilonScore(x, samples.view(), 1.0), 0.4);
  EXPECT_EQ(McEpsilonScore(x, samples.view(), 100.0), 1.0);
  EXPECT_EQ(McEpsilonScore(x, samples.view(), 0.1), 0.0);
}

TEST(McScoreTest, DistanceScoreExamples) {
  const std::vector<double> x = {0};
  const Matrix samples = Matrix::FromRows({{0.5}, {2.0}});
  EXPECT_DOUBLE_EQ(McDistanceScore(x, samples.view(), 1.0, 1e-12),
                   -std::log(0.5) / 2);
  EXPECT_NEAR(McDistanceScore(x, samples.view(), 1.0), 0.34657, 1e-5);
  EXPECT_EQ(McDistanceScore(x, samples.view(), 0.1), 0.0);
  const Matrix same = Matrix::FromRows({{0}});
  EXPECT_NEAR(McDistanceScore(x, same.view(), 1.0), 27.631, 1e-3);
}

TEST(McScoreTest, FromDistancesMatchesGeometry) {
  const std::vector<double> d = {2.0, 0.5, 0.3, 1.5, 5.0};
  EXPECT_DOUBLE_EQ(McEpsilonScoreFromDistances(d, 1.0), 0.4);
  EXPECT_DOUBLE_EQ(McDistanceScoreFromDistances(d, 1.0),
                   -(std::log(0.5) + std::log(0.3)) / 5);
}

TEST(McScoreTest, EpsilonScoreMonotoneAndPermutationInvariant) {
  std::mt19937_64 rng(3);
  const Matrix samples = RandomMatrix(200, 3, rng);
  const std::vector<double> x = {0.1, 0.2, -0.1};
  double prev = 0.0;
  for (double eps = 0.0; eps < 3.0; eps += 0.1) {
    const double s = McEpsilonScore(x, samples.view(), eps);
    EXPECT_GE(s, prev);
    prev = s;
  }
  std::vector<std::size_t> perm(200);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  const Matrix shuffled = SelectRows(samples.view(), perm);
  EXPECT_EQ(McEpsilonScore(x, samples.view(), 0.8),
            McEpsilonScore(x, shuffled.view(), 0.8));
  EXPECT_NEAR(McDistanceScore(x, samples.view(), 0.8),
              McDistanceScore(x, shuffled.view(), 0.8), 1e-14);
}

TEST(KdeTest, SingleCoincidentSample) {
  const std::vector<double> x = {0.25};
  const Matrix g = Matrix::FromRows({{0.25}});
  EXPECT_NEAR(KdeScore(x, g.view(), 1.0), 1.0 / std::sqrt(2 * M_PI), 1e-15);
  EXPECT_NEAR(KdeScore(x, g.view(), 1.0), 0.39894, 1e-5);
}

TEST(KdeTest, VerbatimAndTextbookForms) {
  // d = 2, h = 0.5: verbatim kernel scale h^2 = 0.25, textbook 0.5.
  const std::vector<double> x = {0, 0};
  const Matrix g = Matrix::FromRows({{0.3, 0.4}});
  const double norm = 1.0 / (0.25 * 2 * M_PI);
  EXPECT_NEAR(KdeScore(x, g.view(), 0.5),
              norm * std::exp(-0.25 / (2 * 0.0625)), 1e-14);
  EXPECT_NEAR(KdeScore(x, g.view(), 0.5, /*textbook=*/true),
              norm * std::exp(-0.25 / (2 * 0.25)), 1e-14);
}

TEST(KdeTest, DecaysFarFromSamples) {
  const Matrix g = Matrix::FromRows({{0, 0}, {0.1, 0}});
  EXPECT_LT(KdeScore(std::vector<double>{50, 50}, g.view(), 1.0), 1e-300);
  EXPECT_GT(KdeScore(std::vector<double>{0, 0}, g.view(), 1.0),
            KdeScore(std::vector<double>{3, 0}, g.view(), 1.0));
  EXPECT_LT(KdeLogScore(std::vector<double>{1e3, 0}, g.view(), 1.0), -1e5);
}

TEST(KdeTest, ScottBandwidth) {
  const Matrix g = Matrix::FromRows({{0, 0}, {2, 4}});
  // Column stds sqrt(2) and sqrt(8); n = 2, d = 2.
  const double sigma = (std::sqrt(2.0) + std::sqrt(8.0)) / 2;
  EXPECT_NEAR(ScottBandwidth(g.view()), sigma * std::pow(2.0, -1.0 / 6.0),
              1e-14);
  EXPECT_THROW(ScottBandwidth(Matrix::FromRows({{1, 1}, {1, 1}}).view()),
               ConfigError);
}

TEST(KdeTest, ReductionToMcDistanceRanking) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    EXPECT_TRUE(props::KdeReductionHolds(seed)) << "seed " << seed;
  }
}

TEST(KdeAttackTest, LogScoresMatchPointwise) {
  std::mt19937_64 rng(11);
  const RecordSet audit = RecordSet::WithIndexIds(RandomMatrix(10, 3, rng));
  const Matrix samples = RandomMatrix(300, 3, rng);
  MatrixSampleSource source(samples.view(), 64);
  const auto result =
      RunKdeAttack(audit, source, DistanceSpec::Raw(), KdeConfig{0.9, false});
  EXPECT_EQ(result.bandwidth, 0.9);
  for (std::size_t i = 0; i < audit.size(); ++i) {
    EXPECT_NEAR(result.scores.At(audit.id(i)),
                KdeLogScore(audit.row(i), samples.view(), 0.9), 1e-12);
  }
  MatrixSampleSource again(samples.view());
  const auto textbook =
      RunKdeAttack(audit, again, DistanceSpec::Raw(), KdeConfig{0.9, true});
  EXPECT_NE(textbook.scores.At("r0"), result.scores.At("r0"));
}

TEST(ReconstructionScoreTest, Examples) {
  const std::vector<double> x = {0};
  EXPECT_EQ(ReconstructionScore("a", x,
                                ReconstructionBatch("a", Matrix::FromRows({{1}, {3}}))),
            -2.0);
  EXPECT_EQ(ReconstructionScore("a", x,
                                ReconstructionBatch("a", Matrix::FromRows({{0}, {0}}))),
            0.0);
  EXPECT_EQ(ReconstructionScore("a", std::vector<double>{0, 0},
                                ReconstructionBatch("a", Matrix::FromRows({{3, 4}}))),
            -5.0);
  EXPECT_THROW(ReconstructionScore("a", x,
                                   ReconstructionBatch("b", Matrix::FromRows({{1}}))),
               IdMismatchError);
}

TEST(ReconstructionScoreTest, TranslationConsistent) {
  std::mt19937_64 rng(4);
  const Matrix recon = RandomMatrix(20, 5, rng);
  const std::vector<double> x = {0.1, 0.2, 0.3, 0.4, 0.5};
  const std::vector<double> shift = {3, -1, 2, 0.5, 7};
  Matrix moved = recon;
  std::vector<double> x_moved = x;
  for (std::size_t c = 0; c < 5; ++c) {
    x_moved[c] += shift[c];
    for (std::size_t r = 0; r < 20; ++r) moved(r, c) += shift[c];
  }
  EXPECT_NEAR(ReconstructionScore("a", x, ReconstructionBatch("a", recon)),
              ReconstructionScore("a", x_moved, ReconstructionBatch("a", moved)),
              1e-12);
}

TEST(McAttackTest, MedianHeuristicGivesExactlyMPositive) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = props::MakeUnitCubeInstance(seed, 20, 2000);
    const auto check = props::CheckMedianHeuristic(inst, 20);
    EXPECT_TRUE(check.same_top);
    EXPECT_EQ(check.positive_eps, 20u);
    EXPECT_EQ(check.positive_dist, 20u);
  }
}

TEST(McAttackTest, RecordsEpsilonInDigest) {
  std::mt19937_64 rng(5);
  const RecordSet audit = RecordSet::WithIndexIds(RandomMatrix(6, 2, rng));
  const Matrix samples = RandomMatrix(50, 2, rng);
  McConfig cfg;
  const auto r = RunMcAttack(audit, samples, cfg);
  const auto digest = nlohmann::json::parse(r.scores.config_digest());
  EXPECT_EQ(digest["epsilon"].get<double>(), r.epsilon);
  EXPECT_EQ(digest["heuristic"], "median");
  EXPECT_EQ(r.epsilon, EpsilonMedian(audit.data().view(), samples.view()));
}

TEST(McAttackTest, InfiniteEpsilonScoresEverythingOne) {
  std::mt19937_64 rng(6);
  const RecordSet audit = RecordSet::WithIndexIds(RandomMatrix(8, 3, rng));
  const Matrix samples = RandomMatrix(40, 3, rng);
  McConfig cfg;
  cfg.heuristic = EpsilonHeuristic::Fixed(INFINITY);
  for (const auto& e : RunMcAttack(audit, samples, cfg).scores.entries()) {
    EXPECT_EQ(e.score, 1.0);
  }
}

TEST(McAttackTest, PercentileHeuristicAndSampleLimit) {
  std::mt19937_64 rng(7);
  const RecordSet audit = RecordSet::WithIndexIds(RandomMatrix(10, 3, rng));
  const Matrix samples = RandomMatrix(500, 3, rng);
  McConfig cfg;
  cfg.heuristic = EpsilonHeuristic::Percentile(0.01);
  cfg.n_samples = 300;
  const auto r = RunMcAttack(audit, samples, cfg);
  EXPECT_EQ(r.n_samples, 300u);
  const Matrix first = Copy(samples.view().RowRange(0, 300));
  const auto sorted = oracle::SortedAllDistances(testing::ToDense(audit.data()),
                                                 testing::ToDense(first));
  EXPECT_EQ(r.epsilon, sorted[29]);
  for (std::size_t i = 0; i < audit.size(); ++i) {
    EXPECT_EQ(r.scores.At(audit.id(i)),
              McEpsilonScore(audit.row(i), first.view(), r.epsilon));
  }
  cfg.n_samples = 501;
  EXPECT_THROW(RunMcAttack(audit, samples, cfg), ConfigError);
}

TEST(McAttackTest, PcaDistanceStreamsWithSmallBudget) {
  std::mt19937_64 rng(8);
  const Matrix ref = RandomMatrix(80, 6, rng);
  McConfig cfg;
  cfg.distance = DistanceSpec::Pca(std::make_shared<PcaModel>(PcaFit(ref, 3)));
  const RecordSet audit = RecordSet::WithIndexIds(RandomMatrix(12, 6, rng));
  const Matrix samples = RandomMatrix(700, 6, rng);
  const auto big = RunMcAttack(audit, samples, cfg);
  const auto small = RunMcAttack(audit, samples, cfg,
                                 {.threads = 2, .mem_budget_bytes = 1024});
  EXPECT_EQ(big.epsilon, small.epsilon);
  for (const auto& e : big.scores.entries()) {
    EXPECT_EQ(small.scores.At(e.record_id), e.score);
  }
}

TEST(McAttackTest, MemorizingGeneratorSeparatesTrainFromTest) {
  const GaussianMixture pop = GaussianMixture::Isotropic(5, 3, 3.0, 1.0, 1);
  const Matrix train = pop.DrawRows(30, 2);
  const Matrix test = pop.DrawRows(30, 3);
  const MemorizingGenerator gen{train, 1.0, 0.0, pop, 4};
  const SampleMatrix samples = Generate(gen, 3000);
  const RecordSet train_set =
      RecordSet::WithIndexIds(train, "tr", Origin::kClaimedTrain);
  const RecordSet test_set =
      RecordSet::WithIndexIds(test, "te", Origin::kClaimedTest);
  MatrixSampleSource source(samples.data.view());
  McConfig cfg;
  cfg.heuristic = EpsilonHeuristic::Fixed(0.0);
  const auto r = RunMcAttack(train_set, test_set, source, cfg);
  for (const auto& id : train_set.ids()) EXPECT_GT(r.scores.At(id), 0.0);
  for (const auto& id : test_set.ids()) EXPECT_EQ(r.scores.At(id), 0.0);
}

TEST(McAttackTest, InputErrors) {
  McConfig cfg;
  const RecordSet audit = RecordSet::WithIndexIds(Matrix(2, 3));
  EXPECT_THROW(RunMcAttack(audit, Matrix(4, 2), cfg), DimError);
  EXPECT_THROW(RunMcAttack(RecordSet::WithIndexIds(Matrix(0, 3)), Matrix(4, 3), cfg),
               EmptyInputError);
  cfg.delta = 0.0;
  EXPECT_THROW(RunMcAttack(audit, Matrix(4, 3), cfg), ConfigError);
}

class IdentityOracle : public ReconstructionOracle {
 public:
  ReconstructionBatch Reconstruct(std::string_view id,
                                  std::span<const double> x,
                                  std::size_t n) override {
    Matrix out(n, x.size());
    for (std::size_t r = 0; r < n; ++r) {
      std::copy(x.begin(), x.end(), out.row(r).begin());
    }
    return ReconstructionBatch(std::string(id), std::move(out));
  }
};

class FailingOracle : public ReconstructionOracle {
 public:
  ReconstructionBatch Reconstruct(std::string_view id, std::span<const double>,
                                  std::size_t) override {
    if (id == "r2") throw std::runtime_error("decoder crashed");
    return ReconstructionBatch(std::string(id), Matrix(1, 2));
  }
};

TEST(ReconstructionAttackTest, IdentityOracleScoresZero) {
  std::mt19937_64 rng(9);
  const RecordSet audit = RecordSet::WithIndexIds(RandomMatrix(5, 4, rng));
  IdentityOracle oracle;
  const ScoreVector s = RunReconstructionAttack(audit, oracle, 3);
  for (const auto& e : s.entries()) EXPECT_EQ(e.score, 0.0);
}

TEST(ReconstructionAttackTest, OracleFailureNamesRecord) {
  const RecordSet audit = RecordSet::WithIndexIds(Matrix(4, 2));
  FailingOracle oracle;
  try {
    RunReconstructionAttack(audit, oracle, 1);
    FAIL() << "expected OracleError";
  } catch (const OracleError& e) {
    EXPECT_NE(std::string(e.what()).find("r2"), std::string::npos);
  }
}

TEST(ReconstructionAttackTest, BiasedOracleFavoursMembers) {
  std::mt19937_64 rng(10);
  const RecordSet audit = RecordSet::WithIndexIds(RandomMatrix(40, 10, rng));
  std::unordered_set<std::string> members;
  for (std::size_t i = 0; i < 20; ++i) members.insert(audit.id(i));
  BiasedReconstructor oracle(members, 0.5, 0.6, 77);
  double gap_small = 0.0;
  for (std::size_t n : {1u, 2000u}) {
    const ScoreVector s = RunReconstructionAttack(audit, oracle, n);
    double member = 0.0;
    double other = 0.0;
    for (std::size_t i = 0; i < 40; ++i) {
      (i < 20 ? member : other) += s.At(audit.id(i)) / 20.0;
    }
    const double expected_gap = (0.6 - 0.5) * ChiMean(10);
    if (n == 2000) {
      EXPECT_NEAR(member - other, expected_gap, 0.01);
      // With n = 2000 every member beats every non-member.
      for (std::size_t i = 0; i < 20; ++i) {
        for (std::size_t j = 20; j < 40; ++j) {
          EXPECT_GT(s.At(audit.id(i)), s.At(audit.id(j)));
        }
      }
    } else {
      gap_small = member - other;
    }
  }
  EXPECT_TRUE(std::isfinite(gap_small));
}

TEST(ReconstructionAttackTest, VarianceShrinksLikeOneOverN) {
  const std::vector<double> x(8, 0.0);
  auto score_variance = [&](std::size_t n) {
    std::vector<double> scores;
    for (std::uint64_t seed = 0; seed < 400; ++seed) {
      BiasedReconstructor oracle({}, 0.5, 1.0, seed);
      scores.push_back(
          ReconstructionScore("x", x, oracle.Reconstruct("x", x, n)));
    }
    double mean = 0.0;
    for (double s : scores) mean += s / scores.size();
    double var = 0.0;
    for (double s : scores) var += (s - mean) * (s - mean) / (scores.size() - 1);
    return var;
  };
  const double v1 = score_variance(1);
  const double v100 = score_variance(100);
  // Exact ratio is 100; 400 repeats give roughly +-15% per variance.
  EXPECT_GT(v1 / v100, 60.0);
  EXPECT_LT(v1 / v100, 160.0);
}

TEST(ScoreFileAttackTest, PassthroughReordersAndChecksCoverage) {
  const ScoreVector external({{"b", 0.1}, {"a", 0.9}});
  const RecordSet audit({"a", "b"}, Matrix(2, 1));
  const ScoreVector s = RunScoreFileAttack(external, audit);
  EXPECT_EQ(s.entries()[0].record_id, "a");
  EXPECT_EQ(s.At("a"), 0.9);
  EXPECT_EQ(s.At("b"), 0.1);
  EXPECT_THROW(RunScoreFileAttack(external, RecordSet({"a"}, Matrix(1, 1))),
               DataError);
}

}  // namespace
}  // namespace miaudit
