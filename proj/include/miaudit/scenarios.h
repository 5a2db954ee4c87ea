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

#ifndef MIAUDIT_SCENARIOS_H_
#define MIAUDIT_SCENARIOS_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "miaudit/distances.h"
#include "miaudit/rng.h"
#include "miaudit/types.h"

namespace miaudit {

enum class SetLabel { kA, kB };

// The m highest-scoring ids among `ids`. Ties are broken by a shuffle drawn
// from `rng` followed by a stable sort on score.
std::vector<std::string> TopByScore(const ScoreVector& scores,
                                    std::span<const std::string> ids,
                                    std::size_t m, Rng& rng);

struct SingleMiResult {
  std::vector<std::string> chosen_ids;
  double accuracy = 0.0;
};

// Labels the M top-scoring records as members. `scores` must hold exactly
// 2M records, M of them in `true_train_ids` (ImbalanceError otherwise).
SingleMiResult SingleMi(const ScoreVector& scores,
                        const std::unordered_set<std::string>& true_train_ids,
                        std::size_t m, std::uint64_t seed);

struct SetMiResult {
  SetLabel choice = SetLabel::kA;
  std::size_t votes_a = 0;
  std::size_t votes_b = 0;
  bool tied = false;  // the choice came from a coin flip
  bool correct = false;
};

// Majority vote of the top-M ids between two disjoint M-sets.
SetMiResult SetMiFromTop(std::span<const std::string> top,
                         std::span<const std::string> set_a,
                         std::span<const std::string> set_b,
                         SetLabel true_train, Rng& rng);

// Picks the set contributing most of the top-M records among set_a and
// set_b; an exact tie is a seeded coin flip.
SetMiResult SetMi(const ScoreVector& scores,
                  std::span<const std::string> set_a,
                  std::span<const std::string> set_b, SetLabel true_train,
                  std::size_t m, std::uint64_t seed);

struct MedianRuleResult {
  SetLabel choice = SetLabel::kA;
  bool tied = false;
};

// Picks the set with the larger median score; equal medians are a seeded
// coin flip.
MedianRuleResult SetMiMedianRule(const ScoreVector& scores,
                                 std::span<const std::string> set_a,
                                 std::span<const std::string> set_b,
                                 std::uint64_t seed);

struct ScenarioConfig {
  std::size_t m = 100;
  std::size_t trials = 10;
  std::uint64_t seed = 0;
  int threads = 0;  // trials evaluated concurrently; <= 0: all cores
};

// M true members and M non-members for one trial.
struct TrialData {
  RecordSet train;
  RecordSet test;
};

class DataProvider {
 public:
  virtual ~DataProvider() = default;
  // InsufficientDataError when fewer than m records remain available.
  virtual TrialData Draw(std::size_t m, Rng& rng) const = 0;
};

// Draws M records without replacement from each pool on every trial.
class PoolProvider : public DataProvider {
 public:
  PoolProvider(RecordSet train_pool, RecordSet test_pool);
  TrialData Draw(std::size_t m, Rng& rng) const override;

  const RecordSet& train_pool() const { return train_pool_; }
  const RecordSet& test_pool() const { return test_pool_; }

 private:
  RecordSet train_pool_;
  RecordSet test_pool_;
};

struct AttackOutcome {
  ScoreVector scores;
  std::optional<double> epsilon;
};

// Scores the 2M records of a trial. Called concurrently from several trials.
using AttackRunner =
    std::function<AttackOutcome(const TrialData& data, std::uint64_t seed)>;

// Single MI over train+test, then set MI with the two sets assigned to A/B
// in a seeded random order.
TrialReport EvaluateTrial(const ScoreVector& scores,
                          std::span<const std::string> train_ids,
                          std::span<const std::string> test_ids,
                          std::uint64_t trial_seed);

// Trial t uses the seed DeriveSeed(config.seed, t); results are reduced in
// trial order, so reports do not depend on the thread count.
std::vector<TrialReport> RunTrialReports(const AttackRunner& runner,
                                         const DataProvider& provider,
                                         const ScenarioConfig& config);

struct AggregateReport {
  std::string attack;
  std::string distance;
  std::string heuristic;
  std::optional<double> resolved_epsilon;  // unset when it varies by trial
  std::optional<std::uint64_t> n_samples;
  std::size_t m = 0;
  std::size_t trials = 0;
  std::optional<std::uint64_t> seed;  // unset for merged runs
  double single_mean = 0.0;
  double single_std = 0.0;
  double single_sem = 0.0;
  double set_mean = 0.0;
  double set_std = 0.0;
  double set_sem = 0.0;
  std::vector<TrialReport> per_trial;
  std::string config_digest;

  // Recomputes the summary statistics from per_trial.
  void Summarize();

  nlohmann::ordered_json ToJson() const;
  static AggregateReport FromJson(const nlohmann::json& json);
};

AggregateReport RunTrials(const AttackRunner& runner,
                          const DataProvider& provider,
                          const ScenarioConfig& config);

// Concatenates the trials of two reports of the same attack configuration.
AggregateReport MergeReports(const AggregateReport& a,
                             const AggregateReport& b);

}  // namespace miaudit

#endif  // MIAUDIT_SCENARIOS_H_
