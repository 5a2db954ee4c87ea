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

#include "miaudit/scenarios.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <utility>

#include "miaudit/error.h"
#include "miaudit/stats.h"

namespace miaudit {
namespace {

bool CoinFlip(Rng& rng) { return (rng() >> 63) != 0; }

void RequireSetSizes(std::span<const std::string> set_a,
                     std::span<const std::string> set_b, std::size_t m) {
  if (m == 0) throw ConfigError("M must be at least 1");
  if (set_a.size() != m || set_b.size() != m) {
    throw ImbalanceError("set sizes " + std::to_string(set_a.size()) + " and " +
                         std::to_string(set_b.size()) + ", expected M=" +
                         std::to_string(m) + " each");
  }
  std::unordered_set<std::string> a(set_a.begin(), set_a.end());
  if (a.size() != set_a.size()) throw DuplicateIdError("repeated id in set A");
  std::unordered_set<std::string> b;
  for (const auto& id : set_b) {
    if (a.contains(id)) {
      throw ImbalanceError("record '" + id + "' is in both sets");
    }
    if (!b.insert(id).second) {
      throw DuplicateIdError("repeated id in set B");
    }
  }
}

std::vector<std::string> Union(std::span<const std::string> a,
                               std::span<const std::string> b) {
  std::vector<std::string> all(a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  return all;
}

std::vector<double> ScoresOf(const ScoreVector& scores,
                             std::span<const std::string> ids) {
  std::vector<double> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(scores.At(id));
  return out;
}

}  // namespace

std::vector<std::string> TopByScore(const ScoreVector& scores,
                                    std::span<const std::string> ids,
                                    std::size_t m, Rng& rng) {
  if (m > ids.size()) {
    throw ImbalanceError("cannot pick " + std::to_string(m) + " of " +
                         std::to_string(ids.size()) + " records");
  }
  std::vector<std::pair<double, const std::string*>> ranked;
  ranked.reserve(ids.size());
  for (const auto& id : ids) ranked.emplace_back(scores.At(id), &id);
  std::shuffle(ranked.begin(), ranked.end(), rng);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& l, const auto& r) { return l.first > r.first; });
  std::vector<std::string> top;
  top.reserve(m);
  for (std::size_t i = 0; i < m; ++i) top.push_back(*ranked[i].second);
  return top;
}

SingleMiResult SingleMi(const ScoreVector& scores,
                        const std::unordered_set<std::string>& true_train_ids,
                        std::size_t m, std::uint64_t seed) {
  if (m == 0) throw ConfigError("M must be at least 1");
  if (scores.size() != 2 * m) {
    throw ImbalanceError("single MI needs 2M=" + std::to_string(2 * m) +
                         " scored records, got " +
                         std::to_string(scores.size()));
  }
  std::vector<std::string> ids;
  ids.reserve(scores.size());
  std::size_t members = 0;
  for (const auto& e : scores.entries()) {
    ids.push_back(e.record_id);
    members += true_train_ids.contains(e.record_id) ? 1 : 0;
  }
  if (members != m) {
    throw ImbalanceError(std::to_string(members) +
                         " of the scored records are members, expected M=" +
                         std::to_string(m));
  }
  Rng rng(seed);
  SingleMiResult result;
  result.chosen_ids = TopByScore(scores, ids, m, rng);
  std::size_t hits = 0;
  for (const auto& id : result.chosen_ids) {
    hits += true_train_ids.contains(id) ? 1 : 0;
  }
  result.accuracy = static_cast<double>(hits) / static_cast<double>(m);
  return result;
}

SetMiResult SetMiFromTop(std::span<const std::string> top,
                         std::span<const std::string> set_a,
                         std::span<const std::string> set_b,
                         SetLabel true_train, Rng& rng) {
  const std::unordered_set<std::string> a(set_a.begin(), set_a.end());
  const std::unordered_set<std::string> b(set_b.begin(), set_b.end());
  SetMiResult result;
  for (const auto& id : top) {
    if (a.contains(id)) {
      ++result.votes_a;
    } else if (b.contains(id)) {
      ++result.votes_b;
    } else {
      throw DataError("top record '" + id + "' belongs to neither set");
    }
  }
  if (result.votes_a == result.votes_b) {
    result.tied = true;
    result.choice = CoinFlip(rng) ? SetLabel::kA : SetLabel::kB;
  } else {
    result.choice =
        result.votes_a > result.votes_b ? SetLabel::kA : SetLabel::kB;
  }
  result.correct = result.choice == true_train;
  return result;
}

SetMiResult SetMi(const ScoreVector& scores,
                  std::span<const std::string> set_a,
                  std::span<const std::string> set_b, SetLabel true_train,
                  std::size_t m, std::uint64_t seed) {
  RequireSetSizes(set_a, set_b, m);
  const std::vector<std::string> all = Union(set_a, set_b);
  scores.RequireCoverage(all);
  Rng rng(seed);
  const auto top = TopByScore(scores, all, m, rng);
  return SetMiFromTop(top, set_a, set_b, true_train, rng);
}

MedianRuleResult SetMiMedianRule(const ScoreVector& scores,
                                 std::span<const std::string> set_a,
                                 std::span<const std::string> set_b,
                                 std::uint64_t seed) {
  RequireSetSizes(set_a, set_b, set_a.size());
  scores.RequireCoverage(Union(set_a, set_b));
  const double median_a = Median(ScoresOf(scores, set_a));
  const double median_b = Median(ScoresOf(scores, set_b));
  MedianRuleResult result;
  if (median_a == median_b) {
    Rng rng(seed);
    result.tied = true;
    result.choice = CoinFlip(rng) ? SetLabel::kA : SetLabel::kB;
  } else {
    result.choice = median_a > median_b ? SetLabel::kA : SetLabel::kB;
  }
  return result;
}

PoolProvider::PoolProvider(RecordSet train_pool, RecordSet test_pool)
    : train_pool_(std::move(train_pool)), test_pool_(std::move(test_pool)) {
  if (train_pool_.size() > 0 && test_pool_.size() > 0 &&
      train_pool_.cols() != test_pool_.cols()) {
    throw DimError("train and test pools differ in column count");
  }
  for (const auto& id : test_pool_.ids()) {
    if (train_pool_.IndexOf(id)) {
      throw DuplicateIdError("record '" + id + "' is in both pools");
    }
  }
}

TrialData PoolProvider::Draw(std::size_t m, Rng& rng) const {
  auto draw = [&](const RecordSet& pool, const char* name) {
    if (pool.size() < m) {
      throw InsufficientDataError(std::string(name) + " pool holds " +
                                  std::to_string(pool.size()) +
                                  " records, a trial needs M=" +
                                  std::to_string(m));
    }
    // Partial Fisher-Yates, then index order for a stable row layout.
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < m; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(m);
    std::sort(idx.begin(), idx.end());
    return pool.Subset(idx);
  };
  TrialData data;
  data.train = draw(train_pool_, "train");
  data.test = draw(test_pool_, "test");
  return data;
}

TrialReport EvaluateTrial(const ScoreVector& scores,
                          std::span<const std::string> train_ids,
                          std::span<const std::string> test_ids,
                          std::uint64_t trial_seed) {
  const std::size_t m = train_ids.size();
  RequireSetSizes(train_ids, test_ids, m);
  const std::vector<std::string> all = Union(train_ids, test_ids);
  scores.RequireCoverage(all);

  Rng rng(DeriveSeed(trial_seed, 3));
  TrialReport report;
  report.trial_seed = trial_seed;
  report.chosen_ids = TopByScore(scores, all, m, rng);
  const std::unordered_set<std::string> members(train_ids.begin(),
                                                train_ids.end());
  std::size_t hits = 0;
  for (const auto& id : report.chosen_ids) {
    hits += members.contains(id) ? 1 : 0;
  }
  report.single_accuracy = static_cast<double>(hits) / static_cast<double>(m);

  // The regulator sees two unlabeled sets; which one is "A" is random.
  const bool train_is_a = CoinFlip(rng);
  const auto set =
      train_is_a
          ? SetMiFromTop(report.chosen_ids, train_ids, test_ids, SetLabel::kA,
                         rng)
          : SetMiFromTop(report.chosen_ids, test_ids, train_ids, SetLabel::kB,
                         rng);
  report.set_correct = set.correct;
  return report;
}

std::vector<TrialReport> RunTrialReports(const AttackRunner& runner,
                                         const DataProvider& provider,
                                         const ScenarioConfig& config) {
  if (config.m == 0) throw ConfigError("M must be at least 1");
  if (config.trials == 0) throw ConfigError("trials must be at least 1");
  std::vector<TrialReport> reports(config.trials);
  std::vector<std::exception_ptr> failures(config.trials);
  const auto trials = static_cast<std::int64_t>(config.trials);
  const int threads = ResolveThreads({.threads = config.threads});
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::int64_t t = 0; t < trials; ++t) {
    const auto i = static_cast<std::size_t>(t);
    try {
      const std::uint64_t trial_seed = DeriveSeed(config.seed, i);
      Rng draw_rng(DeriveSeed(trial_seed, 1));
      const TrialData data = provider.Draw(config.m, draw_rng);
      const AttackOutcome outcome = runner(data, DeriveSeed(trial_seed, 2));
      reports[i] = EvaluateTrial(outcome.scores, data.train.ids(),
                                 data.test.ids(), trial_seed);
      reports[i].resolved_epsilon = outcome.epsilon;
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }
  return reports;
}

void AggregateReport::Summarize() {
  trials = per_trial.size();
  std::vector<double> single;
  std::vector<double> set;
  single.reserve(trials);
  set.reserve(trials);
  for (const auto& t : per_trial) {
    single.push_back(t.single_accuracy);
    set.push_back(t.set_correct ? 1.0 : 0.0);
  }
  const double root = std::sqrt(static_cast<double>(std::max<std::size_t>(trials, 1)));
  single_mean = trials ? Mean(single) : 0.0;
  single_std = SampleStd(single);
  single_sem = single_std / root;
  set_mean = trials ? Mean(set) : 0.0;
  set_std = SampleStd(set);
  set_sem = set_std / root;

  std::optional<double> eps;
  bool uniform = true;
  for (std::size_t i = 0; i < per_trial.size(); ++i) {
    if (i == 0) {
      eps = per_trial[i].resolved_epsilon;
    } else if (per_trial[i].resolved_epsilon != eps) {
      uniform = false;
    }
  }
  resolved_epsilon = uniform ? eps : std::nullopt;
}

namespace {

nlohmann::ordered_json OptionalNumber(std::optional<double> v) {
  if (!v) return nullptr;
  if (std::isinf(*v)) return "inf";
  return *v;
}

std::optional<double> ReadOptionalNumber(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") {
      return std::numeric_limits<double>::infinity();
    }
    throw FormatError("unexpected string number '" + j.get<std::string>() +
                      "'");
  }
  return j.get<double>();
}

}  // namespace

nlohmann::ordered_json AggregateReport::ToJson() const {
  nlohmann::ordered_json j;
  j["attack"] = attack;
  j["distance"] = distance;
  j["heuristic"] = heuristic;
  j["resolved_epsilon"] = OptionalNumber(resolved_epsilon);
  j["n_samples"] = n_samples ? nlohmann::ordered_json(*n_samples) : nullptr;
  j["M"] = m;
  j["trials"] = trials;
  j["seed"] = seed ? nlohmann::ordered_json(*seed) : nullptr;
  j["single_mean"] = single_mean;
  j["single_std"] = single_std;
  j["single_sem"] = single_sem;
  j["set_mean"] = set_mean;
  j["set_std"] = set_std;
  j["set_sem"] = set_sem;
  auto& trials_json = j["per_trial"] = nlohmann::ordered_json::array();
  for (const auto& t : per_trial) {
    nlohmann::ordered_json tj;
    tj["trial_seed"] = t.trial_seed;
    tj["single_accuracy"] = t.single_accuracy;
    tj["set_correct"] = t.set_correct;
    tj["chosen_ids"] = t.chosen_ids;
    tj["resolved_epsilon"] = OptionalNumber(t.resolved_epsilon);
    trials_json.push_back(std::move(tj));
  }
  j["config_digest"] = config_digest;
  return j;
}

AggregateReport AggregateReport::FromJson(const nlohmann::json& j) {
  try {
    AggregateReport r;
    r.attack = j.at("attack").get<std::string>();
    r.distance = j.at("distance").get<std::string>();
    r.heuristic = j.at("heuristic").get<std::string>();
    r.resolved_epsilon = ReadOptionalNumber(j.at("resolved_epsilon"));
    if (!j.at("n_samples").is_null()) {
      r.n_samples = j.at("n_samples").get<std::uint64_t>();
    }
    r.m = j.at("M").get<std::size_t>();
    if (!j.at("seed").is_null()) r.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& tj : j.at("per_trial")) {
      TrialReport t;
      t.trial_seed = tj.at("trial_seed").get<std::uint64_t>();
      t.single_accuracy = tj.at("single_accuracy").get<double>();
      t.set_correct = tj.at("set_correct").get<bool>();
      t.chosen_ids = tj.at("chosen_ids").get<std::vector<std::string>>();
      t.resolved_epsilon = ReadOptionalNumber(tj.at("resolved_epsilon"));
      r.per_trial.push_back(std::move(t));
    }
    r.config_digest = j.value("config_digest", "");
    r.Summarize();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
}

AggregateReport RunTrials(const AttackRunner& runner,
                          const DataProvider& provider,
                          const ScenarioConfig& config) {
  AggregateReport report;
  report.m = config.m;
  report.seed = config.seed;
  report.per_trial = RunTrialReports(runner, provider, config);
  report.Summarize();
  return report;
}

AggregateReport MergeReports(const AggregateReport& a,
                             const AggregateReport& b) {
  if (a.attack != b.attack || a.distance != b.distance ||
      a.heuristic != b.heuristic || a.m != b.m || a.n_samples != b.n_samples) {
    throw ConfigError(
        "reports differ in attack, distance, heuristic, M or n_samples");
  }
  AggregateReport merged = a;
  merged.per_trial.insert(merged.per_trial.end(), b.per_trial.begin(),
                          b.per_trial.end());
  if (a.seed != b.seed) merged.seed.reset();
  if (a.config_digest != b.config_digest) {
    merged.config_digest = nlohmann::json::array({a.config_digest,
                                                  b.config_digest})
                               .dump();
  }
  merged.Summarize();
  return merged;
}

}  // namespace miaudit
