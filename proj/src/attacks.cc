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

#include "miaudit/attacks.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include "json.hpp"
#include "miaudit/error.h"
#include "miaudit/stats.h"

namespace miaudit {
namespace {

std::string FormatDouble(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double ParseDouble(std::string_view text, std::string_view what) {
  if (text == "inf" || text == "infinity") {
    return std::numeric_limits<double>::infinity();
  }
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError("cannot parse " + std::string(what) + ": '" +
                      std::string(text) + "'");
  }
  return v;
}

void RequireNonEmpty(MatrixView records, std::size_t sample_rows) {
  if (records.rows == 0) throw EmptyInputError("no records to score");
  if (sample_rows == 0) throw EmptyInputError("no samples");
}

// Serves the first `limit` rows of an upstream source.
class PrefixSampleSource : public SampleSource {
 public:
  PrefixSampleSource(SampleSource& upstream, std::size_t limit)
      : upstream_(upstream), limit_(limit) {}

  std::size_t rows() const override { return limit_; }
  std::size_t cols() const override { return upstream_.cols(); }
  void Rewind() override {
    upstream_.Rewind();
    served_ = 0;
  }
  std::optional<MatrixView> NextChunk() override {
    if (served_ >= limit_) return std::nullopt;
    auto chunk = upstream_.NextChunk();
    if (!chunk) return std::nullopt;
    const std::size_t take = std::min(chunk->rows, limit_ - served_);
    served_ += take;
    return chunk->RowRange(0, take);
  }

 private:
  SampleSource& upstream_;
  std::size_t limit_;
  std::size_t served_ = 0;
};

// Samples in the distance space. Held in memory when they fit the budget,
// otherwise transformed again on every pass.
class PreparedSamples {
 public:
  PreparedSamples(SampleSource& raw, std::size_t n_samples,
                  const DistanceSpec& spec, const KernelOptions& options) {
    if (n_samples > raw.rows()) {
      throw ConfigError("requested " + std::to_string(n_samples) +
                        " samples but only " + std::to_string(raw.rows()) +
                        " are available");
    }
    SampleSource* source = &raw;
    if (n_samples != 0 && n_samples < raw.rows()) {
      prefix_.emplace(raw, n_samples);
      source = &*prefix_;
    }
    transformed_.emplace(*source, spec, options);
    const std::size_t out_cols = transformed_->cols();
    const bool in_memory_raw =
        spec.kind == DistanceKind::kRawEuclid &&
        dynamic_cast<MatrixSampleSource*>(&raw) != nullptr;
    if (!in_memory_raw &&
        transformed_->rows() <= RowsWithinBudget(options, out_cols)) {
      materialized_ = Materialize(*transformed_);
      matrix_source_.emplace(materialized_.view(),
                             RowsWithinBudget(options, out_cols));
      active_ = &*matrix_source_;
    } else {
      active_ = &*transformed_;
    }
  }

  SampleSource& source() { return *active_; }

 private:
  std::optional<PrefixSampleSource> prefix_;
  std::optional<TransformedSampleSource> transformed_;
  Matrix materialized_;
  std::optional<MatrixSampleSource> matrix_source_;
  SampleSource* active_ = nullptr;
};

std::vector<ScoreEntry> MakeEntries(const RecordSet& audit,
                                    const std::vector<double>& scores) {
  std::vector<ScoreEntry> entries;
  entries.reserve(audit.size());
  for (std::size_t i = 0; i < audit.size(); ++i) {
    entries.push_back({audit.id(i), scores[i]});
  }
  return entries;
}

}  // namespace

EpsilonHeuristic EpsilonHeuristic::Percentile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ConfigError("percentile must lie in (0, 1), got " + FormatDouble(p));
  }
  return {Kind::kPercentile, p};
}

EpsilonHeuristic EpsilonHeuristic::Fixed(double epsilon) {
  if (!(epsilon >= 0.0)) {
    throw ConfigError("epsilon must be >= 0, got " + FormatDouble(epsilon));
  }
  return {Kind::kFixed, epsilon};
}

EpsilonHeuristic EpsilonHeuristic::Parse(std::string_view text) {
  if (text == "median") return Median();
  const auto colon = text.find(':');
  if (colon != std::string_view::npos) {
    const auto head = text.substr(0, colon);
    const auto tail = text.substr(colon + 1);
    if (head == "percentile") {
      return Percentile(ParseDouble(tail, "percentile"));
    }
    if (head == "fixed") return Fixed(ParseDouble(tail, "epsilon"));
  }
  throw ConfigError("unknown heuristic '" + std::string(text) +
                    "' (expected median, percentile:<p> or fixed:<eps>)");
}

std::string EpsilonHeuristic::Name() const {
  switch (kind) {
    case Kind::kMedian:
      return "median";
    case Kind::kPercentile:
      return "percentile:" + FormatDouble(value);
    case Kind::kFixed:
      return std::isinf(value) ? "fixed:inf" : "fixed:" + FormatDouble(value);
  }
  return "";
}

std::string_view McVariantName(McVariant variant) {
  return variant == McVariant::kEpsilon ? "mc-eps" : "mc-d";
}

std::uint64_t NearestRank(double p, std::uint64_t n) {
  if (n == 0) throw EmptyInputError("nearest rank of an empty set");
  const double target = p * static_cast<double>(n);
  const double rank = std::ceil(target - 1e-9 * target);
  if (!(rank >= 1.0)) return 1;
  if (rank >= static_cast<double>(n)) return n;
  return static_cast<std::uint64_t>(rank);
}

double EpsilonMedian(MatrixView records, MatrixView samples,
                     const KernelOptions& options) {
  RequireNonEmpty(records, samples.rows);
  const auto mins = PairwiseMinDistances(records, samples, options);
  return Median(mins);
}

double EpsilonMedian(MatrixView records, SampleSource& samples,
                     const KernelOptions& options) {
  RequireNonEmpty(records, samples.rows());
  const auto mins = PairwiseMinDistances(records, samples, options);
  return Median(mins);
}

double EpsilonPercentile(MatrixView records, MatrixView samples, double p,
                         const KernelOptions& options) {
  MatrixSampleSource source(samples);
  return EpsilonPercentile(records, source, p, options);
}

double EpsilonPercentile(MatrixView records, SampleSource& samples, double p,
                         const KernelOptions& options) {
  EpsilonHeuristic::Percentile(p);  // validates p
  RequireNonEmpty(records, samples.rows());
  const std::uint64_t total =
      static_cast<std::uint64_t>(records.rows) * samples.rows();
  return NearestRankDistance(records, samples, NearestRank(p, total),
                             options);
}

double McEpsilonScoreFromDistances(std::span<const double> distances,
                                   double epsilon) {
  if (distances.empty()) throw EmptyInputError("no samples");
  std::uint64_t count = 0;
  for (double d : distances) count += d <= epsilon ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(distances.size());
}

double McDistanceScoreFromDistances(std::span<const double> distances,
                                    double epsilon, double delta) {
  if (distances.empty()) throw EmptyInputError("no samples");
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");
  double sum = 0.0;
  for (double d : distances) {
    if (d <= epsilon) sum += std::log(std::max(d, delta));
  }
  return 0.0 - sum / static_cast<double>(distances.size());
}

double McEpsilonScore(std::span<const double> x, MatrixView samples,
                      double epsilon) {
  const MatrixView record{x.data(), 1, x.size()};
  RequireNonEmpty(record, samples.rows);
  const auto stats = ComputeNeighborhoodStats(record, samples, epsilon,
                                              kDefaultDelta, {.threads = 1});
  return static_cast<double>(stats.count_within[0]) /
         static_cast<double>(samples.rows);
}

double McDistanceScore(std::span<const double> x, MatrixView samples,
                       double epsilon, double delta) {
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");
  const MatrixView record{x.data(), 1, x.size()};
  RequireNonEmpty(record, samples.rows);
  const auto stats =
      ComputeNeighborhoodStats(record, samples, epsilon, delta, {.threads = 1});
  return 0.0 - stats.sum_log_dist[0] / static_cast<double>(samples.rows);
}

double ScottBandwidth(MatrixView samples) {
  MatrixSampleSource source(samples);
  return ScottBandwidth(source);
}

double ScottBandwidth(SampleSource& samples) {
  const std::size_t n = samples.rows();
  const std::size_t d = samples.cols();
  if (n < 2 || d == 0) {
    throw EmptyInputError("Scott's rule needs at least two samples");
  }
  // Welford per coordinate, in sample order.
  std::vector<double> mean(d, 0.0);
  std::vector<double> m2(d, 0.0);
  std::size_t seen = 0;
  samples.Rewind();
  while (auto chunk = samples.NextChunk()) {
    for (std::size_t i = 0; i < chunk->rows; ++i) {
      ++seen;
      const auto row = chunk->row(i);
      for (std::size_t c = 0; c < d; ++c) {
        const double delta = row[c] - mean[c];
        mean[c] += delta / static_cast<double>(seen);
        m2[c] += delta * (row[c] - mean[c]);
      }
    }
  }
  samples.Rewind();
  double std_sum = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    std_sum += std::sqrt(m2[c] / static_cast<double>(seen - 1));
  }
  const double sigma = std_sum / static_cast<double>(d);
  if (!(sigma > 0.0)) {
    throw ConfigError("samples have zero spread; pass a bandwidth explicitly");
  }
  return sigma * std::pow(static_cast<double>(seen),
                          -1.0 / (static_cast<double>(d) + 4.0));
}

namespace {

double KernelScale(double bandwidth, std::size_t d, bool textbook) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw ConfigError("bandwidth must be positive and finite");
  }
  return textbook ? bandwidth
                  : std::pow(bandwidth, static_cast<double>(d));
}

// log of 1 / (n h^d (2 pi)^(d/2)).
double KdeLogNormalizer(double bandwidth, std::size_t d, std::size_t n) {
  const double dd = static_cast<double>(d);
  return -std::log(static_cast<double>(n)) - dd * std::log(bandwidth) -
         0.5 * dd * std::log(2.0 * std::numbers::pi);
}

}  // namespace

double KdeLogScore(std::span<const double> x, MatrixView samples,
                   double bandwidth, bool textbook) {
  const MatrixView record{x.data(), 1, x.size()};
  RequireNonEmpty(record, samples.rows);
  LogKernelSumAccumulator acc(record, KernelScale(bandwidth, x.size(), textbook),
                              {.threads = 1});
  acc.Consume(samples);
  return acc.LogSums()[0] + KdeLogNormalizer(bandwidth, x.size(), samples.rows);
}

double KdeScore(std::span<const double> x, MatrixView samples,
                double bandwidth, bool textbook) {
  return std::exp(KdeLogScore(x, samples, bandwidth, textbook));
}

double ReconstructionScore(std::string_view record_id,
                           std::span<const double> x,
                           const ReconstructionBatch& batch) {
  if (batch.record_id() != record_id) {
    throw IdMismatchError("reconstructions target '" + batch.record_id() +
                          "', not '" + std::string(record_id) + "'");
  }
  const Matrix& recon = batch.reconstructions();
  if (recon.cols() != x.size()) {
    throw DimError("reconstructions have " + std::to_string(recon.cols()) +
                   " columns, record has " + std::to_string(x.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < recon.rows(); ++i) {
    sum += EuclideanDistance(recon.row(i), x);
  }
  return 0.0 - sum / static_cast<double>(recon.rows());
}

McAttackResult RunMcAttack(const RecordSet& audit, SampleSource& raw_samples,
                           const McConfig& config,
                           const KernelOptions& options) {
  config.distance.Validate();
  if (!(config.delta > 0.0)) throw ConfigError("delta must be positive");
  if (audit.size() == 0) throw EmptyInputError("no records to score");
  if (raw_samples.rows() == 0) throw EmptyInputError("no samples");
  if (audit.cols() != raw_samples.cols()) {
    throw DimError("records have " + std::to_string(audit.cols()) +
                   " columns, samples have " +
                   std::to_string(raw_samples.cols()));
  }

  const Matrix records = ApplyTransform(config.distance, audit.data().view(),
                                        options);
  PreparedSamples prepared(raw_samples, config.n_samples, config.distance,
                           options);
  SampleSource& samples = prepared.source();
  const std::size_t n = samples.rows();

  double epsilon = 0.0;
  switch (config.heuristic.kind) {
    case EpsilonHeuristic::Kind::kMedian:
      epsilon = EpsilonMedian(records.view(), samples, options);
      break;
    case EpsilonHeuristic::Kind::kPercentile:
      epsilon = EpsilonPercentile(records.view(), samples,
                                  config.heuristic.value, options);
      break;
    case EpsilonHeuristic::Kind::kFixed:
      epsilon = config.heuristic.value;
      break;
  }

  const NeighborhoodStats stats = ComputeNeighborhoodStats(
      records.view(), samples, epsilon, config.delta, options);
  std::vector<double> scores(audit.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = config.variant == McVariant::kEpsilon
                    ? static_cast<double>(stats.count_within[i]) /
                          static_cast<double>(n)
                    : 0.0 - stats.sum_log_dist[i] / static_cast<double>(n);
  }

  nlohmann::ordered_json digest;
  digest["attack"] = McVariantName(config.variant);
  digest["distance"] = config.distance.Name();
  if (config.distance.kind == DistanceKind::kPca) {
    digest["pca_k"] = config.distance.pca->components.rows();
    digest["pca_whiten"] = config.distance.pca->whiten;
  }
  digest["heuristic"] = config.heuristic.Name();
  digest["epsilon"] = std::isinf(epsilon) ? nlohmann::ordered_json("inf")
                                          : nlohmann::ordered_json(epsilon);
  digest["delta"] = config.delta;
  digest["n_samples"] = n;

  McAttackResult result;
  result.scores = ScoreVector(MakeEntries(audit, scores),
                              std::string(McVariantName(config.variant)),
                              digest.dump());
  result.epsilon = epsilon;
  result.n_samples = n;
  return result;
}

McAttackResult RunMcAttack(const RecordSet& audit, const Matrix& raw_samples,
                           const McConfig& config,
                           const KernelOptions& options) {
  MatrixSampleSource source(raw_samples.view(),
                            RowsWithinBudget(options, raw_samples.cols()));
  return RunMcAttack(audit, source, config, options);
}

McAttackResult RunMcAttack(const RecordSet& claimed_train,
                           const RecordSet& claimed_test,
                           SampleSource& raw_samples, const McConfig& config,
                           const KernelOptions& options) {
  return RunMcAttack(RecordSet::Concat(claimed_train, claimed_test),
                     raw_samples, config, options);
}

KdeAttackResult RunKdeAttack(const RecordSet& audit, SampleSource& raw_samples,
                             const DistanceSpec& distance,
                             const KdeConfig& config,
                             const KernelOptions& options) {
  distance.Validate();
  if (audit.size() == 0) throw EmptyInputError("no records to score");
  if (raw_samples.rows() == 0) throw EmptyInputError("no samples");
  if (audit.cols() != raw_samples.cols()) {
    throw DimError("records have " + std::to_string(audit.cols()) +
                   " columns, samples have " +
                   std::to_string(raw_samples.cols()));
  }
  const Matrix records = ApplyTransform(distance, audit.data().view(), options);
  PreparedSamples prepared(raw_samples, 0, distance, options);
  SampleSource& samples = prepared.source();
  const std::size_t d = records.cols();
  const std::size_t n = samples.rows();

  const double h = config.bandwidth ? *config.bandwidth : ScottBandwidth(samples);
  LogKernelSumAccumulator acc(records.view(),
                              KernelScale(h, d, config.textbook), options);
  samples.Rewind();
  while (auto chunk = samples.NextChunk()) acc.Consume(*chunk);
  samples.Rewind();
  std::vector<double> scores = acc.LogSums();
  const double norm = KdeLogNormalizer(h, d, n);
  for (double& s : scores) s += norm;

  nlohmann::ordered_json digest;
  digest["attack"] = "kde";
  digest["distance"] = distance.Name();
  digest["bandwidth"] = h;
  digest["bandwidth_rule"] = config.bandwidth ? "fixed" : "scott";
  digest["kernel_form"] = config.textbook ? "textbook" : "verbatim";
  digest["score"] = "log-density";
  digest["n_samples"] = n;

  KdeAttackResult result;
  result.scores = ScoreVector(MakeEntries(audit, scores), "kde", digest.dump());
  result.bandwidth = h;
  return result;
}

ScoreVector RunReconstructionAttack(const RecordSet& audit,
                                    ReconstructionOracle& oracle,
                                    std::size_t n,
                                    const KernelOptions& options) {
  if (n == 0) throw ConfigError("need at least one reconstruction per record");
  if (audit.size() == 0) throw EmptyInputError("no records to score");
  const auto count = static_cast<std::int64_t>(audit.size());
  std::vector<double> scores(audit.size());
  std::vector<std::exception_ptr> failures(audit.size());

  auto score_one = [&](std::size_t i) {
    const std::string& id = audit.id(i);
    try {
      const ReconstructionBatch batch = oracle.Reconstruct(id, audit.row(i), n);
      if (batch.reconstructions().rows() != n) {
        throw OracleError("oracle returned " +
                          std::to_string(batch.reconstructions().rows()) +
                          " reconstructions for '" + id + "', expected " +
                          std::to_string(n));
      }
      scores[i] = ReconstructionScore(id, audit.row(i), batch);
    } catch (const OracleError&) {
      failures[i] = std::current_exception();
    } catch (const std::exception& e) {
      failures[i] = std::make_exception_ptr(
          OracleError("reconstruction of '" + id + "' failed: " + e.what()));
    }
  };

  if (oracle.reentrant()) {
#pragma omp parallel for schedule(dynamic) num_threads(ResolveThreads(options))
    for (std::int64_t i = 0; i < count; ++i) {
      score_one(static_cast<std::size_t>(i));
    }
  } else {
    for (std::int64_t i = 0; i < count; ++i) {
      score_one(static_cast<std::size_t>(i));
    }
  }
  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }

  nlohmann::ordered_json digest;
  digest["attack"] = "rec";
  digest["n_reconstructions"] = n;
  return ScoreVector(MakeEntries(audit, scores), "rec", digest.dump());
}

ScoreVector RunScoreFileAttack(const ScoreVector& external,
                               const RecordSet& audit) {
  external.RequireCoverage(audit.ids());
  const ScoreVector ordered = external.Restrict(audit.ids());
  nlohmann::ordered_json digest;
  digest["attack"] = "score-file";
  if (!external.attack_name().empty()) {
    digest["source_attack"] = external.attack_name();
  }
  return ScoreVector(ordered.entries(), "score-file", digest.dump());
}

}  // namespace miaudit
