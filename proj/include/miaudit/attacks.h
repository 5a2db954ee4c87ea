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

#ifndef MIAUDIT_ATTACKS_H_
#define MIAUDIT_ATTACKS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "miaudit/distances.h"
#include "miaudit/matrix.h"
#include "miaudit/types.h"

namespace miaudit {

// How the neighborhood radius epsilon is chosen from the measured distances.
struct EpsilonHeuristic {
  enum class Kind { kMedian, kPercentile, kFixed };

  Kind kind = Kind::kMedian;
  double value = 0.0;  // percentile fraction, or the fixed epsilon

  static EpsilonHeuristic Median() { return {}; }
  static EpsilonHeuristic Percentile(double p);
  static EpsilonHeuristic Fixed(double epsilon);
  // "median", "percentile:<p>" or "fixed:<epsilon>" (also "fixed:inf").
  static EpsilonHeuristic Parse(std::string_view text);

  std::string Name() const;
};

enum class McVariant { kEpsilon, kDistance };

// "mc-eps" / "mc-d".
std::string_view McVariantName(McVariant variant);

inline constexpr double kDefaultDelta = 1e-12;

struct McConfig {
  DistanceSpec distance;
  EpsilonHeuristic heuristic;
  std::size_t n_samples = 0;  // 0: use every sample provided
  double delta = kDefaultDelta;
  McVariant variant = McVariant::kEpsilon;
};

struct KdeConfig {
  std::optional<double> bandwidth;  // Scott's rule when unset
  bool textbook = false;            // kernel argument (x - g) / h
};

// 1-based nearest rank ceil(p * n), clamped to [1, n]. A relative slack of
// 1e-9 keeps decimal fractions like 0.07 * 100 from rounding up a rank.
std::uint64_t NearestRank(double p, std::uint64_t n);

// Median over records of the minimum record-to-sample distance.
double EpsilonMedian(MatrixView records, MatrixView samples,
                     const KernelOptions& options = {});
double EpsilonMedian(MatrixView records, SampleSource& samples,
                     const KernelOptions& options = {});

// Nearest-rank p-quantile of all record-to-sample distances.
double EpsilonPercentile(MatrixView records, MatrixView samples, double p,
                         const KernelOptions& options = {});
double EpsilonPercentile(MatrixView records, SampleSource& samples, double p,
                         const KernelOptions& options = {});

// Fraction of samples within epsilon of x.
double McEpsilonScore(std::span<const double> x, MatrixView samples,
                      double epsilon);
// -(1/n) * sum over samples within epsilon of ln(max(d, delta)).
double McDistanceScore(std::span<const double> x, MatrixView samples,
                       double epsilon, double delta = kDefaultDelta);

// Same estimators over precomputed distances d(x, g_i) for an arbitrary
// distance function.
double McEpsilonScoreFromDistances(std::span<const double> distances,
                                   double epsilon);
double McDistanceScoreFromDistances(std::span<const double> distances,
                                    double epsilon,
                                    double delta = kDefaultDelta);

// Scott's rule: mean per-coordinate sample std times n^(-1/(d+4)).
double ScottBandwidth(MatrixView samples);
double ScottBandwidth(SampleSource& samples);

// Gaussian KDE at x:
//   1/(n h^d) * sum_i K((x - g_i) / h^d)      (default)
//   1/(n h^d) * sum_i K((x - g_i) / h)        (textbook)
// with K the standard d-variate normal density.
double KdeScore(std::span<const double> x, MatrixView samples,
                double bandwidth, bool textbook = false);
// Natural log of KdeScore, computed without underflow.
double KdeLogScore(std::span<const double> x, MatrixView samples,
                   double bandwidth, bool textbook = false);

// -(1/n) * sum_i ||reconstruction_i - x||.
double ReconstructionScore(std::string_view record_id,
                           std::span<const double> x,
                           const ReconstructionBatch& batch);

struct McAttackResult {
  ScoreVector scores;
  double epsilon = 0.0;
  std::size_t n_samples = 0;
};

// Transforms records and samples into the distance space, resolves epsilon
// from the heuristic (computed on this audit set) and scores every record.
McAttackResult RunMcAttack(const RecordSet& audit, SampleSource& raw_samples,
                           const McConfig& config,
                           const KernelOptions& options = {});
McAttackResult RunMcAttack(const RecordSet& audit, const Matrix& raw_samples,
                           const McConfig& config,
                           const KernelOptions& options = {});
McAttackResult RunMcAttack(const RecordSet& claimed_train,
                           const RecordSet& claimed_test,
                           SampleSource& raw_samples, const McConfig& config,
                           const KernelOptions& options = {});

struct KdeAttackResult {
  ScoreVector scores;  // log KDE values; ranking equals the KDE ranking
  double bandwidth = 0.0;
};

KdeAttackResult RunKdeAttack(const RecordSet& audit, SampleSource& raw_samples,
                             const DistanceSpec& distance,
                             const KdeConfig& config,
                             const KernelOptions& options = {});

// Supplies reconstructions of a record, e.g. a VAE encode/decode pass.
class ReconstructionOracle {
 public:
  virtual ~ReconstructionOracle() = default;
  virtual ReconstructionBatch Reconstruct(std::string_view record_id,
                                          std::span<const double> x,
                                          std::size_t n) = 0;
  // True if Reconstruct may be called concurrently.
  virtual bool reentrant() const { return false; }
};

// Scores every record with ReconstructionScore over n oracle reconstructions.
// Oracle failures surface as OracleError naming the record.
ScoreVector RunReconstructionAttack(const RecordSet& audit,
                                    ReconstructionOracle& oracle,
                                    std::size_t n,
                                    const KernelOptions& options = {});

// Externally computed scores (e.g. a GAN discriminator), checked to cover
// exactly the audit set and reordered to match it.
ScoreVector RunScoreFileAttack(const ScoreVector& external,
                               const RecordSet& audit);

}  // namespace miaudit

#endif  // MIAUDIT_ATTACKS_H_
