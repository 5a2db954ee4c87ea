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

#ifndef MIAUDIT_DISTANCES_H_
#define MIAUDIT_DISTANCES_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "miaudit/features.h"
#include "miaudit/matrix.h"

namespace miaudit {

// Parallelism and memory knobs shared by every kernel.
struct KernelOptions {
  int threads = 0;  // <= 0: all available cores
  std::size_t mem_budget_bytes = std::size_t{256} << 20;
};

int ResolveThreads(const KernelOptions& options);
// Rows of `cols` doubles that fit in the memory budget (at least 1).
std::size_t RowsWithinBudget(const KernelOptions& options, std::size_t cols);

enum class DistanceKind { kRawEuclid, kPca, kHog, kChist };

// The space in which Euclidean distances are measured.
struct DistanceSpec {
  DistanceKind kind = DistanceKind::kRawEuclid;
  std::shared_ptr<const PcaModel> pca;
  HogParams hog;
  ChistParams chist;
  std::string note;

  static DistanceSpec Raw();
  static DistanceSpec Pca(std::shared_ptr<const PcaModel> model);
  static DistanceSpec Hog(const HogParams& params);
  static DistanceSpec Chist(const ChistParams& params);

  // "raw", "pca", "hog" or "chist".
  std::string Name() const;
  void Validate() const;
  std::size_t OutputDim(std::size_t raw_dim) const;
};

// Maps raw rows into the distance space. Parallel over rows.
Matrix ApplyTransform(const DistanceSpec& spec, MatrixView raw,
                      const KernelOptions& options = {});

// A rewindable stream of sample chunks. Chunks stay valid until the next
// call to NextChunk or Rewind.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual std::size_t rows() const = 0;
  virtual std::size_t cols() const = 0;
  virtual void Rewind() = 0;
  virtual std::optional<MatrixView> NextChunk() = 0;
};

// Serves an in-memory matrix (optionally only its first `limit` rows) in
// chunks of `chunk_rows`.
class MatrixSampleSource : public SampleSource {
 public:
  explicit MatrixSampleSource(MatrixView samples, std::size_t chunk_rows = 0);

  std::size_t rows() const override { return samples_.rows; }
  std::size_t cols() const override { return samples_.cols; }
  void Rewind() override { next_ = 0; }
  std::optional<MatrixView> NextChunk() override;

 private:
  MatrixView samples_;
  std::size_t chunk_rows_;
  std::size_t next_ = 0;
};

// Applies a DistanceSpec to every chunk of an upstream raw source.
class TransformedSampleSource : public SampleSource {
 public:
  TransformedSampleSource(SampleSource& raw, DistanceSpec spec,
                          KernelOptions options = {});

  std::size_t rows() const override { return raw_.rows(); }
  std::size_t cols() const override { return cols_; }
  void Rewind() override { raw_.Rewind(); }
  std::optional<MatrixView> NextChunk() override;

 private:
  SampleSource& raw_;
  DistanceSpec spec_;
  KernelOptions options_;
  std::size_t cols_;
  Matrix current_;
};

// Reads every chunk of `source` into memory.
Matrix Materialize(SampleSource& source);

// Largest s with sqrt(s) <= epsilon, so `squared <= s` is the exact
// counterpart of `distance <= epsilon`. +inf for an infinite epsilon.
double SquaredThreshold(double epsilon);

// min_j ||records_i - samples_j||, streamed over sample chunks.
class MinDistanceAccumulator {
 public:
  MinDistanceAccumulator(MatrixView records, KernelOptions options = {});
  void Consume(MatrixView samples);
  std::vector<double> Distances() const;

 private:
  MatrixView records_;
  KernelOptions options_;
  std::vector<double> min_squared_;
};

// Per-record neighbor count within epsilon and the sum of
// ln(max(d, delta)) over those neighbors, in sample order.
struct NeighborhoodStats {
  std::vector<std::uint64_t> count_within;
  std::vector<double> sum_log_dist;
};

class NeighborhoodAccumulator {
 public:
  NeighborhoodAccumulator(MatrixView records, double epsilon, double delta,
                          KernelOptions options = {});
  void Consume(MatrixView samples);
  const NeighborhoodStats& stats() const { return stats_; }

 private:
  MatrixView records_;
  double delta_;
  double threshold_squared_;
  KernelOptions options_;
  NeighborhoodStats stats_;
};

std::vector<double> PairwiseMinDistances(MatrixView records,
                                         MatrixView samples,
                                         const KernelOptions& options = {});
std::vector<double> PairwiseMinDistances(MatrixView records,
                                         SampleSource& samples,
                                         const KernelOptions& options = {});

NeighborhoodStats ComputeNeighborhoodStats(MatrixView records,
                                           MatrixView samples, double epsilon,
                                           double delta,
                                           const KernelOptions& options = {});
NeighborhoodStats ComputeNeighborhoodStats(MatrixView records,
                                           SampleSource& samples,
                                           double epsilon, double delta,
                                           const KernelOptions& options = {});

// The `rank`-th smallest (1-based) of all records x samples distances.
// Exact; selects on the bit patterns of squared distances in up to four
// 16-bit passes and never materializes the distance matrix.
double NearestRankDistance(MatrixView records, SampleSource& samples,
                           std::uint64_t rank,
                           const KernelOptions& options = {});

// Log-domain Gaussian kernel sums per record:
//   log sum_j exp(-||x_i - g_j||^2 / (2 * scale^2)),
// streamed with a running maximum.
class LogKernelSumAccumulator {
 public:
  LogKernelSumAccumulator(MatrixView records, double scale,
                          KernelOptions options = {});
  void Consume(MatrixView samples);
  std::vector<double> LogSums() const;

 private:
  MatrixView records_;
  double inv_two_scale_sq_;
  KernelOptions options_;
  std::vector<double> running_max_;
  std::vector<double> running_sum_;
};

// Serial double-loop implementations kept as the correctness baseline for
// the tiled kernels and for benchmarking.
namespace reference {

std::vector<double> PairwiseMinDistances(MatrixView records,
                                         MatrixView samples);
NeighborhoodStats ComputeNeighborhoodStats(MatrixView records,
                                           MatrixView samples, double epsilon,
                                           double delta);
std::vector<double> AllDistances(MatrixView records, MatrixView samples);
double NearestRankDistance(MatrixView records, MatrixView samples,
                           std::uint64_t rank);

}  // namespace reference

}  // namespace miaudit

#endif  // MIAUDIT_DISTANCES_H_
