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

#ifndef MIAUDIT_SYNTH_H_
#define MIAUDIT_SYNTH_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "miaudit/attacks.h"
#include "miaudit/distances.h"
#include "miaudit/matrix.h"
#include "miaudit/rng.h"
#include "miaudit/types.h"

namespace miaudit {

// Finite Gaussian mixture used as the synthetic data population.
class GaussianMixture {
 public:
  GaussianMixture(std::vector<double> weights,
                  std::vector<std::vector<double>> means,
                  std::vector<Matrix> covariances);

  // Equal weights, means drawn from N(0, spread^2 I), covariance
  // component_std^2 I.
  static GaussianMixture Isotropic(std::size_t dim, std::size_t components,
                                   double spread, double component_std,
                                   std::uint64_t seed);

  std::size_t dim() const { return means_.front().size(); }
  std::size_t components() const { return weights_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<std::vector<double>>& means() const { return means_; }

  // sum_k w_k mu_k.
  std::vector<double> Mean() const;

  void Draw(Rng& rng, std::span<double> out) const;
  // Rows are produced in blocks with independent derived streams, so the
  // result does not depend on the thread count.
  Matrix DrawRows(std::size_t rows, std::uint64_t seed,
                  const KernelOptions& options = {}) const;

 private:
  std::vector<double> weights_;
  std::vector<double> cumulative_;
  std::vector<std::vector<double>> means_;
  std::vector<Matrix> factors_;  // lower Cholesky factors
  std::vector<double> diagonal_std_;  // > 0 when the covariance is s^2 I
};

// Generator that outputs, per sample, a noisy copy of a random train-pool
// row with probability rho, and a fresh population draw otherwise.
struct MemorizingGenerator {
  Matrix train_pool;
  double rho = 0.0;
  double sigma = 0.0;
  GaussianMixture population;
  std::uint64_t seed = 0;

  void Validate() const;
};

inline constexpr std::size_t kGeneratorBlockRows = 4096;

SampleMatrix Generate(const MemorizingGenerator& generator, std::size_t n,
                      const KernelOptions& options = {});

// Streams exactly the rows Generate would return, one block at a time.
class GeneratorSampleSource : public SampleSource {
 public:
  GeneratorSampleSource(const MemorizingGenerator& generator, std::size_t n,
                        std::size_t chunk_blocks = 16);

  std::size_t rows() const override { return n_; }
  std::size_t cols() const override { return generator_.population.dim(); }
  void Rewind() override { next_block_ = 0; }
  std::optional<MatrixView> NextChunk() override;

 private:
  const MemorizingGenerator& generator_;
  std::size_t n_;
  std::size_t chunk_blocks_;
  std::size_t next_block_ = 0;
  Matrix current_;
};

// Reconstruction oracle whose residuals are isotropic Gaussians, tighter
// for members than for non-members.
class BiasedReconstructor : public ReconstructionOracle {
 public:
  BiasedReconstructor(std::unordered_set<std::string> member_ids,
                      double sigma_member, double sigma_nonmember,
                      std::uint64_t seed);

  ReconstructionBatch Reconstruct(std::string_view record_id,
                                  std::span<const double> x,
                                  std::size_t n) override;
  bool reentrant() const override { return true; }

 private:
  std::unordered_set<std::string> member_ids_;
  double sigma_member_;
  double sigma_nonmember_;
  std::uint64_t seed_;
};

// Mean of the chi distribution with k degrees of freedom.
double ChiMean(double k);

struct SyntheticWorldConfig {
  std::size_t dim = 40;
  std::size_t components = 10;
  double spread = 3.0;
  double component_std = 1.0;
  std::size_t train_pool_size = 1000;
  std::size_t test_pool_size = 1000;
  double rho = 0.0;
  double sigma = 0.5;
  std::size_t n_samples = 10000;
  std::uint64_t seed = 0;
};

// A population, disjoint train/test pools drawn from it, and samples of a
// memorizing generator trained on the train pool.
struct SyntheticWorld {
  GaussianMixture population;
  RecordSet train_pool;  // ids "tr<i>"
  RecordSet test_pool;   // ids "te<i>"
  Matrix samples;
};

SyntheticWorld BuildSyntheticWorld(const SyntheticWorldConfig& config,
                                   const KernelOptions& options = {});

}  // namespace miaudit

#endif  // MIAUDIT_SYNTH_H_
