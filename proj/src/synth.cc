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

#include "miaudit/synth.h"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <cstdio>
#include <random>

#include "miaudit/error.h"

namespace miaudit {
namespace {

bool IsScaledIdentity(const Matrix& c, double* std_out) {
  const double v = c(0, 0);
  for (std::size_t i = 0; i < c.rows(); ++i) {
    for (std::size_t j = 0; j < c.cols(); ++j) {
      if (c(i, j) != (i == j ? v : 0.0)) return false;
    }
  }
  if (!(v > 0.0)) return false;
  *std_out = std::sqrt(v);
  return true;
}

std::size_t BlockCount(std::size_t n) {
  return (n + kGeneratorBlockRows - 1) / kGeneratorBlockRows;
}

// Fills rows [block * kGeneratorBlockRows, ...) of a generator stream.
void GenerateBlock(const MemorizingGenerator& g, std::size_t block,
                   std::size_t rows, double* out) {
  const std::size_t d = g.population.dim();
  Rng rng(DeriveSeed(g.seed, block));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t pool = g.train_pool.rows();
  for (std::size_t r = 0; r < rows; ++r) {
    std::span<double> row(out + r * d, d);
    if (g.rho > 0.0 && unit(rng) < g.rho) {
      std::uniform_int_distribution<std::size_t> pick(0, pool - 1);
      const auto src = g.train_pool.row(pick(rng));
      for (std::size_t c = 0; c < d; ++c) {
        row[c] = src[c] + (g.sigma > 0.0 ? g.sigma * normal(rng) : 0.0);
      }
    } else {
      g.population.Draw(rng, row);
    }
  }
}

}  // namespace

GaussianMixture::GaussianMixture(std::vector<double> weights,
                                 std::vector<std::vector<double>> means,
                                 std::vector<Matrix> covariances)
    : weights_(std::move(weights)), means_(std::move(means)) {
  const std::size_t k = weights_.size();
  if (k == 0) throw ConfigError("mixture needs at least one component");
  if (means_.size() != k || covariances.size() != k) {
    throw ConfigError("mixture weights, means and covariances differ in count");
  }
  const std::size_t d = means_.front().size();
  if (d == 0) throw ConfigError("mixture dimension must be positive");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ConfigError("mixture weights must be non-negative");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("mixture weights sum to " + std::to_string(total) +
                      ", not 1");
  }
  cumulative_.resize(k);
  std::partial_sum(weights_.begin(), weights_.end(), cumulative_.begin());
  cumulative_.back() = 1.0;

  diagonal_std_.assign(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    if (means_[i].size() != d || covariances[i].rows() != d ||
        covariances[i].cols() != d) {
      throw DimError("mixture component " + std::to_string(i) +
                     " has the wrong dimension");
    }
    if (IsScaledIdentity(covariances[i], &diagonal_std_[i])) {
      factors_.emplace_back();
      continue;
    }
    Eigen::MatrixXd cov(d, d);
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = 0; c < d; ++c) cov(r, c) = covariances[i](r, c);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
      throw ConfigError("covariance of component " + std::to_string(i) +
                        " is not positive definite");
    }
    const Eigen::MatrixXd l = llt.matrixL();
    Matrix factor(d, d);
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = 0; c <= r; ++c) factor(r, c) = l(r, c);
    }
    factors_.push_back(std::move(factor));
  }
}

GaussianMixture GaussianMixture::Isotropic(std::size_t dim,
                                           std::size_t components,
                                           double spread, double component_std,
                                           std::uint64_t seed) {
  if (dim == 0 || components == 0) {
    throw ConfigError("mixture dimension and component count must be >= 1");
  }
  if (!(spread >= 0.0) || !(component_std > 0.0)) {
    throw ConfigError("mixture spread must be >= 0 and component std > 0");
  }
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, spread);
  std::vector<std::vector<double>> means(components, std::vector<double>(dim));
  for (auto& mean : means) {
    for (double& v : mean) v = spread > 0.0 ? normal(rng) : 0.0;
  }
  Matrix cov(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) cov(i, i) = component_std * component_std;
  return GaussianMixture(
      std::vector<double>(components, 1.0 / static_cast<double>(components)),
      std::move(means), std::vector<Matrix>(components, cov));
}

std::vector<double> GaussianMixture::Mean() const {
  std::vector<double> mean(dim(), 0.0);
  for (std::size_t k = 0; k < components(); ++k) {
    for (std::size_t c = 0; c < mean.size(); ++c) {
      mean[c] += weights_[k] * means_[k][c];
    }
  }
  return mean;
}

void GaussianMixture::Draw(Rng& rng, std::span<double> out) const {
  const std::size_t d = dim();
  if (out.size() != d) throw DimError("mixture draw has the wrong dimension");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double u = unit(rng);
  const std::size_t k = static_cast<std::size_t>(
      std::upper_bound(cumulative_.begin(), cumulative_.end() - 1, u) -
      cumulative_.begin());
  const auto& mu = means_[k];
  if (diagonal_std_[k] > 0.0) {
    const double s = diagonal_std_[k];
    for (std::size_t c = 0; c < d; ++c) out[c] = mu[c] + s * normal(rng);
    return;
  }
  std::vector<double> z(d);
  for (double& v : z) v = normal(rng);
  const Matrix& l = factors_[k];
  for (std::size_t r = 0; r < d; ++r) {
    double acc = mu[r];
    for (std::size_t c = 0; c <= r; ++c) acc += l(r, c) * z[c];
    out[r] = acc;
  }
}

Matrix GaussianMixture::DrawRows(std::size_t rows, std::uint64_t seed,
                                 const KernelOptions& options) const {
  Matrix out(rows, dim());
  const auto blocks = static_cast<std::int64_t>(BlockCount(rows));
#pragma omp parallel for schedule(static) num_threads(ResolveThreads(options))
  for (std::int64_t b = 0; b < blocks; ++b) {
    const auto block = static_cast<std::size_t>(b);
    const std::size_t begin = block * kGeneratorBlockRows;
    const std::size_t count = std::min(kGeneratorBlockRows, rows - begin);
    Rng rng(DeriveSeed(seed, block));
    for (std::size_t r = begin; r < begin + count; ++r) Draw(rng, out.row(r));
  }
  return out;
}

void MemorizingGenerator::Validate() const {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw ConfigError("memorization rate must lie in [0, 1]");
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw ConfigError("noise scale must be finite and >= 0");
  }
  if (rho > 0.0 && train_pool.rows() == 0) {
    throw ConfigError("memorization rate > 0 needs a non-empty train pool");
  }
  if (train_pool.rows() > 0 && train_pool.cols() != population.dim()) {
    throw DimError("train pool has " + std::to_string(train_pool.cols()) +
                   " columns, population has " +
                   std::to_string(population.dim()));
  }
}

SampleMatrix Generate(const MemorizingGenerator& generator, std::size_t n,
                      const KernelOptions& options) {
  generator.Validate();
  if (n == 0) throw ConfigError("need at least one sample");
  const std::size_t d = generator.population.dim();
  Matrix out(n, d);
  const auto blocks = static_cast<std::int64_t>(BlockCount(n));
#pragma omp parallel for schedule(static) num_threads(ResolveThreads(options))
  for (std::int64_t b = 0; b < blocks; ++b) {
    const auto block = static_cast<std::size_t>(b);
    const std::size_t begin = block * kGeneratorBlockRows;
    GenerateBlock(generator, block, std::min(kGeneratorBlockRows, n - begin),
                  out.data() + begin * d);
  }
  char note[128];
  std::snprintf(note, sizeof(note), "memorizing rho=%g sigma=%g seed=%llu",
                generator.rho, generator.sigma,
                static_cast<unsigned long long>(generator.seed));
  return {std::move(out), note};
}

GeneratorSampleSource::GeneratorSampleSource(
    const MemorizingGenerator& generator, std::size_t n,
    std::size_t chunk_blocks)
    : generator_(generator), n_(n), chunk_blocks_(std::max<std::size_t>(chunk_blocks, 1)) {
  generator_.Validate();
  if (n == 0) throw ConfigError("need at least one sample");
}

std::optional<MatrixView> GeneratorSampleSource::NextChunk() {
  const std::size_t total_blocks = BlockCount(n_);
  if (next_block_ >= total_blocks) return std::nullopt;
  const std::size_t d = cols();
  const std::size_t first = next_block_;
  const std::size_t last = std::min(total_blocks, first + chunk_blocks_);
  const std::size_t begin = first * kGeneratorBlockRows;
  const std::size_t end = std::min(n_, last * kGeneratorBlockRows);
  current_ = Matrix(end - begin, d);
  for (std::size_t b = first; b < last; ++b) {
    const std::size_t row = b * kGeneratorBlockRows;
    GenerateBlock(generator_, b, std::min(kGeneratorBlockRows, n_ - row),
                  current_.data() + (row - begin) * d);
  }
  next_block_ = last;
  return current_.view();
}

BiasedReconstructor::BiasedReconstructor(
    std::unordered_set<std::string> member_ids, double sigma_member,
    double sigma_nonmember, std::uint64_t seed)
    : member_ids_(std::move(member_ids)),
      sigma_member_(sigma_member),
      sigma_nonmember_(sigma_nonmember),
      seed_(seed) {
  if (!(sigma_member > 0.0) || !(sigma_nonmember > sigma_member) ||
      !std::isfinite(sigma_nonmember)) {
    throw ConfigError("need 0 < member residual scale < non-member scale");
  }
}

ReconstructionBatch BiasedReconstructor::Reconstruct(
    std::string_view record_id, std::span<const double> x, std::size_t n) {
  if (n == 0) throw ConfigError("need at least one reconstruction");
  const double sigma = member_ids_.contains(std::string(record_id))
                           ? sigma_member_
                           : sigma_nonmember_;
  Rng rng(DeriveSeed(seed_, HashId(record_id)));
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(n, x.size());
  for (std::size_t r = 0; r < n; ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < x.size(); ++c) {
      row[c] = x[c] + sigma * normal(rng);
    }
  }
  return ReconstructionBatch(std::string(record_id), std::move(out));
}

double ChiMean(double k) {
  if (!(k > 0.0)) throw ConfigError("chi degrees of freedom must be positive");
  return std::sqrt(2.0) * std::exp(std::lgamma((k + 1.0) / 2.0) -
                                   std::lgamma(k / 2.0));
}

SyntheticWorld BuildSyntheticWorld(const SyntheticWorldConfig& config,
                                   const KernelOptions& options) {
  GaussianMixture population = GaussianMixture::Isotropic(
      config.dim, config.components, config.spread, config.component_std,
      DeriveSeed(config.seed, 0));
  Matrix train = population.DrawRows(config.train_pool_size,
                                     DeriveSeed(config.seed, 1), options);
  Matrix test = population.DrawRows(config.test_pool_size,
                                    DeriveSeed(config.seed, 2), options);
  MemorizingGenerator generator{train, config.rho, config.sigma, population,
                                DeriveSeed(config.seed, 3)};
  SampleMatrix samples = Generate(generator, config.n_samples, options);
  return SyntheticWorld{
      std::move(population),
      RecordSet::WithIndexIds(std::move(train), "tr", Origin::kClaimedTrain),
      RecordSet::WithIndexIds(std::move(test), "te", Origin::kClaimedTest),
      std::move(samples.data)};
}

}  // namespace miaudit
