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

#include "miaudit/distances.h"

#include <omp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "distance_tiles.h"
#include "miaudit/error.h"

namespace miaudit {

using internal::ForEachSquaredDistanceTile;

int ResolveThreads(const KernelOptions& options) {
  return options.threads > 0 ? options.threads : omp_get_max_threads();
}

std::size_t RowsWithinBudget(const KernelOptions& options, std::size_t cols) {
  const std::size_t row_bytes = std::max<std::size_t>(cols, 1) * sizeof(double);
  return std::max<std::size_t>(options.mem_budget_bytes / row_bytes, 1);
}

DistanceSpec DistanceSpec::Raw() { return DistanceSpec{}; }

DistanceSpec DistanceSpec::Pca(std::shared_ptr<const PcaModel> model) {
  DistanceSpec spec;
  spec.kind = DistanceKind::kPca;
  spec.pca = std::move(model);
  return spec;
}

DistanceSpec DistanceSpec::Hog(const HogParams& params) {
  DistanceSpec spec;
  spec.kind = DistanceKind::kHog;
  spec.hog = params;
  return spec;
}

DistanceSpec DistanceSpec::Chist(const ChistParams& params) {
  DistanceSpec spec;
  spec.kind = DistanceKind::kChist;
  spec.chist = params;
  return spec;
}

std::string DistanceSpec::Name() const {
  switch (kind) {
    case DistanceKind::kRawEuclid:
      return "raw";
    case DistanceKind::kPca:
      return "pca";
    case DistanceKind::kHog:
      return "hog";
    case DistanceKind::kChist:
      return "chist";
  }
  return "raw";
}

void DistanceSpec::Validate() const {
  switch (kind) {
    case DistanceKind::kRawEuclid:
      return;
    case DistanceKind::kPca:
      if (!pca) throw ConfigError("PCA distance needs a fitted model");
      return;
    case DistanceKind::kHog:
      hog.Validate();
      return;
    case DistanceKind::kChist:
      chist.Validate();
      return;
  }
}

std::size_t DistanceSpec::OutputDim(std::size_t raw_dim) const {
  Validate();
  switch (kind) {
    case DistanceKind::kRawEuclid:
      return raw_dim;
    case DistanceKind::kPca:
      if (raw_dim != pca->dim()) {
        throw DimError("PCA model expects " + std::to_string(pca->dim()) +
                       " raw features, got " + std::to_string(raw_dim));
      }
      return pca->k();
    case DistanceKind::kHog:
      if (raw_dim != hog.height * hog.width) {
        throw DimError("HOG expects " + std::to_string(hog.height) + "x" +
                       std::to_string(hog.width) + " images, got " +
                       std::to_string(raw_dim) + " values per row");
      }
      return hog.FeatureLength();
    case DistanceKind::kChist:
      if (raw_dim == 0 || raw_dim % chist.channels != 0) {
        throw DimError(std::to_string(raw_dim) +
                       " values per row do not split into " +
                       std::to_string(chist.channels) + " channels");
      }
      return chist.FeatureLength();
  }
  return raw_dim;
}

Matrix ApplyTransform(const DistanceSpec& spec, MatrixView raw,
                      const KernelOptions& options) {
  const std::size_t out_dim = spec.OutputDim(raw.cols);
  switch (spec.kind) {
    case DistanceKind::kRawEuclid:
      return Copy(raw);
    case DistanceKind::kPca:
      return PcaTransformRows(*spec.pca, raw);
    case DistanceKind::kHog:
    case DistanceKind::kChist:
      break;
  }
  Matrix out(raw.rows, out_dim);
  const auto n = static_cast<std::int64_t>(raw.rows);
#pragma omp parallel for schedule(static) num_threads(ResolveThreads(options))
  for (std::int64_t r = 0; r < n; ++r) {
    const auto i = static_cast<std::size_t>(r);
    const std::vector<double> f = spec.kind == DistanceKind::kHog
                                      ? HogFeatures(raw.row(i), spec.hog)
                                      : ChistFeatures(raw.row(i), spec.chist);
    std::copy(f.begin(), f.end(), out.row(i).begin());
  }
  return out;
}

MatrixSampleSource::MatrixSampleSource(MatrixView samples,
                                       std::size_t chunk_rows)
    : samples_(samples),
      chunk_rows_(chunk_rows == 0 ? std::max<std::size_t>(samples.rows, 1)
                                  : chunk_rows) {}

std::optional<MatrixView> MatrixSampleSource::NextChunk() {
  if (next_ >= samples_.rows) return std::nullopt;
  const std::size_t count = std::min(chunk_rows_, samples_.rows - next_);
  MatrixView chunk = samples_.RowRange(next_, count);
  next_ += count;
  return chunk;
}

TransformedSampleSource::TransformedSampleSource(SampleSource& raw,
                                                 DistanceSpec spec,
                                                 KernelOptions options)
    : raw_(raw),
      spec_(std::move(spec)),
      options_(options),
      cols_(spec_.OutputDim(raw.cols())) {}

std::optional<MatrixView> TransformedSampleSource::NextChunk() {
  auto chunk = raw_.NextChunk();
  if (!chunk) return std::nullopt;
  current_ = ApplyTransform(spec_, *chunk, options_);
  return current_.view();
}

Matrix Materialize(SampleSource& source) {
  source.Rewind();
  std::vector<double> values;
  values.reserve(source.rows() * source.cols());
  std::size_t rows = 0;
  while (auto chunk = source.NextChunk()) {
    values.insert(values.end(), chunk->data,
                  chunk->data + chunk->rows * chunk->cols);
    rows += chunk->rows;
  }
  source.Rewind();
  return Matrix(rows, source.cols(), std::move(values));
}

double SquaredThreshold(double epsilon) {
  if (std::isinf(epsilon)) return std::numeric_limits<double>::infinity();
  if (epsilon < 0) return -1.0;
  double s = epsilon * epsilon;
  const double inf = std::numeric_limits<double>::infinity();
  while (s > 0 && std::sqrt(s) > epsilon) s = std::nextafter(s, 0.0);
  while (true) {
    const double next = std::nextafter(s, inf);
    if (std::isinf(next) || std::sqrt(next) > epsilon) break;
    s = next;
  }
  return s;
}

namespace {

void RequireSameDim(MatrixView records, std::size_t sample_cols) {
  if (records.cols == 0) throw DimError("records have no columns");
  if (records.cols != sample_cols) {
    throw DimError("records have " + std::to_string(records.cols) +
                   " columns, samples have " + std::to_string(sample_cols));
  }
}

}  // namespace

MinDistanceAccumulator::MinDistanceAccumulator(MatrixView records,
                                               KernelOptions options)
    : records_(records),
      options_(options),
      min_squared_(records.rows, std::numeric_limits<double>::infinity()) {}

void MinDistanceAccumulator::Consume(MatrixView samples) {
  RequireSameDim(records_, samples.cols);
  double* mins = min_squared_.data();
  ForEachSquaredDistanceTile(
      records_, samples, ResolveThreads(options_),
      [mins](int, std::size_t r, std::size_t, const double* sq,
             std::size_t count) {
        double m = mins[r];
        for (std::size_t j = 0; j < count; ++j) m = std::min(m, sq[j]);
        mins[r] = m;
      });
}

std::vector<double> MinDistanceAccumulator::Distances() const {
  std::vector<double> out(min_squared_.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::sqrt(min_squared_[i]);
  }
  return out;
}

NeighborhoodAccumulator::NeighborhoodAccumulator(MatrixView records,
                                                 double epsilon, double delta,
                                                 KernelOptions options)
    : records_(records),
      delta_(delta),
      threshold_squared_(SquaredThreshold(epsilon)),
      options_(options) {
  if (!(epsilon >= 0)) throw ConfigError("epsilon must be >= 0");
  if (!(delta > 0)) throw ConfigError("delta must be > 0");
  stats_.count_within.assign(records.rows, 0);
  stats_.sum_log_dist.assign(records.rows, 0.0);
}

void NeighborhoodAccumulator::Consume(MatrixView samples) {
  RequireSameDim(records_, samples.cols);
  std::uint64_t* counts = stats_.count_within.data();
  double* sums = stats_.sum_log_dist.data();
  const double threshold = threshold_squared_;
  const double delta = delta_;
  ForEachSquaredDistanceTile(
      records_, samples, ResolveThreads(options_),
      [=](int, std::size_t r, std::size_t, const double* sq,
          std::size_t count) {
        std::uint64_t c = counts[r];
        double s = sums[r];
        for (std::size_t j = 0; j < count; ++j) {
          if (sq[j] <= threshold) {
            ++c;
            s += std::log(std::max(std::sqrt(sq[j]), delta));
          }
        }
        counts[r] = c;
        sums[r] = s;
      });
}

std::vector<double> PairwiseMinDistances(MatrixView records,
                                         MatrixView samples,
                                         const KernelOptions& options) {
  MatrixSampleSource source(samples);
  return PairwiseMinDistances(records, source, options);
}

std::vector<double> PairwiseMinDistances(MatrixView records,
                                         SampleSource& samples,
                                         const KernelOptions& options) {
  RequireSameDim(records, samples.cols());
  MinDistanceAccumulator acc(records, options);
  samples.Rewind();
  while (auto chunk = samples.NextChunk()) acc.Consume(*chunk);
  return acc.Distances();
}

NeighborhoodStats ComputeNeighborhoodStats(MatrixView records,
                                           MatrixView samples, double epsilon,
                                           double delta,
                                           const KernelOptions& options) {
  MatrixSampleSource source(samples);
  return ComputeNeighborhoodStats(records, source, epsilon, delta, options);
}

NeighborhoodStats ComputeNeighborhoodStats(MatrixView records,
                                           SampleSource& samples,
                                           double epsilon, double delta,
                                           const KernelOptions& options) {
  RequireSameDim(records, samples.cols());
  NeighborhoodAccumulator acc(records, epsilon, delta, options);
  samples.Rewind();
  while (auto chunk = samples.NextChunk()) acc.Consume(*chunk);
  return acc.stats();
}

double NearestRankDistance(MatrixView records, SampleSource& samples,
                           std::uint64_t rank, const KernelOptions& options) {
  RequireSameDim(records, samples.cols());
  const std::uint64_t total =
      static_cast<std::uint64_t>(records.rows) * samples.rows();
  if (total == 0) throw EmptyInputError("no record/sample pairs");
  if (rank < 1 || rank > total) {
    throw ConfigError("rank " + std::to_string(rank) + " outside [1, " +
                      std::to_string(total) + "]");
  }
  constexpr int kDigitBits = 16;
  constexpr std::size_t kBuckets = std::size_t{1} << kDigitBits;
  const int threads = ResolveThreads(options);
  const std::size_t capacity =
      std::max<std::size_t>(options.mem_budget_bytes / (2 * sizeof(double)),
                            1);

  // Non-negative doubles order like their bit patterns, so the squared
  // distances can be selected digit by digit from the top.
  std::uint64_t prefix = 0;
  int prefix_bits = 0;
  std::uint64_t remaining = rank;
  std::vector<std::uint64_t> histograms(static_cast<std::size_t>(threads) *
                                        kBuckets);
  while (prefix_bits < 64) {
    const int shift = 64 - prefix_bits - kDigitBits;
    const int kept = prefix_bits;
    const std::uint64_t want = prefix;
    std::fill(histograms.begin(), histograms.end(), 0);
    std::uint64_t* hist = histograms.data();
    samples.Rewind();
    while (auto chunk = samples.NextChunk()) {
      ForEachSquaredDistanceTile(
          records, *chunk, threads,
          [=](int thread, std::size_t, std::size_t, const double* sq,
              std::size_t count) {
            std::uint64_t* h = hist + static_cast<std::size_t>(thread) * kBuckets;
            for (std::size_t j = 0; j < count; ++j) {
              const auto bits = std::bit_cast<std::uint64_t>(sq[j]);
              if (kept == 0 || (bits >> (64 - kept)) == want) {
                ++h[(bits >> shift) & (kBuckets - 1)];
              }
            }
          });
    }
    std::uint64_t bucket = 0;
    std::uint64_t bucket_count = 0;
    for (; bucket < kBuckets; ++bucket) {
      std::uint64_t c = 0;
      for (int t = 0; t < threads; ++t) {
        c += histograms[static_cast<std::size_t>(t) * kBuckets + bucket];
      }
      if (remaining <= c) {
        bucket_count = c;
        break;
      }
      remaining -= c;
    }
    prefix = (prefix << kDigitBits) | bucket;
    prefix_bits += kDigitBits;
    if (prefix_bits == 64) break;

    if (bucket_count <= capacity) {
      std::vector<std::vector<double>> found(static_cast<std::size_t>(threads));
      const int kept_now = prefix_bits;
      const std::uint64_t want_now = prefix;
      samples.Rewind();
      while (auto chunk = samples.NextChunk()) {
        ForEachSquaredDistanceTile(
            records, *chunk, threads,
            [&found, kept_now, want_now](int thread, std::size_t, std::size_t,
                                         const double* sq, std::size_t count) {
              auto& out = found[static_cast<std::size_t>(thread)];
              for (std::size_t j = 0; j < count; ++j) {
                const auto bits = std::bit_cast<std::uint64_t>(sq[j]);
                if ((bits >> (64 - kept_now)) == want_now) out.push_back(sq[j]);
              }
            });
      }
      std::vector<double> values;
      values.reserve(bucket_count);
      for (const auto& part : found) {
        values.insert(values.end(), part.begin(), part.end());
      }
      auto nth = values.begin() + static_cast<std::ptrdiff_t>(remaining - 1);
      std::nth_element(values.begin(), nth, values.end());
      samples.Rewind();
      return std::sqrt(*nth);
    }
  }
  samples.Rewind();
  return std::sqrt(std::bit_cast<double>(prefix));
}

LogKernelSumAccumulator::LogKernelSumAccumulator(MatrixView records,
                                                 double scale,
                                                 KernelOptions options)
    : records_(records),
      inv_two_scale_sq_(1.0 / (2.0 * scale * scale)),
      options_(options),
      running_max_(records.rows, -std::numeric_limits<double>::infinity()),
      running_sum_(records.rows, 0.0) {
  if (!(scale > 0) || !std::isfinite(inv_two_scale_sq_)) {
    throw ConfigError("kernel scale must be positive and finite");
  }
}

void LogKernelSumAccumulator::Consume(MatrixView samples) {
  RequireSameDim(records_, samples.cols);
  double* maxes = running_max_.data();
  double* sums = running_sum_.data();
  const double inv = inv_two_scale_sq_;
  ForEachSquaredDistanceTile(
      records_, samples, ResolveThreads(options_),
      [=](int, std::size_t r, std::size_t, const double* sq,
          std::size_t count) {
        double m = maxes[r];
        double s = sums[r];
        for (std::size_t j = 0; j < count; ++j) {
          const double v = -sq[j] * inv;
          if (v > m) {
            s = s * std::exp(m - v) + 1.0;
            m = v;
          } else {
            s += std::exp(v - m);
          }
        }
        maxes[r] = m;
        sums[r] = s;
      });
}

std::vector<double> LogKernelSumAccumulator::LogSums() const {
  std::vector<double> out(running_max_.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = running_max_[i] + std::log(running_sum_[i]);
  }
  return out;
}

}  // namespace miaudit
