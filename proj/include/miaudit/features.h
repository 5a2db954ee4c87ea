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

#ifndef MIAUDIT_FEATURES_H_
#define MIAUDIT_FEATURES_H_

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "miaudit/matrix.h"

namespace miaudit {

// Projection onto the top-k principal axes of a reference set.
//
// Components are orthonormal rows ordered by descending eigenvalue. Each
// component is oriented so that its first non-negligible entry is positive.
struct PcaModel {
  std::vector<double> mean;         // D
  Matrix components;                // k x D
  std::vector<double> eigenvalues;  // k, descending
  bool whiten = false;              // divide projections by sqrt(eigenvalue)

  std::size_t k() const { return components.rows(); }
  std::size_t dim() const { return mean.size(); }
};

// Fits on the rows of `reference` (mean-centered sample covariance).
// Throws RankError when k exceeds the rank of the centered data and
// ConfigError for k == 0.
PcaModel PcaFit(const Matrix& reference, std::size_t k, bool whiten = false);

std::vector<double> PcaTransform(const PcaModel& model,
                                 std::span<const double> x);
// Row-wise transform, parallel over rows. Each output row is bit-identical to
// PcaTransform of the corresponding input row.
Matrix PcaTransformRows(const PcaModel& model, MatrixView rows);

// Writes `path` (mean and components as two matrix blocks) and
// `path` + ".json" (k, dimension, sign convention, whitening, eigenvalues).
void SavePcaModel(const PcaModel& model, const std::filesystem::path& path);
PcaModel LoadPcaModel(const std::filesystem::path& path);

// Histogram of oriented gradients over a single-channel image stored
// row-major. Defaults fit 28x28 inputs: 4x4 cells of 7 px, 9 unsigned bins,
// 2x2-cell blocks with stride one cell.
struct HogParams {
  std::size_t cell_size = 7;
  std::size_t orientation_bins = 9;
  std::size_t block_size = 2;
  std::size_t height = 28;
  std::size_t width = 28;

  void Validate() const;
  std::size_t BlockCount() const;
  std::size_t FeatureLength() const;
};

inline constexpr double kHogNormEpsilon = 1e-6;

std::vector<double> HogFeatures(std::span<const double> image,
                                const HogParams& params);

// Per-channel intensity histogram over half-open uniform bins on [lo, hi).
// Pixels are channel-last; out-of-range intensities land in the boundary
// bins.
struct ChistParams {
  std::size_t bins_per_channel = 8;
  std::size_t channels = 3;
  double lo = 0.0;
  double hi = 1.0;

  void Validate() const;
  std::size_t FeatureLength() const { return bins_per_channel * channels; }
};

std::vector<double> ChistFeatures(std::span<const double> image,
                                  const ChistParams& params);

}  // namespace miaudit

#endif  // MIAUDIT_FEATURES_H_
