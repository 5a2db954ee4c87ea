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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "miaudit/error.h"
#include "miaudit/features.h"

namespace miaudit {

void HogParams::Validate() const {
  if (cell_size == 0 || height == 0 || width == 0) {
    throw ConfigError("HOG cell size and image shape must be positive");
  }
  if (height % cell_size != 0 || width % cell_size != 0) {
    throw ConfigError("image shape " + std::to_string(height) + "x" +
                      std::to_string(width) + " is not divisible by cell size " +
                      std::to_string(cell_size));
  }
  if (orientation_bins < 2) {
    throw ConfigError("HOG needs at least two orientation bins");
  }
  if (block_size == 0 || block_size > height / cell_size ||
      block_size > width / cell_size) {
    throw ConfigError("HOG block size does not fit the cell grid");
  }
}

std::size_t HogParams::BlockCount() const {
  return (height / cell_size - block_size + 1) *
         (width / cell_size - block_size + 1);
}

std::size_t HogParams::FeatureLength() const {
  return BlockCount() * block_size * block_size * orientation_bins;
}

std::vector<double> HogFeatures(std::span<const double> image,
                                const HogParams& params) {
  params.Validate();
  const std::size_t h = params.height;
  const std::size_t w = params.width;
  if (image.size() != h * w) {
    throw DimError("HOG image has " + std::to_string(image.size()) +
                   " pixels, expected " + std::to_string(h * w));
  }
  const std::size_t cells_y = h / params.cell_size;
  const std::size_t cells_x = w / params.cell_size;
  const std::size_t bins = params.orientation_bins;
  const double bin_width = std::numbers::pi / static_cast<double>(bins);
  const double cell_area =
      static_cast<double>(params.cell_size * params.cell_size);

  // Central differences; border rows/columns get a zero gradient.
  std::vector<double> cell_hist(cells_y * cells_x * bins, 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double gx = 0.0;
      double gy = 0.0;
      if (x > 0 && x + 1 < w) gx = image[y * w + x + 1] - image[y * w + x - 1];
      if (y > 0 && y + 1 < h) gy = image[(y + 1) * w + x] - image[(y - 1) * w + x];
      if (gx == 0.0 && gy == 0.0) continue;
      // Unsigned orientation: fold the vector into the upper half plane
      // before atan2 so g and -g land in the same bin bit-for-bit.
      if (gy < 0.0 || (gy == 0.0 && gx < 0.0)) {
        gx = -gx;
        gy = -gy;
      }
      const double angle = std::atan2(gy, gx);  // [0, pi]
      auto bin = static_cast<std::size_t>(angle / bin_width);
      if (bin >= bins) bin = 0;  // angle == pi folds onto 0
      const double magnitude = std::sqrt(gx * gx + gy * gy);
      const std::size_t cell =
          (y / params.cell_size) * cells_x + x / params.cell_size;
      cell_hist[cell * bins + bin] += magnitude / cell_area;
    }
  }

  const std::size_t b = params.block_size;
  std::vector<double> features;
  features.reserve(params.FeatureLength());
  std::vector<double> block(b * b * bins);
  for (std::size_t by = 0; by + b <= cells_y; ++by) {
    for (std::size_t bx = 0; bx + b <= cells_x; ++bx) {
      std::size_t pos = 0;
      for (std::size_t cy = by; cy < by + b; ++cy) {
        for (std::size_t cx = bx; cx < bx + b; ++cx) {
          const double* src = &cell_hist[(cy * cells_x + cx) * bins];
          std::copy(src, src + bins, block.begin() + static_cast<std::ptrdiff_t>(pos));
          pos += bins;
        }
      }
      double norm_sq = 0.0;
      for (double v : block) norm_sq += v * v;
      const double denom =
          std::sqrt(norm_sq + kHogNormEpsilon * kHogNormEpsilon);
      for (double v : block) features.push_back(v / denom);
    }
  }
  return features;
}

void ChistParams::Validate() const {
  if (bins_per_channel < 1) throw ConfigError("CHIST needs at least one bin");
  if (channels < 1) throw ConfigError("CHIST needs at least one channel");
  if (!(hi > lo)) throw ConfigError("CHIST intensity range must have hi > lo");
}

std::vector<double> ChistFeatures(std::span<const double> image,
                                  const ChistParams& params) {
  params.Validate();
  if (image.empty() || image.size() % params.channels != 0) {
    throw DimError("CHIST image of " + std::to_string(image.size()) +
                   " values does not split into " +
                   std::to_string(params.channels) + " channels");
  }
  const std::size_t pixels = image.size() / params.channels;
  const std::size_t bins = params.bins_per_channel;
  const double scale = static_cast<double>(bins) / (params.hi - params.lo);
  std::vector<double> hist(params.FeatureLength(), 0.0);
  for (std::size_t p = 0; p < pixels; ++p) {
    for (std::size_t c = 0; c < params.channels; ++c) {
      const double t = (image[p * params.channels + c] - params.lo) * scale;
      std::size_t bin = 0;
      if (t >= static_cast<double>(bins)) {
        bin = bins - 1;
      } else if (t > 0.0) {
        bin = static_cast<std::size_t>(t);
      }
      hist[c * bins + bin] += 1.0;
    }
  }
  for (double& v : hist) v /= static_cast<double>(pixels);
  return hist;
}

}  // namespace miaudit
