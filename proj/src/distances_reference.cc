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
#include <limits>

#include "miaudit/distances.h"
#include "miaudit/error.h"

namespace miaudit::reference {

namespace {

double Distance(const double* a, const double* b, std::size_t dim) {
  double sum = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    const double d = a[k] - b[k];
    sum += d * d;
  }
  return std::sqrt(sum);
}

void Check(MatrixView records, MatrixView samples) {
  if (records.cols != samples.cols) throw DimError("dimension mismatch");
}

}  // namespace

std::vector<double> PairwiseMinDistances(MatrixView records,
                                         MatrixView samples) {
  Check(records, samples);
  std::vector<double> out(records.rows,
                          std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < records.rows; ++i) {
    for (std::size_t j = 0; j < samples.rows; ++j) {
      out[i] = std::min(out[i], Distance(records.data + i * records.cols,
                                         samples.data + j * samples.cols,
                                         records.cols));
    }
  }
  return out;
}

NeighborhoodStats ComputeNeighborhoodStats(MatrixView records,
                                           MatrixView samples, double epsilon,
                                           double delta) {
  Check(records, samples);
  NeighborhoodStats stats;
  stats.count_within.assign(records.rows, 0);
  stats.sum_log_dist.assign(records.rows, 0.0);
  for (std::size_t i = 0; i < records.rows; ++i) {
    for (std::size_t j = 0; j < samples.rows; ++j) {
      const double d = Distance(records.data + i * records.cols,
                                samples.data + j * samples.cols, records.cols);
      if (d <= epsilon) {
        ++stats.count_within[i];
        stats.sum_log_dist[i] += std::log(std::max(d, delta));
      }
    }
  }
  return stats;
}

std::vector<double> AllDistances(MatrixView records, MatrixView samples) {
  Check(records, samples);
  std::vector<double> out;
  out.reserve(records.rows * samples.rows);
  for (std::size_t i = 0; i < records.rows; ++i) {
    for (std::size_t j = 0; j < samples.rows; ++j) {
      out.push_back(Distance(records.data + i * records.cols,
                             samples.data + j * samples.cols, records.cols));
    }
  }
  return out;
}

double NearestRankDistance(MatrixView records, MatrixView samples,
                           std::uint64_t rank) {
  std::vector<double> all = AllDistances(records, samples);
  if (all.empty()) throw EmptyInputError("no record/sample pairs");
  if (rank < 1 || rank > all.size()) throw ConfigError("rank out of range");
  std::sort(all.begin(), all.end());
  return all[rank - 1];
}

}  // namespace miaudit::reference
