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

#ifndef MIAUDIT_SRC_DISTANCE_TILES_H_
#define MIAUDIT_SRC_DISTANCE_TILES_H_

#include <omp.h>

#include <algorithm>
#include <cstdint>
#include <vector>

#include "miaudit/matrix.h"

namespace miaudit::internal {

inline constexpr std::size_t kTileRows = 512;

// Calls visit(thread, record, tile_begin, squared, count) for every record
// and every tile of `samples`, where squared[j] is the squared Euclidean
// distance between record and sample tile_begin + j.
//
// Work is split over records only. Each record sees its tiles in sample
// order, and every squared distance is summed over coordinates in ascending
// order, so results are bit-identical to a serial double loop for any thread
// count. Samples are transposed tile by tile so the innermost loop runs
// across samples and vectorizes without reassociating any sum.
template <typename Visitor>
void ForEachSquaredDistanceTile(MatrixView records, MatrixView samples,
                                int threads, Visitor&& visit) {
  const std::size_t dim = records.cols;
  if (records.rows == 0 || samples.rows == 0) return;
  std::vector<double> tile(dim * kTileRows);
  const auto record_count = static_cast<std::int64_t>(records.rows);

#pragma omp parallel num_threads(threads)
  {
    std::vector<double> acc(kTileRows);
    const int thread = omp_get_thread_num();
    for (std::size_t begin = 0; begin < samples.rows; begin += kTileRows) {
      const std::size_t count = std::min(kTileRows, samples.rows - begin);
#pragma omp single
      {
        for (std::size_t j = 0; j < count; ++j) {
          const double* s = samples.data + (begin + j) * dim;
          for (std::size_t k = 0; k < dim; ++k) tile[k * kTileRows + j] = s[k];
        }
      }
#pragma omp for schedule(static)
      for (std::int64_t r = 0; r < record_count; ++r) {
        const double* x = records.data + static_cast<std::size_t>(r) * dim;
        double* a = acc.data();
        std::fill(a, a + count, 0.0);
        for (std::size_t k = 0; k < dim; ++k) {
          const double xk = x[k];
          const double* t = tile.data() + k * kTileRows;
#pragma omp simd
          for (std::size_t j = 0; j < count; ++j) {
            const double d = t[j] - xk;
            a[j] += d * d;
          }
        }
        visit(thread, static_cast<std::size_t>(r), begin,
              static_cast<const double*>(a), count);
      }
    }
  }
}

}  // namespace miaudit::internal

#endif  // MIAUDIT_SRC_DISTANCE_TILES_H_
