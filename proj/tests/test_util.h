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

#ifndef MIAUDIT_TESTS_TEST_UTIL_H_
#define MIAUDIT_TESTS_TEST_UTIL_H_

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "miaudit/matrix.h"
#include "oracles.h"

namespace miaudit::testing {

// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path ScratchDir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  auto dir = std::filesystem::temp_directory_path() / "miaudit_tests" /
             (std::string(info->test_suite_name()) + "." + info->name());
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void WriteText(const std::filesystem::path& path,
                      const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline Matrix RandomMatrix(std::size_t rows, std::size_t cols,
                           std::mt19937_64& rng, double lo = -1.0,
                           double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (double& v : m.row(r)) v = u(rng);
  }
  return m;
}

inline oracle::Dense ToDense(const Matrix& m) {
  oracle::Dense out;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out.emplace_back(m.row(r).begin(), m.row(r).end());
  }
  return out;
}

}  // namespace miaudit::testing

#endif  // MIAUDIT_TESTS_TEST_UTIL_H_
