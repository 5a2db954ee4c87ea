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

#ifndef MIAUDIT_IO_H_
#define MIAUDIT_IO_H_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "miaudit/matrix.h"
#include "miaudit/types.h"

namespace miaudit {

// Binary matrix file:
//
//   offset  size  field
//   0       4     magic "MIAM"
//   4       4     u32 version (1)
//   8       8     u64 rows
//   16      8     u64 cols
//   24      1     u8 dtype (1 = f32, 2 = f64)
//   25      ...   row-major payload
//
// All integers and payload values are little-endian. Several blocks may be
// stored back to back in one file (the PCA model uses two).
enum class DType : std::uint8_t { kFloat32 = 1, kFloat64 = 2 };

inline constexpr std::uint32_t kMatrixFormatVersion = 1;
inline constexpr std::size_t kMatrixHeaderBytes = 25;

std::size_t DTypeBytes(DType dtype);
std::uint64_t MatrixFileBytes(std::uint64_t rows, std::uint64_t cols,
                              DType dtype);

struct MatrixHeader {
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  DType dtype = DType::kFloat64;
};

// Reads a matrix file. Paths ending in ".csv" are parsed as headerless CSV.
Matrix ReadMatrix(const std::filesystem::path& path);
// Writes a single block. Rejects empty matrices and non-finite values.
// Paths ending in ".csv" are written as CSV with round-trip precision.
void WriteMatrix(const Matrix& matrix, const std::filesystem::path& path,
                 DType dtype = DType::kFloat64);

std::vector<Matrix> ReadMatrixBlocks(const std::filesystem::path& path);
void WriteMatrixBlocks(const std::vector<const Matrix*>& blocks,
                       const std::filesystem::path& path,
                       DType dtype = DType::kFloat64);

Matrix ParseMatrixCsv(std::string_view text);

// Sequential reader over the first block of a binary matrix file; lets large
// sample files be processed in memory-bounded chunks.
class MatrixFileReader {
 public:
  explicit MatrixFileReader(const std::filesystem::path& path);

  const MatrixHeader& header() const { return header_; }
  std::uint64_t rows_remaining() const { return header_.rows - next_row_; }

  // Up to `max_rows` rows; an empty matrix once exhausted.
  Matrix ReadRows(std::uint64_t max_rows);
  void Rewind();

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  MatrixHeader header_;
  std::uint64_t next_row_ = 0;
};

// Score CSV: header "record_id,score" (optional on read), one row per record.
ScoreVector ReadScores(const std::filesystem::path& path);
ScoreVector ParseScores(std::string_view text);
void WriteScores(const ScoreVector& scores, const std::filesystem::path& path);

// Id/membership CSV: header "record_id,origin"; origin is train, test or
// unlabeled (a missing column means unlabeled).
using IdTable = std::vector<std::pair<std::string, Origin>>;
IdTable ReadIdTable(const std::filesystem::path& path);
void WriteIdTable(const IdTable& table, const std::filesystem::path& path);

std::string ReadFileToString(const std::filesystem::path& path);
// Lowercase hex SHA-256 of a file's bytes.
std::string FileSha256(const std::filesystem::path& path);

}  // namespace miaudit

#endif  // MIAUDIT_IO_H_
