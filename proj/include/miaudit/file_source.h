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

#ifndef MIAUDIT_FILE_SOURCE_H_
#define MIAUDIT_FILE_SOURCE_H_

#include <filesystem>
#include <optional>

#include "miaudit/distances.h"
#include "miaudit/io.h"

namespace miaudit {

// Samples read from a matrix file in chunks of at most `chunk_rows` rows.
// CSV files are loaded whole.
class FileSampleSource : public SampleSource {
 public:
  FileSampleSource(const std::filesystem::path& path, std::size_t chunk_rows);

  std::size_t rows() const override { return rows_; }
  std::size_t cols() const override { return cols_; }
  void Rewind() override;
  std::optional<MatrixView> NextChunk() override;

 private:
  std::size_t chunk_rows_;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::optional<MatrixFileReader> reader_;
  Matrix whole_;
  std::optional<MatrixSampleSource> whole_source_;
  Matrix current_;
};

}  // namespace miaudit

#endif  // MIAUDIT_FILE_SOURCE_H_
