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

#include "miaudit/file_source.h"

#include <algorithm>

#include "miaudit/error.h"

namespace miaudit {

FileSampleSource::FileSampleSource(const std::filesystem::path& path,
                                   std::size_t chunk_rows)
    : chunk_rows_(std::max<std::size_t>(chunk_rows, 1)) {
  if (path.extension() == ".csv") {
    whole_ = ReadMatrix(path);
    rows_ = whole_.rows();
    cols_ = whole_.cols();
    whole_source_.emplace(whole_.view(), chunk_rows_);
    return;
  }
  reader_.emplace(path);
  rows_ = reader_->header().rows;
  cols_ = reader_->header().cols;
}

void FileSampleSource::Rewind() {
  if (reader_) {
    reader_->Rewind();
  } else {
    whole_source_->Rewind();
  }
}

std::optional<MatrixView> FileSampleSource::NextChunk() {
  if (!reader_) return whole_source_->NextChunk();
  if (reader_->rows_remaining() == 0) return std::nullopt;
  current_ = reader_->ReadRows(chunk_rows_);
  return current_.view();
}

}  // namespace miaudit
