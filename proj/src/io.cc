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

#include "miaudit/io.h"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "miaudit/error.h"

namespace miaudit {

static_assert(std::endian::native == std::endian::little,
              "matrix files are little-endian; big-endian hosts need swaps");

namespace {

constexpr char kMagic[4] = {'M', 'I', 'A', 'M'};

bool HasCsvExtension(const std::filesystem::path& path) {
  return path.extension() == ".csv";
}

std::ifstream OpenForRead(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream OpenForWrite(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

template <typename T>
T ReadScalar(std::istream& in, const std::string& what) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(T))) {
    throw TruncationError("file ends inside the " + what + " field");
  }
  return value;
}

template <typename T>
void WriteScalar(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

// Returns nullopt on clean EOF before any header byte.
std::optional<MatrixHeader> ReadHeader(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() == 0) return std::nullopt;
  if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("bad magic bytes; not a MIAM matrix file");
  }
  const auto version = ReadScalar<std::uint32_t>(in, "version");
  if (version != kMatrixFormatVersion) {
    throw FormatError("unsupported matrix format version " +
                      std::to_string(version));
  }
  MatrixHeader header;
  header.rows = ReadScalar<std::uint64_t>(in, "rows");
  header.cols = ReadScalar<std::uint64_t>(in, "cols");
  const auto dtype = ReadScalar<std::uint8_t>(in, "dtype");
  if (dtype != 1 && dtype != 2) {
    throw FormatError("unknown dtype byte " + std::to_string(dtype));
  }
  header.dtype = static_cast<DType>(dtype);
  return header;
}

void ReadPayload(std::istream& in, DType dtype, std::uint64_t count,
                 double* out) {
  const std::size_t width = DTypeBytes(dtype);
  const std::uint64_t bytes = count * width;
  if (dtype == DType::kFloat64) {
    in.read(reinterpret_cast<char*>(out), static_cast<std::streamsize>(bytes));
    if (static_cast<std::uint64_t>(in.gcount()) != bytes) {
      throw TruncationError("matrix payload is truncated");
    }
  } else {
    std::vector<float> buffer(count);
    in.read(reinterpret_cast<char*>(buffer.data()),
            static_cast<std::streamsize>(bytes));
    if (static_cast<std::uint64_t>(in.gcount()) != bytes) {
      throw TruncationError("matrix payload is truncated");
    }
    for (std::uint64_t i = 0; i < count; ++i) out[i] = buffer[i];
  }
  if (!AllFinite({out, count})) {
    throw DataError("matrix payload contains non-finite values");
  }
}

Matrix ReadBlock(std::istream& in, const MatrixHeader& header) {
  if (header.rows == 0 || header.cols == 0) {
    throw EmptyMatrixError("matrix block is empty");
  }
  Matrix m(header.rows, header.cols);
  ReadPayload(in, header.dtype, header.rows * header.cols, m.data());
  return m;
}

void WriteBlock(std::ostream& out, const Matrix& matrix, DType dtype) {
  if (matrix.empty()) throw EmptyMatrixError("refusing to write empty matrix");
  if (!AllFinite(matrix.values())) {
    throw DataError("refusing to write non-finite values");
  }
  out.write(kMagic, 4);
  WriteScalar<std::uint32_t>(out, kMatrixFormatVersion);
  WriteScalar<std::uint64_t>(out, matrix.rows());
  WriteScalar<std::uint64_t>(out, matrix.cols());
  WriteScalar<std::uint8_t>(out, static_cast<std::uint8_t>(dtype));
  if (dtype == DType::kFloat64) {
    out.write(reinterpret_cast<const char*>(matrix.data()),
              static_cast<std::streamsize>(matrix.values().size() *
                                           sizeof(double)));
  } else {
    std::vector<float> buffer(matrix.values().begin(), matrix.values().end());
    out.write(reinterpret_cast<const char*>(buffer.data()),
              static_cast<std::streamsize>(buffer.size() * sizeof(float)));
  }
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> SplitLines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = Trim(text.substr(start, end - start));
    if (!line.empty()) lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t end = line.find(',', start);
    if (end == std::string_view::npos) {
      fields.push_back(Trim(line.substr(start)));
      return fields;
    }
    fields.push_back(Trim(line.substr(start, end - start)));
    start = end + 1;
  }
}

// Parses a real; "inf"/"nan" parse successfully so callers can reject them
// as DataError rather than FormatError.
double ParseReal(std::string_view field, std::size_t line_no) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(),
                                   value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw FormatError("line " + std::to_string(line_no) + ": cannot parse '" +
                      std::string(field) + "' as a number");
  }
  return value;
}

std::string FormatReal(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::size_t DTypeBytes(DType dtype) {
  return dtype == DType::kFloat32 ? 4 : 8;
}

std::uint64_t MatrixFileBytes(std::uint64_t rows, std::uint64_t cols,
                              DType dtype) {
  return kMatrixHeaderBytes + rows * cols * DTypeBytes(dtype);
}

std::string ReadFileToString(const std::filesystem::path& path) {
  std::ifstream in = OpenForRead(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Matrix ParseMatrixCsv(std::string_view text) {
  Matrix m;
  std::size_t line_no = 0;
  for (std::string_view line : SplitLines(text)) {
    ++line_no;
    std::vector<double> row;
    for (std::string_view field : SplitFields(line)) {
      row.push_back(ParseReal(field, line_no));
    }
    if (m.rows() > 0 && row.size() != m.cols()) {
      throw FormatError("line " + std::to_string(line_no) + " has " +
                        std::to_string(row.size()) + " fields, expected " +
                        std::to_string(m.cols()));
    }
    m.AppendRow(row);
  }
  if (m.empty()) throw EmptyMatrixError("CSV matrix is empty");
  if (!AllFinite(m.values())) {
    throw DataError("CSV matrix contains non-finite values");
  }
  return m;
}

Matrix ReadMatrix(const std::filesystem::path& path) {
  if (HasCsvExtension(path)) return ParseMatrixCsv(ReadFileToString(path));
  std::ifstream in = OpenForRead(path);
  auto header = ReadHeader(in);
  if (!header) throw TruncationError("'" + path.string() + "' is empty");
  return ReadBlock(in, *header);
}

std::vector<Matrix> ReadMatrixBlocks(const std::filesystem::path& path) {
  std::ifstream in = OpenForRead(path);
  std::vector<Matrix> blocks;
  while (auto header = ReadHeader(in)) blocks.push_back(ReadBlock(in, *header));
  if (blocks.empty()) throw TruncationError("'" + path.string() + "' is empty");
  return blocks;
}

void WriteMatrix(const Matrix& matrix, const std::filesystem::path& path,
                 DType dtype) {
  if (HasCsvExtension(path)) {
    if (matrix.empty()) {
      throw EmptyMatrixError("refusing to write empty matrix");
    }
    if (!AllFinite(matrix.values())) {
      throw DataError("refusing to write non-finite values");
    }
    std::ofstream out = OpenForWrite(path);
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
      for (std::size_t c = 0; c < matrix.cols(); ++c) {
        if (c > 0) out << ',';
        out << FormatReal(matrix(r, c));
      }
      out << '\n';
    }
    if (!out) throw IoError("failed writing '" + path.string() + "'");
    return;
  }
  WriteMatrixBlocks({&matrix}, path, dtype);
}

void WriteMatrixBlocks(const std::vector<const Matrix*>& blocks,
                       const std::filesystem::path& path, DType dtype) {
  for (const Matrix* m : blocks) {
    if (m->empty()) throw EmptyMatrixError("refusing to write empty matrix");
  }
  std::ofstream out = OpenForWrite(path);
  for (const Matrix* m : blocks) WriteBlock(out, *m, dtype);
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

MatrixFileReader::MatrixFileReader(const std::filesystem::path& path)
    : path_(path), in_(OpenForRead(path)) {
  auto header = ReadHeader(in_);
  if (!header) throw TruncationError("'" + path.string() + "' is empty");
  if (header->rows == 0 || header->cols == 0) {
    throw EmptyMatrixError("matrix block is empty");
  }
  header_ = *header;
}

Matrix MatrixFileReader::ReadRows(std::uint64_t max_rows) {
  const std::uint64_t count = std::min(max_rows, rows_remaining());
  if (count == 0) return Matrix();
  Matrix m(count, header_.cols);
  ReadPayload(in_, header_.dtype, count * header_.cols, m.data());
  next_row_ += count;
  return m;
}

void MatrixFileReader::Rewind() {
  in_.clear();
  in_.seekg(static_cast<std::streamoff>(kMatrixHeaderBytes));
  if (!in_) throw IoError("cannot rewind '" + path_.string() + "'");
  next_row_ = 0;
}

ScoreVector ParseScores(std::string_view text) {
  std::vector<ScoreEntry> entries;
  std::size_t line_no = 0;
  for (std::string_view line : SplitLines(text)) {
    ++line_no;
    auto fields = SplitFields(line);
    if (line_no == 1 && fields.size() == 2 && fields[0] == "record_id" &&
        fields[1] == "score") {
      continue;
    }
    if (fields.size() != 2 || fields[0].empty()) {
      throw FormatError("score line " + std::to_string(line_no) +
                        " must be 'record_id,score'");
    }
    const double score = ParseReal(fields[1], line_no);
    if (!std::isfinite(score)) {
      throw DataError("non-finite score on line " + std::to_string(line_no));
    }
    entries.push_back({std::string(fields[0]), score});
  }
  return ScoreVector(std::move(entries));
}

ScoreVector ReadScores(const std::filesystem::path& path) {
  return ParseScores(ReadFileToString(path));
}

void WriteScores(const ScoreVector& scores, const std::filesystem::path& path) {
  std::ofstream out = OpenForWrite(path);
  out << "record_id,score\n";
  for (const ScoreEntry& e : scores.entries()) {
    out << e.record_id << ',' << FormatReal(e.score) << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

IdTable ReadIdTable(const std::filesystem::path& path) {
  IdTable table;
  std::size_t line_no = 0;
  const std::string text = ReadFileToString(path);
  for (std::string_view line : SplitLines(text)) {
    ++line_no;
    auto fields = SplitFields(line);
    if (line_no == 1 && fields[0] == "record_id") continue;
    if (fields.empty() || fields.size() > 2 || fields[0].empty()) {
      throw FormatError("id line " + std::to_string(line_no) +
                        " must be 'record_id[,origin]'");
    }
    table.emplace_back(std::string(fields[0]),
                       fields.size() == 2 ? ParseOrigin(fields[1])
                                          : Origin::kUnlabeled);
  }
  return table;
}

void WriteIdTable(const IdTable& table, const std::filesystem::path& path) {
  std::ofstream out = OpenForWrite(path);
  out << "record_id,origin\n";
  for (const auto& [id, origin] : table) {
    out << id << ',' << OriginName(origin) << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string FileSha256(const std::filesystem::path& path) {
  std::ifstream in = OpenForRead(path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buffer;
  while (in) {
    in.read(buffer.data(), buffer.size());
    if (in.gcount() > 0) {
      EVP_DigestUpdate(ctx, buffer.data(), static_cast<size_t>(in.gcount()));
    }
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx, digest, &length);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(byte, sizeof(byte), "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

}  // namespace miaudit
