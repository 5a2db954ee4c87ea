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

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <random>

#include "gtest/gtest.h"
#include "miaudit/error.h"
#include "miaudit/io.h"
#include "miaudit/types.h"
#include "test_util.h"

namespace miaudit {
namespace {

using testing::ScratchDir;
using testing::WriteText;

TEST(MatrixTest, RejectsSizeMismatch) {
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), DimError);
}

TEST(MatrixTest, RowsAndStacking) {
  const Matrix a = Matrix::FromRows({{1, 2}, {3, 4}});
  const Matrix b = Matrix::FromRows({{5, 6}});
  const Matrix s = VStack(a.view(), b.view());
  ASSERT_EQ(s.rows(), 3u);
  EXPECT_EQ(s(2, 1), 6.0);
  const std::vector<std::size_t> pick = {2, 0};
  const Matrix sel = SelectRows(s.view(), pick);
  EXPECT_EQ(sel, Matrix::FromRows({{5, 6}, {1, 2}}));
  EXPECT_DOUBLE_EQ(EuclideanDistance(a.row(0), a.row(1)), std::sqrt(8.0));
}

TEST(MatrixIoTest, RoundTripIsExact) {
  const auto dir = ScratchDir();
  std::mt19937_64 rng(7);
  const Matrix m = testing::RandomMatrix(2, 3, rng);
  WriteMatrix(m, dir / "m.miam");
  EXPECT_EQ(ReadMatrix(dir / "m.miam"), m);
  WriteMatrix(Matrix::Identity(2), dir / "i.miam");
  EXPECT_EQ(ReadMatrix(dir / "i.miam"), Matrix::Identity(2));
}

TEST(MatrixIoTest, Float32PayloadRoundTrips) {
  const auto dir = ScratchDir();
  const Matrix m = Matrix::FromRows({{0.5, -1.25}, {3.0e10f, 1.0f / 3.0f}});
  WriteMatrix(m, dir / "m.miam", DType::kFloat32);
  const Matrix back = ReadMatrix(dir / "m.miam");
  EXPECT_EQ(back, m);  // values were chosen representable in f32
  WriteMatrix(back, dir / "m2.miam", DType::kFloat32);
  EXPECT_EQ(ReadMatrix(dir / "m2.miam"), back);
}

TEST(MatrixIoTest, FileSizeFollowsHeaderAndDtype) {
  const auto dir = ScratchDir();
  const Matrix zeros(1, 1000000);
  WriteMatrix(zeros, dir / "z.miam", DType::kFloat32);
  EXPECT_EQ(std::filesystem::file_size(dir / "z.miam"), 25u + 4000000u);
  EXPECT_EQ(MatrixFileBytes(1000000, 40, DType::kFloat32),
            25u + 160000000u);
}

TEST(MatrixIoTest, RejectsBadMagic) {
  const auto dir = ScratchDir();
  WriteMatrix(Matrix::Identity(2), dir / "m.miam");
  std::string bytes = ReadFileToString(dir / "m.miam");
  bytes.replace(0, 4, "XXXX");
  WriteText(dir / "bad.miam", bytes);
  EXPECT_THROW(ReadMatrix(dir / "bad.miam"), FormatError);
}

TEST(MatrixIoTest, RejectsTruncatedPayload) {
  const auto dir = ScratchDir();
  WriteMatrix(Matrix::Identity(3), dir / "m.miam");
  std::string bytes = ReadFileToString(dir / "m.miam");
  bytes.resize(bytes.size() - 5);
  WriteText(dir / "short.miam", bytes);
  EXPECT_THROW(ReadMatrix(dir / "short.miam"), TruncationError);
}

TEST(MatrixIoTest, RejectsNonFiniteValues) {
  const auto dir = ScratchDir();
  WriteMatrix(Matrix::Identity(2), dir / "m.miam");
  std::string bytes = ReadFileToString(dir / "m.miam");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::memcpy(bytes.data() + kMatrixHeaderBytes, &nan, sizeof(nan));
  WriteText(dir / "nan.miam", bytes);
  EXPECT_THROW(ReadMatrix(dir / "nan.miam"), DataError);
  WriteText(dir / "nan.csv", "1,nan\n");
  EXPECT_THROW(ReadMatrix(dir / "nan.csv"), DataError);
}

TEST(MatrixIoTest, EmptyMatrixIsRejected) {
  const auto dir = ScratchDir();
  EXPECT_THROW(WriteMatrix(Matrix(), dir / "e.miam"), EmptyMatrixError);
}

TEST(MatrixIoTest, WriteToMissingDirectoryFails) {
  EXPECT_THROW(WriteMatrix(Matrix::Identity(2), "/nonexistent/dir/m.miam"),
               IoError);
}

TEST(MatrixIoTest, ParsesCsv) {
  EXPECT_EQ(ParseMatrixCsv("1.0,2.0\n3.0,4.0"),
            Matrix::FromRows({{1, 2}, {3, 4}}));
  EXPECT_THROW(ParseMatrixCsv("1,2\n3"), FormatError);
}

TEST(MatrixIoTest, ChunkedReaderCoversFile) {
  const auto dir = ScratchDir();
  std::mt19937_64 rng(3);
  const Matrix m = testing::RandomMatrix(10, 4, rng);
  WriteMatrix(m, dir / "m.miam");
  MatrixFileReader reader(dir / "m.miam");
  for (int pass = 0; pass < 2; ++pass) {
    Matrix collected;
    while (reader.rows_remaining() > 0) {
      const Matrix part = reader.ReadRows(3);
      for (std::size_t r = 0; r < part.rows(); ++r) {
        collected.AppendRow(part.row(r));
      }
    }
    EXPECT_EQ(collected, m);
    reader.Rewind();
  }
}

TEST(ScoresIoTest, ParsesScores) {
  const ScoreVector s = ParseScores("record_id,score\na,0.9\nb,0.1\n");
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(s.At("a"), 0.9);
  EXPECT_EQ(s.At("b"), 0.1);
  EXPECT_EQ(ParseScores("a,0.9\nb,0.1").At("b"), 0.1);
}

TEST(ScoresIoTest, RejectsDuplicatesAndNonFinite) {
  EXPECT_THROW(ParseScores("record_id,score\na,1\na,2\n"), DuplicateIdError);
  EXPECT_THROW(ParseScores("record_id,score\na,inf\n"), DataError);
  EXPECT_THROW(ParseScores("record_id,score\na,nan\n"), DataError);
}

TEST(ScoresIoTest, WriteReadRoundTrip) {
  const auto dir = ScratchDir();
  const ScoreVector s({{"x", 0.1 + 0.2}, {"y", -1e-300}, {"z", 12345.678}});
  WriteScores(s, dir / "s.csv");
  const ScoreVector back = ReadScores(dir / "s.csv");
  ASSERT_EQ(back.size(), 3u);
  for (const auto& e : s.entries()) EXPECT_EQ(back.At(e.record_id), e.score);
}

TEST(IdTableTest, RoundTrip) {
  const auto dir = ScratchDir();
  const IdTable t = {{"a", Origin::kClaimedTrain},
                     {"b", Origin::kClaimedTest},
                     {"c", Origin::kUnlabeled}};
  WriteIdTable(t, dir / "ids.csv");
  EXPECT_EQ(ReadIdTable(dir / "ids.csv"), t);
}

TEST(RecordSetTest, EnforcesInvariants) {
  EXPECT_THROW(RecordSet({"a", "a"}, Matrix(2, 1)), DuplicateIdError);
  EXPECT_THROW(RecordSet({"a"}, Matrix(2, 1)), DimError);
  Matrix bad(1, 2);
  bad(0, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(RecordSet({"a"}, bad), DataError);
}

TEST(RecordSetTest, ConcatAndSubset) {
  const RecordSet a({"a", "b"}, Matrix::FromRows({{1}, {2}}),
                    Origin::kClaimedTrain);
  const RecordSet b({"c"}, Matrix::FromRows({{3}}), Origin::kClaimedTest);
  const RecordSet both = RecordSet::Concat(a, b);
  EXPECT_EQ(both.size(), 3u);
  EXPECT_EQ(both.origin(), Origin::kUnlabeled);
  EXPECT_EQ(*both.IndexOf("c"), 2u);
  const std::vector<std::size_t> idx = {2, 0};
  const RecordSet sub = both.Subset(idx);
  EXPECT_EQ(sub.ids(), (std::vector<std::string>{"c", "a"}));
  EXPECT_EQ(sub.row(0)[0], 3.0);
  EXPECT_THROW(RecordSet::Concat(a, a), DuplicateIdError);
}

TEST(ScoreVectorTest, CoverageAndRestrict) {
  const ScoreVector s({{"a", 1}, {"b", 2}, {"c", 3}});
  const std::vector<std::string> all = {"c", "b", "a"};
  EXPECT_NO_THROW(s.RequireCoverage(all));
  const std::vector<std::string> fewer = {"a", "b"};
  EXPECT_THROW(s.RequireCoverage(fewer), DataError);
  const std::vector<std::string> other = {"a", "b", "d"};
  EXPECT_THROW(s.RequireCoverage(other), DataError);
  const ScoreVector r = s.Restrict(fewer);
  EXPECT_EQ(r.size(), 2u);
  EXPECT_EQ(r.entries()[1].record_id, "b");
  EXPECT_THROW(ScoreVector({{"a", NAN}}), DataError);
}

TEST(ReconstructionBatchTest, NeedsRows) {
  EXPECT_THROW(ReconstructionBatch("a", Matrix()), EmptyInputError);
  EXPECT_NO_THROW(ReconstructionBatch("a", Matrix(1, 2)));
}

}  // namespace
}  // namespace miaudit
