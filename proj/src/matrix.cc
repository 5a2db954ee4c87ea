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

#include "miaudit/matrix.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "miaudit/error.h"

namespace miaudit {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw DimError("matrix payload has " + std::to_string(values_.size()) +
                   " values, expected " + std::to_string(rows * cols));
  }
}

Matrix Matrix::FromRows(
    std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m;
  for (const auto& r : rows) m.AppendRow(std::vector<double>(r));
  return m;
}

Matrix Matrix::FromRows(const std::vector<std::vector<double>>& rows) {
  Matrix m;
  for (const auto& r : rows) m.AppendRow(r);
  return m;
}

Matrix Matrix::Identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::AppendRow(std::span<const double> row) {
  if (rows_ == 0 && values_.empty()) {
    cols_ = row.size();
  } else if (row.size() != cols_) {
    throw DimError("row has " + std::to_string(row.size()) +
                   " columns, expected " + std::to_string(cols_));
  }
  values_.insert(values_.end(), row.begin(), row.end());
  ++rows_;
}

Matrix Copy(MatrixView view) {
  return Matrix(view.rows, view.cols,
                std::vector<double>(view.data,
                                    view.data + view.rows * view.cols));
}

Matrix SelectRows(MatrixView source, std::span<const std::size_t> indices) {
  std::vector<double> values;
  values.reserve(indices.size() * source.cols);
  for (std::size_t i : indices) {
    if (i >= source.rows) throw DimError("row index out of range");
    const auto r = source.row(i);
    values.insert(values.end(), r.begin(), r.end());
  }
  return Matrix(indices.size(), source.cols, std::move(values));
}

Matrix VStack(MatrixView top, MatrixView bottom) {
  if (top.rows > 0 && bottom.rows > 0 && top.cols != bottom.cols) {
    throw DimError("cannot stack matrices with " + std::to_string(top.cols) +
                   " and " + std::to_string(bottom.cols) + " columns");
  }
  const std::size_t cols = top.rows > 0 ? top.cols : bottom.cols;
  std::vector<double> values(top.data, top.data + top.rows * top.cols);
  values.insert(values.end(), bottom.data,
                bottom.data + bottom.rows * bottom.cols);
  return Matrix(top.rows + bottom.rows, cols, std::move(values));
}

bool AllFinite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimError("distance between mismatched sizes");
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    sum += d * d;
  }
  return sum;
}

double EuclideanDistance(std::span<const double> a,
                         std::span<const double> b) {
  return std::sqrt(SquaredDistance(a, b));
}

}  // namespace miaudit
