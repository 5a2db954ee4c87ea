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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "json.hpp"

#include "miaudit/error.h"
#include "miaudit/features.h"
#include "miaudit/io.h"

namespace miaudit {
namespace {

using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kRelativeRankTolerance = 1e-10;
constexpr double kRelativeTieTolerance = 1e-12;
constexpr char kSignConvention[] = "first-nonzero-positive";

std::size_t DominantColumn(const Eigen::VectorXd& v) {
  Eigen::Index idx = 0;
  v.cwiseAbs().maxCoeff(&idx);
  return static_cast<std::size_t>(idx);
}

void OrientFirstNonzeroPositive(std::span<double> v) {
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  for (double x : v) {
    if (std::abs(x) > scale * kRelativeRankTolerance) {
      if (x < 0) {
        for (double& y : v) y = -y;
      }
      return;
    }
  }
}

}  // namespace

PcaModel PcaFit(const Matrix& reference, std::size_t k, bool whiten) {
  const std::size_t n = reference.rows();
  const std::size_t d = reference.cols();
  if (k == 0) throw ConfigError("PCA needs at least one component");
  if (k > d) {
    throw RankError("requested " + std::to_string(k) + " components from " +
                    std::to_string(d) + "-dimensional data");
  }
  if (n < k || n < 2) {
    throw RankError("requested " + std::to_string(k) + " components from " +
                    std::to_string(n) + " reference rows");
  }
  if (!AllFinite(reference.values())) {
    throw DataError("PCA reference contains non-finite values");
  }

  Eigen::Map<const RowMajorMatrix> x(reference.data(),
                                     static_cast<Eigen::Index>(n),
                                     static_cast<Eigen::Index>(d));
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const RowMajorMatrix centered = x.rowwise() - mean;
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw RankError("covariance eigendecomposition did not converge");
  }
  const Eigen::VectorXd& values = solver.eigenvalues();
  const Eigen::MatrixXd& vectors = solver.eigenvectors();

  // Descending eigenvalue; within runs of numerically equal eigenvalues the
  // component whose dominant coordinate comes first wins.
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                   std::size_t b) {
    return values(static_cast<Eigen::Index>(a)) >
           values(static_cast<Eigen::Index>(b));
  });
  const double largest = std::max(values.maxCoeff(), 0.0);
  const double tie_tol = largest * kRelativeTieTolerance;
  for (std::size_t start = 0; start < d;) {
    std::size_t end = start + 1;
    while (end < d &&
           values(static_cast<Eigen::Index>(order[end - 1])) -
                   values(static_cast<Eigen::Index>(order[end])) <=
               tie_tol) {
      ++end;
    }
    std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) {
                       return DominantColumn(vectors.col(
                                  static_cast<Eigen::Index>(a))) <
                              DominantColumn(vectors.col(
                                  static_cast<Eigen::Index>(b)));
                     });
    start = end;
  }

  const double rank_tol = largest * kRelativeRankTolerance;
  std::size_t rank = 0;
  for (std::size_t i = 0; i < d; ++i) {
    if (values(static_cast<Eigen::Index>(i)) > rank_tol && largest > 0) ++rank;
  }
  if (rank < k) {
    throw RankError("centered reference data has rank " +
                    std::to_string(rank) + " < " + std::to_string(k) +
                    " requested components");
  }

  PcaModel model;
  model.whiten = whiten;
  model.mean.assign(mean.data(), mean.data() + d);
  model.components = Matrix(k, d);
  model.eigenvalues.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    const auto src = static_cast<Eigen::Index>(order[c]);
    model.eigenvalues[c] = values(src);
    auto row = model.components.row(c);
    for (std::size_t j = 0; j < d; ++j) {
      row[j] = vectors(static_cast<Eigen::Index>(j), src);
    }
    OrientFirstNonzeroPositive(row);
  }
  return model;
}

namespace {

// Accumulates components * (x - mean) over input coordinates in ascending
// order; the inner loop runs across components so it vectorizes without
// reassociating any single output's sum.
void ProjectRow(const PcaModel& model, const Matrix& components_t,
                std::span<const double> x, std::span<double> out) {
  const std::size_t k = model.k();
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double centered = x[j] - model.mean[j];
    const double* ct = components_t.data() + j * k;
    for (std::size_t c = 0; c < k; ++c) out[c] += ct[c] * centered;
  }
  if (model.whiten) {
    for (std::size_t c = 0; c < k; ++c) {
      out[c] /= std::sqrt(model.eigenvalues[c]);
    }
  }
}

Matrix Transposed(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  }
  return t;
}

}  // namespace

std::vector<double> PcaTransform(const PcaModel& model,
                                 std::span<const double> x) {
  if (x.size() != model.dim()) {
    throw DimError("PCA input has " + std::to_string(x.size()) +
                   " entries, model expects " + std::to_string(model.dim()));
  }
  std::vector<double> out(model.k());
  ProjectRow(model, Transposed(model.components), x, out);
  return out;
}

Matrix PcaTransformRows(const PcaModel& model, MatrixView rows) {
  if (rows.cols != model.dim()) {
    throw DimError("PCA input has " + std::to_string(rows.cols) +
                   " columns, model expects " + std::to_string(model.dim()));
  }
  const Matrix components_t = Transposed(model.components);
  Matrix out(rows.rows, model.k());
  const auto n = static_cast<std::int64_t>(rows.rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < n; ++r) {
    const auto i = static_cast<std::size_t>(r);
    ProjectRow(model, components_t, rows.row(i), out.row(i));
  }
  return out;
}

void SavePcaModel(const PcaModel& model, const std::filesystem::path& path) {
  const Matrix mean(1, model.dim(), model.mean);
  WriteMatrixBlocks({&mean, &model.components}, path, DType::kFloat64);
  nlohmann::ordered_json sidecar;
  sidecar["k"] = model.k();
  sidecar["dim"] = model.dim();
  sidecar["sign_convention"] = kSignConvention;
  sidecar["whiten"] = model.whiten;
  sidecar["eigenvalues"] = model.eigenvalues;
  std::ofstream out(path.string() + ".json", std::ios::trunc);
  if (!out) throw IoError("cannot write PCA sidecar for '" + path.string() + "'");
  out << sidecar.dump(2) << '\n';
}

PcaModel LoadPcaModel(const std::filesystem::path& path) {
  auto blocks = ReadMatrixBlocks(path);
  if (blocks.size() != 2 || blocks[0].rows() != 1 ||
      blocks[1].cols() != blocks[0].cols()) {
    throw FormatError("'" + path.string() +
                      "' is not a PCA model (expected mean and components)");
  }
  nlohmann::json sidecar;
  try {
    sidecar = nlohmann::json::parse(ReadFileToString(path.string() + ".json"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("PCA sidecar: " + std::string(e.what()));
  }
  PcaModel model;
  model.mean = blocks[0].values();
  model.components = std::move(blocks[1]);
  try {
    if (sidecar.at("k").get<std::size_t>() != model.k() ||
        sidecar.at("dim").get<std::size_t>() != model.dim()) {
      throw FormatError("PCA sidecar shape disagrees with model blocks");
    }
    if (sidecar.at("sign_convention").get<std::string>() != kSignConvention) {
      throw FormatError("unsupported PCA sign convention");
    }
    model.whiten = sidecar.at("whiten").get<bool>();
    model.eigenvalues = sidecar.at("eigenvalues").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("PCA sidecar: " + std::string(e.what()));
  }
  if (model.eigenvalues.size() != model.k()) {
    throw FormatError("PCA sidecar eigenvalue count disagrees with k");
  }
  return model;
}

}  // namespace miaudit
