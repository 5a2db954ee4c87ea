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

#include "miaudit/types.h"

#include <cmath>
#include <unordered_set>

#include "miaudit/error.h"

namespace miaudit {

std::string_view OriginName(Origin origin) {
  switch (origin) {
    case Origin::kClaimedTrain:
      return "train";
    case Origin::kClaimedTest:
      return "test";
    case Origin::kUnlabeled:
      return "unlabeled";
  }
  return "unlabeled";
}

Origin ParseOrigin(std::string_view text) {
  if (text == "train") return Origin::kClaimedTrain;
  if (text == "test") return Origin::kClaimedTest;
  if (text == "unlabeled" || text.empty()) return Origin::kUnlabeled;
  throw FormatError("unknown record origin '" + std::string(text) + "'");
}

RecordSet::RecordSet(std::vector<std::string> ids, Matrix data, Origin origin)
    : ids_(std::move(ids)), data_(std::move(data)), origin_(origin) {
  if (ids_.size() != data_.rows()) {
    throw DimError("record set has " + std::to_string(ids_.size()) +
                   " ids for " + std::to_string(data_.rows()) + " rows");
  }
  if (!AllFinite(data_.values())) {
    throw DataError("record set contains non-finite values");
  }
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) {
      throw DuplicateIdError("duplicate record id '" + ids_[i] + "'");
    }
  }
}

RecordSet RecordSet::WithIndexIds(Matrix data, std::string_view prefix,
                                  Origin origin) {
  std::vector<std::string> ids;
  ids.reserve(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    ids.push_back(std::string(prefix) + std::to_string(i));
  }
  return RecordSet(std::move(ids), std::move(data), origin);
}

RecordSet RecordSet::Concat(const RecordSet& a, const RecordSet& b) {
  std::vector<std::string> ids = a.ids_;
  ids.insert(ids.end(), b.ids_.begin(), b.ids_.end());
  const Origin origin = a.origin_ == b.origin_ ? a.origin_ : Origin::kUnlabeled;
  return RecordSet(std::move(ids), VStack(a.data_.view(), b.data_.view()),
                   origin);
}

std::optional<std::size_t> RecordSet::IndexOf(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

RecordSet RecordSet::Subset(std::span<const std::size_t> indices) const {
  std::vector<std::string> ids;
  ids.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= ids_.size()) throw DimError("record index out of range");
    ids.push_back(ids_[i]);
  }
  return RecordSet(std::move(ids), SelectRows(data_.view(), indices), origin_);
}

void ValidateSamples(const SampleMatrix& samples) {
  if (samples.data.empty()) throw EmptyMatrixError("sample matrix is empty");
  if (!AllFinite(samples.data.values())) {
    throw DataError("sample matrix contains non-finite values");
  }
}

ReconstructionBatch::ReconstructionBatch(std::string record_id,
                                         Matrix reconstructions)
    : record_id_(std::move(record_id)),
      reconstructions_(std::move(reconstructions)) {
  if (reconstructions_.rows() == 0) {
    throw EmptyInputError("reconstruction batch for '" + record_id_ +
                          "' has no rows");
  }
  if (!AllFinite(reconstructions_.values())) {
    throw DataError("reconstruction batch for '" + record_id_ +
                    "' contains non-finite values");
  }
}

ScoreVector::ScoreVector(std::vector<ScoreEntry> entries,
                         std::string attack_name, std::string config_digest)
    : entries_(std::move(entries)),
      attack_name_(std::move(attack_name)),
      config_digest_(std::move(config_digest)) {
  index_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const ScoreEntry& e = entries_[i];
    if (!std::isfinite(e.score)) {
      throw DataError("non-finite score for record '" + e.record_id + "'");
    }
    if (!index_.emplace(e.record_id, i).second) {
      throw DuplicateIdError("duplicate score for record '" + e.record_id +
                             "'");
    }
  }
}

std::optional<double> ScoreVector::Find(std::string_view record_id) const {
  auto it = index_.find(std::string(record_id));
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second].score;
}

double ScoreVector::At(std::string_view record_id) const {
  auto score = Find(record_id);
  if (!score) {
    throw DataError("no score for record '" + std::string(record_id) + "'");
  }
  return *score;
}

void ScoreVector::RequireCoverage(std::span<const std::string> ids) const {
  std::unordered_set<std::string> wanted(ids.begin(), ids.end());
  if (wanted.size() != ids.size()) {
    throw DuplicateIdError("audit id list contains duplicates");
  }
  for (const std::string& id : ids) {
    if (!index_.contains(id)) {
      throw DataError("scores do not cover record '" + id + "'");
    }
  }
  if (entries_.size() != wanted.size()) {
    for (const ScoreEntry& e : entries_) {
      if (!wanted.contains(e.record_id)) {
        throw DataError("scores include record '" + e.record_id +
                        "' outside the audit set");
      }
    }
  }
}

ScoreVector ScoreVector::Restrict(std::span<const std::string> ids) const {
  std::vector<ScoreEntry> out;
  out.reserve(ids.size());
  for (const std::string& id : ids) out.push_back({id, At(id)});
  return ScoreVector(std::move(out), attack_name_, config_digest_);
}

}  // namespace miaudit
