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

#ifndef MIAUDIT_TYPES_H_
#define MIAUDIT_TYPES_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "miaudit/matrix.h"

namespace miaudit {

// What the auditor claims about a set of records.
enum class Origin { kClaimedTrain, kClaimedTest, kUnlabeled };

std::string_view OriginName(Origin origin);
// Accepts "train", "test", "unlabeled".
Origin ParseOrigin(std::string_view text);

// Candidate records under audit. Immutable after construction.
//
// Ids are opaque strings so audits can reference external case numbers.
// Construction enforces: unique ids, one id per row, finite values.
class RecordSet {
 public:
  RecordSet() = default;
  RecordSet(std::vector<std::string> ids, Matrix data,
            Origin origin = Origin::kUnlabeled);

  // Ids "<prefix>0", "<prefix>1", ... for anonymous rows.
  static RecordSet WithIndexIds(Matrix data, std::string_view prefix = "r",
                                Origin origin = Origin::kUnlabeled);
  // Rows of `a` followed by rows of `b`. The origin is kept when both agree.
  static RecordSet Concat(const RecordSet& a, const RecordSet& b);

  std::size_t size() const { return ids_.size(); }
  std::size_t cols() const { return data_.cols(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::string& id(std::size_t i) const { return ids_[i]; }
  const Matrix& data() const { return data_; }
  std::span<const double> row(std::size_t i) const { return data_.row(i); }
  Origin origin() const { return origin_; }

  std::optional<std::size_t> IndexOf(std::string_view id) const;
  RecordSet Subset(std::span<const std::size_t> indices) const;

 private:
  std::vector<std::string> ids_;
  Matrix data_;
  Origin origin_ = Origin::kUnlabeled;
  std::unordered_map<std::string, std::size_t> index_;
};

// Generator output: the Monte Carlo population.
struct SampleMatrix {
  Matrix data;
  std::string source_note;
};

// Throws DataError / EmptyMatrixError when `samples` violates its invariants.
void ValidateSamples(const SampleMatrix& samples);

// n reconstructions D(z_1..z_n) of one record.
class ReconstructionBatch {
 public:
  ReconstructionBatch(std::string record_id, Matrix reconstructions);

  const std::string& record_id() const { return record_id_; }
  const Matrix& reconstructions() const { return reconstructions_; }

 private:
  std::string record_id_;
  Matrix reconstructions_;
};

struct ScoreEntry {
  std::string record_id;
  double score = 0.0;
};

// Per-record attack scores f(x); higher means "more likely a member".
class ScoreVector {
 public:
  ScoreVector() = default;
  ScoreVector(std::vector<ScoreEntry> entries, std::string attack_name = "",
              std::string config_digest = "");

  const std::vector<ScoreEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const std::string& attack_name() const { return attack_name_; }
  const std::string& config_digest() const { return config_digest_; }

  std::optional<double> Find(std::string_view record_id) const;
  // Score of `record_id`; DataError when absent.
  double At(std::string_view record_id) const;

  // DataError unless the ids are exactly `ids` (as a set).
  void RequireCoverage(std::span<const std::string> ids) const;
  // Entries restricted to `ids`, in that order.
  ScoreVector Restrict(std::span<const std::string> ids) const;

 private:
  std::vector<ScoreEntry> entries_;
  std::string attack_name_;
  std::string config_digest_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Outcome of one single-MI plus set-MI trial.
struct TrialReport {
  std::uint64_t trial_seed = 0;
  double single_accuracy = 0.0;
  bool set_correct = false;
  std::vector<std::string> chosen_ids;
  std::optional<double> resolved_epsilon;
};

}  // namespace miaudit

#endif  // MIAUDIT_TYPES_H_
