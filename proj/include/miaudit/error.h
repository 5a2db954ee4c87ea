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

#ifndef MIAUDIT_ERROR_H_
#define MIAUDIT_ERROR_H_

#include <stdexcept>
#include <string>

namespace miaudit {

// Base class of every error raised by the toolkit. `kind()` is the stable
// error name that the CLI prints and that tests match against.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define MIAUDIT_ERROR_TYPE(Name)                                   \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  }

// Matrix / score file problems.
MIAUDIT_ERROR_TYPE(FormatError);
MIAUDIT_ERROR_TYPE(TruncationError);
MIAUDIT_ERROR_TYPE(DataError);
MIAUDIT_ERROR_TYPE(IoError);
MIAUDIT_ERROR_TYPE(EmptyMatrixError);
MIAUDIT_ERROR_TYPE(DuplicateIdError);

// Shape and numerical preconditions.
MIAUDIT_ERROR_TYPE(DimError);
MIAUDIT_ERROR_TYPE(RankError);
MIAUDIT_ERROR_TYPE(EmptyInputError);
MIAUDIT_ERROR_TYPE(ConfigError);

// Attacks and scenarios.
MIAUDIT_ERROR_TYPE(IdMismatchError);
MIAUDIT_ERROR_TYPE(OracleError);
MIAUDIT_ERROR_TYPE(ImbalanceError);
MIAUDIT_ERROR_TYPE(InsufficientDataError);

#undef MIAUDIT_ERROR_TYPE

}  // namespace miaudit

#endif  // MIAUDIT_ERROR_H_
