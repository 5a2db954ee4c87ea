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

#ifndef MIAUDIT_STATS_H_
#define MIAUDIT_STATS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace miaudit {

double Mean(std::span<const double> values);
// n - 1 denominator; 0 for fewer than two values.
double SampleStd(std::span<const double> values);
// Mean of the two central values for even counts. EmptyInputError if empty.
double Median(std::span<const double> values);

struct AnovaResult {
  double f = 0.0;  // +inf when within-group variance is zero but means differ
  std::size_t df_between = 0;
  std::size_t df_within = 0;
  double p_value = 1.0;  // upper tail of F(df_between, df_within)
};

// One-way ANOVA. Needs at least two groups of at least two values each.
AnovaResult AnovaF(const std::vector<std::vector<double>>& groups);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool Contains(double x) const { return lo <= x && x <= hi; }
};

// Equal-tailed acceptance region, as a fraction of n, that holds at least
// `confidence` of the Binomial(n, p) mass.
Interval BinomialAcceptanceInterval(std::uint64_t n, double p,
                                    double confidence);

// P(X >= successes) for X ~ Binomial(n, p).
double BinomialUpperTail(std::uint64_t successes, std::uint64_t n, double p);

}  // namespace miaudit

#endif  // MIAUDIT_STATS_H_
