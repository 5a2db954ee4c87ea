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

#include "miaudit/stats.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/fisher_f.hpp>

#include "miaudit/error.h"

namespace miaudit {

double Mean(std::span<const double> values) {
  if (values.empty()) throw EmptyInputError("mean of no values");
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

double SampleStd(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = Mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double Median(std::span<const double> values) {
  if (values.empty()) throw EmptyInputError("median of no values");
  std::vector<double> v(values.begin(), values.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid),
                   v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower =
      *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lower + upper) / 2.0;
}

AnovaResult AnovaF(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw EmptyInputError("ANOVA needs >= 2 groups");
  std::size_t total = 0;
  double grand_sum = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw EmptyInputError("ANOVA groups need >= 2 values");
    total += g.size();
    grand_sum += std::accumulate(g.begin(), g.end(), 0.0);
  }
  const double grand_mean = grand_sum / static_cast<double>(total);
  double ss_between = 0.0;
  double ss_within = 0.0;
  for (const auto& g : groups) {
    const double m = Mean(g);
    ss_between += static_cast<double>(g.size()) * (m - grand_mean) *
                  (m - grand_mean);
    for (double v : g) ss_within += (v - m) * (v - m);
  }
  AnovaResult r;
  r.df_between = groups.size() - 1;
  r.df_within = total - groups.size();
  const double ms_between = ss_between / static_cast<double>(r.df_between);
  const double ms_within = ss_within / static_cast<double>(r.df_within);
  if (ms_within == 0.0) {
    r.f = ms_between > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    r.p_value = ms_between > 0.0 ? 0.0 : 1.0;
    return r;
  }
  r.f = ms_between / ms_within;
  const boost::math::fisher_f dist(static_cast<double>(r.df_between),
                                   static_cast<double>(r.df_within));
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.f));
  return r;
}

Interval BinomialAcceptanceInterval(std::uint64_t n, double p,
                                    double confidence) {
  // Tightest equal-tailed interval: each excluded tail has mass <= alpha/2.
  using namespace boost::math::policies;
  using Up = policy<discrete_quantile<integer_round_up>>;
  const double tail = (1.0 - confidence) / 2.0;
  const boost::math::binomial_distribution<double, Up> dist(
      static_cast<double>(n), p);
  const double lo = boost::math::quantile(dist, tail);
  const double hi = boost::math::quantile(boost::math::complement(dist, tail));
  return {lo / static_cast<double>(n), hi / static_cast<double>(n)};
}

double BinomialUpperTail(std::uint64_t successes, std::uint64_t n, double p) {
  if (successes == 0) return 1.0;
  if (successes > n) return 0.0;
  const boost::math::binomial dist(static_cast<double>(n), p);
  return boost::math::cdf(
      boost::math::complement(dist, static_cast<double>(successes - 1)));
}

}  // namespace miaudit
