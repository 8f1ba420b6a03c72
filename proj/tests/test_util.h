// Copyright 2026 The Tabsynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TABSYNTH_TESTS_TEST_UTIL_H_
#define TABSYNTH_TESTS_TEST_UTIL_H_

#include <cstdint>
#include <functional>
#include <map>

#include <boost/math/distributions/chi_squared.hpp>

namespace tabsynth::testing {

// Pearson goodness-of-fit p-value of `observed` (value -> count, n draws in
// total) against `pmf` on [lo, hi]. Adjacent bins are pooled until each
// expects at least 5 draws; mass outside [lo, hi] forms one extra bin.
inline double ChiSquarePValue(const std::map<int64_t, int64_t>& observed,
                              const std::function<double(int64_t)>& pmf,
                              int64_t n, int64_t lo, int64_t hi) {
  double stat = 0.0;
  int bins = 0;
  double exp_acc = 0.0, obs_acc = 0.0, covered = 0.0, inside = 0.0;
  for (int64_t y = lo; y <= hi; ++y) {
    const double p = pmf(y);
    covered += p;
    exp_acc += p * static_cast<double>(n);
    auto it = observed.find(y);
    const double o = it == observed.end() ? 0.0 : static_cast<double>(it->second);
    obs_acc += o;
    inside += o;
    if (exp_acc >= 5.0) {
      stat += (obs_acc - exp_acc) * (obs_acc - exp_acc) / exp_acc;
      ++bins;
      exp_acc = obs_acc = 0.0;
    }
  }
  const double rest_exp = exp_acc + (1.0 - covered) * static_cast<double>(n);
  const double rest_obs = obs_acc + (static_cast<double>(n) - inside);
  if (rest_exp > 1e-9) {
    stat += (rest_obs - rest_exp) * (rest_obs - rest_exp) / rest_exp;
    ++bins;
  } else if (rest_obs > 0.0) {
    return 0.0;
  }
  if (bins < 2) return 1.0;
  boost::math::chi_squared dist(bins - 1);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace tabsynth::testing

#endif  // TABSYNTH_TESTS_TEST_UTIL_H_
