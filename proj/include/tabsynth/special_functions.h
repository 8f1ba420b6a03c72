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

#ifndef TABSYNTH_SPECIAL_FUNCTIONS_H_
#define TABSYNTH_SPECIAL_FUNCTIONS_H_

#include <cmath>
#include <limits>
#include <numbers>

namespace tabsynth {

// Thread-safe log-gamma for x > 0 (std::lgamma writes the global signgam).
inline double LogGamma(double x) {
  int sign;
  return ::lgamma_r(x, &sign);
}

inline long double LogGamma(long double x) {
  int sign;
  return ::lgammal_r(x, &sign);
}

namespace internal {

// lgamma(a + 1) - (a log a - a + log(2 pi a) / 2), valid for a >= 10.
template <typename T>
T StirlingRemainder(T a) {
  const T inv = T(1) / a;
  const T inv2 = inv * inv;
  return inv *
         (T(1) / 12 -
          inv2 * (T(1) / 360 -
                  inv2 * (T(1) / 1260 -
                          inv2 * (T(1) / 1680 -
                                  inv2 * (T(1) / 1188 -
                                          inv2 * (T(691) / 360360 -
                                                  inv2 * (T(1) / 156)))))));
}

// log(x^a e^{-x} / Gamma(a + 1)). For large a the direct form cancels badly
// (both a log x and lgamma(a + 1) are O(a log a)), so it is rewritten around
// x = a.
template <typename T>
T LogGammaPrefix(T a, T x) {
  if (a >= T(10)) {
    const T t = (x - a) / a;
    return a * (std::log1p(t) - t) -
           T(0.5) * std::log(T(2) * std::numbers::pi_v<T> * a) -
           StirlingRemainder(a);
  }
  return a * std::log(x) - x - LogGamma(a + T(1));
}

template <typename T>
struct GammaTail {
  T lower;  // P(a, x)
  T upper;  // Q(a, x)
};

template <typename T>
int IncompleteGammaMaxIterations(T a) {
  return 10000 + static_cast<int>(50 * std::sqrt(static_cast<double>(a)));
}

// Power series for P(a, x); converges quickly for x < a + 1.
template <typename T>
T LowerGammaSeries(T a, T x, T log_prefix) {
  const T eps = std::numeric_limits<T>::epsilon();
  const int max_iter = IncompleteGammaMaxIterations(a);
  T sum = T(1);
  T term = T(1);
  for (int n = 1; n < max_iter; ++n) {
    term *= x / (a + T(n));
    sum += term;
    if (term < sum * eps) break;
  }
  return std::exp(log_prefix) * sum;
}

// Modified Lentz evaluation of the continued fraction for Q(a, x); used for
// x >= a + 1.
template <typename T>
T UpperGammaContinuedFraction(T a, T x, T log_prefix) {
  const T eps = std::numeric_limits<T>::epsilon();
  const T tiny = std::numeric_limits<T>::min() / eps;
  const int max_iter = IncompleteGammaMaxIterations(a);
  T b = x + T(1) - a;
  T c = T(1) / tiny;
  T d = T(1) / b;
  T h = d;
  for (int i = 1; i < max_iter; ++i) {
    const T an = -T(i) * (T(i) - a);
    b += T(2);
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = T(1) / d;
    const T delta = d * c;
    h *= delta;
    if (std::abs(delta - T(1)) < eps) break;
  }
  // x^a e^{-x} / Gamma(a) = a * x^a e^{-x} / Gamma(a + 1).
  return std::exp(log_prefix + std::log(a)) * h;
}

template <typename T>
GammaTail<T> IncompleteGamma(T a, T x) {
  constexpr T kNan = std::numeric_limits<T>::quiet_NaN();
  if (!(a > T(0)) || std::isnan(x) || x < T(0)) return {kNan, kNan};
  if (x == T(0)) return {T(0), T(1)};
  if (std::isinf(x)) return {T(1), T(0)};
  const T log_prefix = LogGammaPrefix(a, x);
  // Both the series sum and a * CF stay far below e^50 for any shape a
  // reachable with double parameters, so a prefix this small means the
  // result underflows.
  const T underflow = std::log(std::numeric_limits<T>::min()) - T(50);
  if (x < a + T(1)) {
    if (log_prefix < underflow) return {T(0), T(1)};
    const T p = LowerGammaSeries(a, x, log_prefix);
    return {p, T(1) - p};
  }
  if (log_prefix < underflow) return {T(1), T(0)};
  const T q = UpperGammaContinuedFraction(a, x, log_prefix);
  return {T(1) - q, q};
}

}  // namespace internal

// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).
template <typename T>
T RegularizedGammaP(T a, T x) {
  return internal::IncompleteGamma(a, x).lower;
}

// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed without
// cancellation in the upper tail.
template <typename T>
T RegularizedGammaQ(T a, T x) {
  return internal::IncompleteGamma(a, x).upper;
}

// Standard normal CDF.
template <typename T>
T NormalCdf(T x) {
  return T(0.5) * std::erfc(-x / std::numbers::sqrt2_v<T>);
}

template <typename T>
T InverseLogit(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

// log(1 - InverseLogit(x)) = -log(1 + e^x), finite for every finite x.
template <typename T>
T LogOneMinusInverseLogit(T x) {
  if (x > T(0)) return -(x + std::log1p(std::exp(-x)));
  return -std::log1p(std::exp(x));
}

}  // namespace tabsynth

#endif  // TABSYNTH_SPECIAL_FUNCTIONS_H_
