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

#ifndef TABSYNTH_RANDOM_H_
#define TABSYNTH_RANDOM_H_

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include "tabsynth/special_functions.h"

namespace tabsynth {

// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<uint32_t, 4> Philox4x32(std::array<uint32_t, 4> counter,
                                   std::array<uint32_t, 2> key);

// A counter-based stream of 64-bit words. The 128-bit counter is laid out as
// (block, stream_hi, stream_lo low word, stream_lo high word), so distinct
// (key, stream_hi, stream_lo) triples address disjoint blocks of one
// keyed bijection and never share output.
//
// Satisfies std::uniform_random_bit_generator.
class PhiloxStream {
 public:
  using result_type = uint64_t;

  PhiloxStream(uint64_t key, uint32_t stream_hi, uint64_t stream_lo);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  // Number of 128-bit blocks generated so far.
  uint32_t blocks() const { return counter_[0]; }

 private:
  std::array<uint32_t, 2> key_;
  std::array<uint32_t, 4> counter_;
  std::array<uint32_t, 4> buffer_{};
  int next_ = 4;
};

// Uniform on the open interval (0, 1) with 53 random bits.
template <typename Urbg>
double UniformOpen01(Urbg& gen) {
  return (static_cast<double>(gen() >> 11) + 0.5) * 0x1p-53;
}

// Uniform integer in [0, n), unbiased (Lemire's multiply-and-reject).
template <typename Urbg>
uint64_t UniformBelow(uint64_t n, Urbg& gen) {
  unsigned __int128 product = static_cast<unsigned __int128>(gen()) * n;
  auto low = static_cast<uint64_t>(product);
  if (low < n) {
    const uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      product = static_cast<unsigned __int128>(gen()) * n;
      low = static_cast<uint64_t>(product);
    }
  }
  return static_cast<uint64_t>(product >> 64);
}

// Box-Muller, one variate per call (no cached state between calls).
template <typename Urbg>
double StandardNormal(Urbg& gen) {
  const double u1 = UniformOpen01(gen);
  const double u2 = UniformOpen01(gen);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

// Natural log of a Gamma(shape, 1) variate. Marsaglia-Tsang squeeze/rejection
// for shape >= 1; for shape < 1 the boost G(shape) = G(shape + 1) U^{1/shape}
// is applied in log space, so tiny shapes do not underflow to log(0).
template <typename Urbg>
double LogStandardGamma(double shape, Urbg& gen) {
  if (shape < 1.0) {
    const double log_u = std::log(UniformOpen01(gen));
    return LogStandardGamma(shape + 1.0, gen) + log_u / shape;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x;
    double v;
    do {
      x = StandardNormal(gen);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = UniformOpen01(gen);
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return std::log(d * v);
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
      return std::log(d * v);
    }
  }
}

// Poisson variate as an integer-valued double. Sequential inversion below
// mean 10, Hormann's PTRS transformed rejection above.
template <typename Urbg>
double PoissonVariate(double mean, Urbg& gen) {
  if (!(mean > 0.0)) return 0.0;
  if (mean < 10.0) {
    double p = std::exp(-mean);
    double cdf = p;
    double k = 0.0;
    const double u = UniformOpen01(gen);
    while (u > cdf && p > 0.0) {
      k += 1.0;
      p *= mean / k;
      cdf += p;
    }
    return k;
  }
  const double log_mean = std::log(mean);
  const double b = 0.931 + 2.53 * std::sqrt(mean);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  while (true) {
    const double u = UniformOpen01(gen) - 0.5;
    const double v = UniformOpen01(gen);
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= v_r) return k;
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + k * log_mean - LogGamma(k + 1.0)) {
      return k;
    }
  }
}

}  // namespace tabsynth

#endif  // TABSYNTH_RANDOM_H_
