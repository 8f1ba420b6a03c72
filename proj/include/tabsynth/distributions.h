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

#ifndef TABSYNTH_DISTRIBUTIONS_H_
#define TABSYNTH_DISTRIBUTIONS_H_

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "tabsynth/random.h"

namespace tabsynth {

// Largest count a synthetic draw may take; larger draws are clamped.
inline constexpr int64_t kMaxCount = std::numeric_limits<int64_t>::max();

// Default truncation mass for discretized pmfs.
inline constexpr double kDefaultTailEps = 1e-12;

// Parameters of the gamma family (GAF) on (0, inf): mean mu, variance
// sigma^2 mu^nu. Equivalent to a gamma with shape sigma1^-2 and scale
// sigma1^2 mu, where sigma1 = sigma mu^(nu/2 - 1).
class GafParams {
 public:
  static absl::StatusOr<GafParams> Create(double mu, double sigma, double nu);

  double mu() const { return mu_; }
  double sigma() const { return sigma_; }
  double nu() const { return nu_; }
  double sigma1() const { return std::exp(log_sigma1_); }
  double shape() const { return std::exp(-2.0 * log_sigma1_); }
  double scale() const { return std::exp(2.0 * log_sigma1_) * mu_; }
  // log(scale), exact even when scale itself would overflow.
  double log_scale() const { return 2.0 * log_sigma1_ + std::log(mu_); }

  double mean() const { return mu_; }
  double variance() const { return sigma_ * sigma_ * std::pow(mu_, nu_); }

 private:
  GafParams(double mu, double sigma, double nu);

  double mu_;
  double sigma_;
  double nu_;
  double log_sigma1_;
};

// Negative binomial (type I) with mean mu and variance mu + sigma mu^2.
class NbiParams {
 public:
  static absl::StatusOr<NbiParams> Create(double mu, double sigma);

  double mu() const { return mu_; }
  double sigma() const { return sigma_; }
  double mean() const { return mu_; }
  double variance() const { return mu_ + sigma_ * mu_ * mu_; }

 private:
  NbiParams(double mu, double sigma) : mu_(mu), sigma_(sigma) {}

  double mu_;
  double sigma_;
};

// A probability mass function on {offset, offset + 1, ...}, truncated on both
// sides. lower_tail / upper_tail are the omitted masses.
class Pmf {
 public:
  Pmf(int64_t offset, std::vector<double> probabilities, double lower_tail,
      double upper_tail);

  int64_t offset() const { return offset_; }
  int64_t last() const {
    return offset_ + static_cast<int64_t>(probabilities_.size()) - 1;
  }
  const std::vector<double>& probabilities() const { return probabilities_; }
  double lower_tail() const { return lower_tail_; }
  double upper_tail() const { return upper_tail_; }

  // Zero outside the retained support.
  double at(int64_t y) const;
  double total_mass() const;
  double mean() const;
  double variance() const;

 private:
  int64_t offset_;
  std::vector<double> probabilities_;
  double lower_tail_;
  double upper_tail_;
};

// A continuous distribution on (0, inf), as needed by Discretize.
struct ContinuousDistribution {
  std::function<double(double)> cdf;
  // Optional; 1 - cdf is used when empty. Supplying it keeps the upper-tail
  // pmf accurate where cdf rounds to 1.
  std::function<double(double)> survival;
  double mean = 0.0;
  double variance = 0.0;
};

struct DiscretizeOptions {
  double tail_eps = kDefaultTailEps;
};

// Half-integer discretization: pmf(0) = F(1/2), pmf(y) = F(y + 1/2) -
// F(y - 1/2). Support is truncated once the omitted mass on each side drops
// below tail_eps / 2; Chebyshev's bound on the continuous distribution caps
// the search.
absl::StatusOr<Pmf> Discretize(const ContinuousDistribution& dist,
                               const DiscretizeOptions& options = {});

// GAF density and CDF.
double GafPdf(double w, const GafParams& params);
double GafCdf(double w, const GafParams& params);
double GafSurvival(double w, const GafParams& params);
ContinuousDistribution GafContinuous(const GafParams& params);

// Discretized GAF.
absl::StatusOr<Pmf> GafPmf(const GafParams& params,
                           const DiscretizeOptions& options = {});
// One point of the discretized GAF pmf, without building the whole Pmf.
double GafPmfAt(int64_t y, const GafParams& params);

double NbiPmf(int64_t x, const NbiParams& params);
double PoissonPmf(int64_t x, double mu);

enum class Dispersion { kOver, kEqui, kUnder };

std::string_view DispersionName(Dispersion d);

// Classifies by comparing the variance sigma^2 mu^nu with the mean mu.
Dispersion Classify(const GafParams& params);

// The nu below which (mu > 1) or above which (mu < 1) the GAF is
// underdispersed: 1 - 2 log(sigma) / log(mu). Undefined at mu = 1.
absl::StatusOr<double> UnderdispersionThreshold(double mu, double sigma);

// Draws round-half-up(W) with W ~ GAF(params). Draws at or above 2^63 are
// clamped to kMaxCount and reported through `clamped`.
template <typename Urbg>
int64_t GafSample(const GafParams& params, Urbg& gen, bool* clamped = nullptr);

// Gamma(1/sigma, sigma mu) mixture of Poissons.
template <typename Urbg>
int64_t NbiSample(const NbiParams& params, Urbg& gen, bool* clamped = nullptr);

template <typename Urbg>
int64_t PoissonSample(double mu, Urbg& gen, bool* clamped = nullptr);

// ---------------------------------------------------------------------------

namespace internal {

inline int64_t ClampToCount(double value, bool* clamped) {
  // 2^63 is the first double that does not fit in int64_t.
  if (value >= 0x1p63) {
    if (clamped != nullptr) *clamped = true;
    return kMaxCount;
  }
  return static_cast<int64_t>(value);
}

}  // namespace internal

template <typename Urbg>
int64_t GafSample(const GafParams& params, Urbg& gen, bool* clamped) {
  const double log_w = LogStandardGamma(params.shape(), gen) +
                       params.log_scale();
  // log(0.5): everything below rounds to zero, including exp underflow.
  if (log_w < -0.6931471805599453) return 0;
  if (log_w >= 43.67) {  // > log(2^63)
    if (clamped != nullptr) *clamped = true;
    return kMaxCount;
  }
  return internal::ClampToCount(std::floor(std::exp(log_w) + 0.5), clamped);
}

template <typename Urbg>
int64_t NbiSample(const NbiParams& params, Urbg& gen, bool* clamped) {
  const double shape = 1.0 / params.sigma();
  const double log_rate = LogStandardGamma(shape, gen) +
                          std::log(params.sigma() * params.mu());
  if (log_rate >= 43.67) {
    if (clamped != nullptr) *clamped = true;
    return kMaxCount;
  }
  return internal::ClampToCount(PoissonVariate(std::exp(log_rate), gen),
                                clamped);
}

template <typename Urbg>
int64_t PoissonSample(double mu, Urbg& gen, bool* clamped) {
  if (mu >= 0x1p63) {
    if (clamped != nullptr) *clamped = true;
    return kMaxCount;
  }
  return internal::ClampToCount(PoissonVariate(mu, gen), clamped);
}

}  // namespace tabsynth

#endif  // TABSYNTH_DISTRIBUTIONS_H_
