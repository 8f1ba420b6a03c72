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

#include "tabsynth/distributions.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "tabsynth/special_functions.h"

namespace tabsynth {
namespace {

// exp() of anything below this is subnormal or zero; treated as zero.
constexpr double kLogUnderflow = -745.0;

double SafeExp(double log_value) {
  return log_value < kLogUnderflow ? 0.0 : std::exp(log_value);
}

// w / scale evaluated in log space (scale may overflow a double).
double ScaledArgument(double w, const GafParams& params) {
  return std::exp(std::log(w) - params.log_scale());
}

}  // namespace

GafParams::GafParams(double mu, double sigma, double nu)
    : mu_(mu),
      sigma_(sigma),
      nu_(nu),
      log_sigma1_(std::log(sigma) + (nu / 2.0 - 1.0) * std::log(mu)) {}

absl::StatusOr<GafParams> GafParams::Create(double mu, double sigma,
                                            double nu) {
  if (!std::isfinite(mu) || !(mu > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("GAF mu must be finite and positive, got ", mu));
  }
  if (!std::isfinite(sigma) || !(sigma > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("GAF sigma must be finite and positive, got ", sigma));
  }
  if (!std::isfinite(nu)) {
    return absl::InvalidArgumentError(
        absl::StrCat("GAF nu must be finite, got ", nu));
  }
  GafParams params(mu, sigma, nu);
  const double shape = params.shape();
  if (!std::isfinite(params.log_scale()) || !std::isnormal(shape) ||
      !std::isfinite(shape)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "GAF(mu=", mu, ", sigma=", sigma, ", nu=", nu,
        ") has a gamma shape outside the representable range"));
  }
  return params;
}

absl::StatusOr<NbiParams> NbiParams::Create(double mu, double sigma) {
  if (!std::isfinite(mu) || !(mu > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("NBI mu must be finite and positive, got ", mu));
  }
  if (!std::isfinite(sigma) || !(sigma > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("NBI sigma must be finite and positive, got ", sigma));
  }
  return NbiParams(mu, sigma);
}

Pmf::Pmf(int64_t offset, std::vector<double> probabilities, double lower_tail,
         double upper_tail)
    : offset_(offset),
      probabilities_(std::move(probabilities)),
      lower_tail_(lower_tail),
      upper_tail_(upper_tail) {}

double Pmf::at(int64_t y) const {
  if (y < offset_ || y > last()) return 0.0;
  return probabilities_[static_cast<size_t>(y - offset_)];
}

double Pmf::total_mass() const {
  long double sum = 0.0L;
  for (double p : probabilities_) sum += p;
  return static_cast<double>(sum);
}

double Pmf::mean() const {
  long double sum = 0.0L;
  long double mass = 0.0L;
  for (size_t i = 0; i < probabilities_.size(); ++i) {
    sum += static_cast<long double>(probabilities_[i]) *
           static_cast<long double>(offset_ + static_cast<int64_t>(i));
    mass += probabilities_[i];
  }
  return static_cast<double>(sum / mass);
}

double Pmf::variance() const {
  const long double m = mean();
  long double sum = 0.0L;
  long double mass = 0.0L;
  for (size_t i = 0; i < probabilities_.size(); ++i) {
    const long double d =
        static_cast<long double>(offset_ + static_cast<int64_t>(i)) - m;
    sum += static_cast<long double>(probabilities_[i]) * d * d;
    mass += probabilities_[i];
  }
  return static_cast<double>(sum / mass);
}

absl::StatusOr<Pmf> Discretize(const ContinuousDistribution& dist,
                               const DiscretizeOptions& options) {
  if (!dist.cdf) return absl::InvalidArgumentError("Discretize: missing cdf");
  if (!(options.tail_eps > 0.0) || options.tail_eps >= 1.0) {
    return absl::InvalidArgumentError(
        absl::StrCat("tail_eps must lie in (0, 1), got ", options.tail_eps));
  }
  const double half_eps = options.tail_eps / 2.0;
  auto survival = [&](double w) {
    return dist.survival ? dist.survival(w) : 1.0 - dist.cdf(w);
  };

  // Chebyshev: P(|W - mean| >= t) <= variance / t^2 = half_eps.
  const double spread =
      dist.variance > 0.0 ? std::sqrt(dist.variance / half_eps) : 0.0;
  const double cap_real = std::max(dist.mean, 0.0) + spread + 1.0;
  if (!std::isfinite(cap_real) || cap_real > 1e12) {
    return absl::InvalidArgumentError(absl::StrCat(
        "Discretize: support bound ", cap_real, " is too large to tabulate"));
  }
  const auto cap = static_cast<int64_t>(std::ceil(cap_real));

  // Largest offset whose omitted lower mass F(offset - 1/2) stays within
  // half_eps; offsets never pass the mean.
  const int64_t max_lo = std::max<int64_t>(0, static_cast<int64_t>(dist.mean));
  int64_t lo = 0;
  for (int64_t step = static_cast<int64_t>(
           std::bit_floor(static_cast<uint64_t>(max_lo)));
       step > 0; step /= 2) {
    if (lo + step <= max_lo &&
        dist.cdf(static_cast<double>(lo + step) - 0.5) <= half_eps) {
      lo += step;
    }
  }
  const double lower_tail =
      lo > 0 ? dist.cdf(static_cast<double>(lo) - 0.5) : 0.0;

  std::vector<double> probabilities;
  double prev_cdf = lower_tail;
  double prev_survival = lo > 0 ? survival(static_cast<double>(lo) - 0.5)
                                : 1.0;
  for (int64_t y = lo;; ++y) {
    if (y > cap) {
      return absl::InvalidArgumentError(absl::StrCat(
          "Discretize: upper tail still exceeds ", half_eps, " at y = ", y,
          ", beyond the Chebyshev bound; the cdf is inconsistent with its "
          "stated moments"));
    }
    const double upper = static_cast<double>(y) + 0.5;
    const double cdf = dist.cdf(upper);
    const double surv = survival(upper);
    if (cdf < prev_cdf - 1e-14 || surv > prev_survival + 1e-14) {
      return absl::InvalidArgumentError(
          absl::StrCat("Discretize: cdf is not monotone near w = ", upper));
    }
    const double p = prev_cdf > 0.5 ? prev_survival - surv : cdf - prev_cdf;
    probabilities.push_back(std::max(p, 0.0));
    prev_cdf = cdf;
    prev_survival = surv;
    if (surv < half_eps) {
      return Pmf(lo, std::move(probabilities), lower_tail, surv);
    }
  }
}

double GafPdf(double w, const GafParams& params) {
  if (!(w > 0.0)) return 0.0;
  const double a = params.shape();
  const double x = ScaledArgument(w, params);
  // x^{a-1} e^{-x} / (Gamma(a) scale) = [x^a e^{-x} / Gamma(a+1)] * a / w.
  return SafeExp(internal::LogGammaPrefix(a, x) + std::log(a) - std::log(w));
}

double GafCdf(double w, const GafParams& params) {
  if (!(w > 0.0)) return 0.0;
  return RegularizedGammaP(params.shape(), ScaledArgument(w, params));
}

double GafSurvival(double w, const GafParams& params) {
  if (!(w > 0.0)) return 1.0;
  return RegularizedGammaQ(params.shape(), ScaledArgument(w, params));
}

ContinuousDistribution GafContinuous(const GafParams& params) {
  return ContinuousDistribution{
      .cdf = [params](double w) { return GafCdf(w, params); },
      .survival = [params](double w) { return GafSurvival(w, params); },
      .mean = params.mean(),
      .variance = params.variance(),
  };
}

absl::StatusOr<Pmf> GafPmf(const GafParams& params,
                           const DiscretizeOptions& options) {
  return Discretize(GafContinuous(params), options);
}

double GafPmfAt(int64_t y, const GafParams& params) {
  if (y < 0) return 0.0;
  const double a = params.shape();
  const double upper = ScaledArgument(static_cast<double>(y) + 0.5, params);
  if (y == 0) return RegularizedGammaP(a, upper);
  const double lower = ScaledArgument(static_cast<double>(y) - 0.5, params);
  const auto lo_tail = internal::IncompleteGamma(a, lower);
  const auto hi_tail = internal::IncompleteGamma(a, upper);
  const double p = lo_tail.lower > 0.5 ? lo_tail.upper - hi_tail.upper
                                       : hi_tail.lower - lo_tail.lower;
  return std::max(p, 0.0);
}

double NbiPmf(int64_t x, const NbiParams& params) {
  if (x < 0) return 0.0;
  const double r = 1.0 / params.sigma();
  const double sm = params.sigma() * params.mu();
  // log Gamma(x + r) - log Gamma(x + 1) - log Gamma(r)
  double log_coef = 0.0;
  if (x <= 1000) {
    for (int64_t i = 0; i < x; ++i) {
      log_coef += std::log((r + static_cast<double>(i)) /
                           (1.0 + static_cast<double>(i)));
    }
  } else {
    const auto xd = static_cast<double>(x);
    log_coef = LogGamma(xd + r) - LogGamma(xd + 1.0) - LogGamma(r);
  }
  const double log_p = log_coef +
                       static_cast<double>(x) * (std::log(sm) - std::log1p(sm)) -
                       r * std::log1p(sm);
  return SafeExp(log_p);
}

double PoissonPmf(int64_t x, double mu) {
  if (x < 0) return 0.0;
  if (mu == 0.0) return x == 0 ? 1.0 : 0.0;
  const auto xd = static_cast<double>(x);
  return SafeExp(xd * std::log(mu) - mu - LogGamma(xd + 1.0));
}

std::string_view DispersionName(Dispersion d) {
  switch (d) {
    case Dispersion::kOver:
      return "over";
    case Dispersion::kEqui:
      return "equi";
    case Dispersion::kUnder:
      return "under";
  }
  return "unknown";
}

Dispersion Classify(const GafParams& params) {
  const double variance = params.variance();
  const double mean = params.mean();
  if (std::abs(variance - mean) <= 1e-12 * std::max(1.0, mean)) {
    return Dispersion::kEqui;
  }
  return variance < mean ? Dispersion::kUnder : Dispersion::kOver;
}

absl::StatusOr<double> UnderdispersionThreshold(double mu, double sigma) {
  if (!(mu > 0.0) || !(sigma > 0.0)) {
    return absl::InvalidArgumentError("mu and sigma must be positive");
  }
  if (mu == 1.0) {
    return absl::InvalidArgumentError(
        "no nu threshold at mu = 1: the variance is sigma^2 for every nu; "
        "compare sigma^2 with 1 directly");
  }
  return 1.0 - 2.0 * std::log(sigma) / std::log(mu);
}

}  // namespace tabsynth
