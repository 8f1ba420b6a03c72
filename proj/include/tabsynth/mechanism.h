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

#ifndef TABSYNTH_MECHANISM_H_
#define TABSYNTH_MECHANISM_H_

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "absl/status/statusor.h"
#include "tabsynth/distributions.h"

namespace tabsynth {

enum class Family { kPoisson, kNbi, kGaf };

std::string_view FamilyName(Family family);
absl::StatusOr<Family> ParseFamily(std::string_view name);

// A saturated count mechanism: a cell with mean mu is replaced by a draw from
// the family with that mean. sigma is ignored for Poisson, nu is used by GAF
// only.
class Mechanism {
 public:
  // GAF requires nu.
  static absl::StatusOr<Mechanism> Create(Family family, double sigma,
                                          std::optional<double> nu);
  static Mechanism Poisson() { return Mechanism(Family::kPoisson, 1.0, 0.0); }

  Family family() const { return family_; }
  double sigma() const { return sigma_; }
  double nu() const { return nu_; }

  // Model variance: mu (Poisson), mu + sigma mu^2 (NBI), sigma^2 mu^nu (GAF).
  double Variance(double mu) const;

  // P(draw = k | mean mu); mu = 0 is a point mass at zero.
  double Pmf(int64_t k, double mu) const;

  template <typename Urbg>
  int64_t Sample(double mu, Urbg& gen, bool* clamped = nullptr) const;

  std::string ToString() const;

 private:
  Mechanism(Family family, double sigma, double nu)
      : family_(family),
        sigma_(sigma),
        nu_(nu),
        log_sigma_(std::log(sigma)) {}

  Family family_;
  double sigma_;
  double nu_;
  double log_sigma_;
};

template <typename Urbg>
int64_t Mechanism::Sample(double mu, Urbg& gen, bool* clamped) const {
  if (!(mu > 0.0)) return 0;
  switch (family_) {
    case Family::kPoisson:
      return PoissonSample(mu, gen, clamped);
    case Family::kNbi: {
      const double log_rate =
          LogStandardGamma(1.0 / sigma_, gen) + log_sigma_ + std::log(mu);
      if (log_rate >= 43.67) {
        if (clamped != nullptr) *clamped = true;
        return kMaxCount;
      }
      return internal::ClampToCount(PoissonVariate(std::exp(log_rate), gen),
                                    clamped);
    }
    case Family::kGaf: {
      // sigma1 = sigma mu^(nu/2 - 1); shape sigma1^-2, scale sigma1^2 mu.
      const double log_mu = std::log(mu);
      const double log_sigma1 = log_sigma_ + (nu_ / 2.0 - 1.0) * log_mu;
      const double log_w = LogStandardGamma(std::exp(-2.0 * log_sigma1), gen) +
                           2.0 * log_sigma1 + log_mu;
      if (log_w < -0.6931471805599453) return 0;
      if (log_w >= 43.67) {
        if (clamped != nullptr) *clamped = true;
        return kMaxCount;
      }
      return internal::ClampToCount(std::floor(std::exp(log_w) + 0.5),
                                    clamped);
    }
  }
  return 0;
}

}  // namespace tabsynth

#endif  // TABSYNTH_MECHANISM_H_
