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

#include "tabsynth/mechanism.h"

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace tabsynth {

std::string_view FamilyName(Family family) {
  switch (family) {
    case Family::kPoisson:
      return "poisson";
    case Family::kNbi:
      return "nbi";
    case Family::kGaf:
      return "gaf";
  }
  return "unknown";
}

absl::StatusOr<Family> ParseFamily(std::string_view name) {
  if (name == "poisson") return Family::kPoisson;
  if (name == "nbi") return Family::kNbi;
  if (name == "gaf") return Family::kGaf;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown family '", std::string(name), "' (poisson, nbi, gaf)"));
}

absl::StatusOr<Mechanism> Mechanism::Create(Family family, double sigma,
                                            std::optional<double> nu) {
  if (family == Family::kPoisson) return Poisson();
  if (!std::isfinite(sigma) || !(sigma > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("sigma must be finite and positive, got ", sigma));
  }
  if (family == Family::kNbi) return Mechanism(family, sigma, 0.0);
  if (!nu.has_value()) {
    return absl::InvalidArgumentError("the gaf family requires nu");
  }
  if (!std::isfinite(*nu)) {
    return absl::InvalidArgumentError(
        absl::StrCat("nu must be finite, got ", *nu));
  }
  return Mechanism(family, sigma, *nu);
}

double Mechanism::Variance(double mu) const {
  if (!(mu > 0.0)) return 0.0;
  switch (family_) {
    case Family::kPoisson:
      return mu;
    case Family::kNbi:
      return mu + sigma_ * mu * mu;
    case Family::kGaf:
      return sigma_ * sigma_ * std::pow(mu, nu_);
  }
  return 0.0;
}

double Mechanism::Pmf(int64_t k, double mu) const {
  if (k < 0) return 0.0;
  if (!(mu > 0.0)) return k == 0 ? 1.0 : 0.0;
  switch (family_) {
    case Family::kPoisson:
      return PoissonPmf(k, mu);
    case Family::kNbi:
      return NbiPmf(k, *NbiParams::Create(mu, sigma_));
    case Family::kGaf: {
      absl::StatusOr<GafParams> params = GafParams::Create(mu, sigma_, nu_);
      return params.ok() ? GafPmfAt(k, *params) : 0.0;
    }
  }
  return 0.0;
}

std::string Mechanism::ToString() const {
  switch (family_) {
    case Family::kPoisson:
      return "poisson";
    case Family::kNbi:
      return absl::StrCat("nbi(sigma=", sigma_, ")");
    case Family::kGaf:
      return absl::StrCat("gaf(sigma=", sigma_, ", nu=", nu_, ")");
  }
  return "unknown";
}

}  // namespace tabsynth
