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

#include "tabsynth/calibration.h"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "tabsynth/csv.h"

namespace tabsynth {
namespace {

constexpr int kScanPoints = 33;
constexpr int kMaxBisections = 200;

double Between(FreeParameter p, double a, double b) {
  return p == FreeParameter::kSigma ? std::sqrt(a * b) : 0.5 * (a + b);
}

}  // namespace

absl::StatusOr<CalibrationMetric> ParseCalibrationMetric(std::string_view name) {
  if (name == "tau3") return CalibrationMetric::kTau3;
  if (name == "tau4") return CalibrationMetric::kTau4;
  if (name == "l1" || name == "L1") return CalibrationMetric::kL1;
  if (name == "coverage") return CalibrationMetric::kTotalCoverage;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown metric '", std::string(name),
                   "' (expected tau3, tau4, l1 or coverage)"));
}

std::string_view CalibrationMetricName(CalibrationMetric metric) {
  switch (metric) {
    case CalibrationMetric::kTau3:
      return "tau3";
    case CalibrationMetric::kTau4:
      return "tau4";
    case CalibrationMetric::kL1:
      return "l1";
    case CalibrationMetric::kTotalCoverage:
      return "coverage";
  }
  return "?";
}

absl::StatusOr<FreeParameter> ParseFreeParameter(std::string_view name) {
  if (name == "sigma") return FreeParameter::kSigma;
  if (name == "nu") return FreeParameter::kNu;
  return absl::InvalidArgumentError(
      absl::StrCat("free parameter must be sigma or nu, got '", std::string(name), "'"));
}

std::pair<double, double> DefaultBounds(FreeParameter parameter) {
  return parameter == FreeParameter::kSigma ? std::pair{1e-3, 20.0}
                                            : std::pair{-3.0, 1.0};
}

absl::Status CalibrationTarget::Validate() const {
  if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower < upper)) {
    return absl::InvalidArgumentError(
        absl::StrCat("bounds must be finite with lower < upper, got [", lower,
                     ", ", upper, "]"));
  }
  if (!(tolerance > 0.0)) {
    return absl::InvalidArgumentError("tolerance must be positive");
  }
  if (!std::isfinite(target)) {
    return absl::InvalidArgumentError("target must be finite");
  }
  if (family == Family::kPoisson) {
    return absl::InvalidArgumentError("poisson has no tuning parameter");
  }
  if (family == Family::kNbi && free != FreeParameter::kSigma) {
    return absl::InvalidArgumentError("nbi can only be calibrated in sigma");
  }
  if (free == FreeParameter::kSigma && !(lower > 0.0)) {
    return absl::InvalidArgumentError("sigma bounds must be positive");
  }
  if (free == FreeParameter::kNu && !(fixed > 0.0)) {
    return absl::InvalidArgumentError("fixed sigma must be positive");
  }
  if (!std::isfinite(fixed)) {
    return absl::InvalidArgumentError("fixed parameter must be finite");
  }
  if ((metric == CalibrationMetric::kTau3 ||
       metric == CalibrationMetric::kTau4) &&
      k < 0) {
    return absl::InvalidArgumentError("k must be non-negative");
  }
  if (metric == CalibrationMetric::kL1 && m < 1) {
    return absl::InvalidArgumentError("m must be >= 1");
  }
  if (metric == CalibrationMetric::kTotalCoverage && !(d >= 0.0)) {
    return absl::InvalidArgumentError("d must be non-negative");
  }
  return zero_policy.Validate();
}

absl::StatusOr<Mechanism> CalibrationTarget::MechanismAt(double value) const {
  if (family == Family::kNbi) return Mechanism::Create(family, value, {});
  if (free == FreeParameter::kSigma) {
    return Mechanism::Create(family, value, fixed);
  }
  return Mechanism::Create(family, fixed, value);
}

absl::StatusOr<double> EvaluateMetric(const CellHistogram& histogram,
                                      const CalibrationTarget& target,
                                      double value) {
  absl::StatusOr<Mechanism> mechanism = target.MechanismAt(value);
  if (!mechanism.ok()) return mechanism.status();
  switch (target.metric) {
    case CalibrationMetric::kTau3:
    case CalibrationMetric::kTau4: {
      const int which = target.metric == CalibrationMetric::kTau3 ? 3 : 4;
      absl::StatusOr<TauValue> tau = TauAnalytic(
          which, target.k, *mechanism, histogram, target.zero_policy);
      if (!tau.ok()) return tau.status();
      if (!tau->defined) {
        return absl::FailedPreconditionError(
            absl::StrCat("tau", which, "(", target.k, ") is undefined at ",
                         value));
      }
      return tau->value;
    }
    case CalibrationMetric::kL1:
      return L1Analytic(histogram, *mechanism, target.m);
    case CalibrationMetric::kTotalCoverage:
      return TotalCoverage(
          AnalyticTotalVariance(histogram, *mechanism, target.zero_policy),
          target.d);
  }
  return absl::InternalError("unhandled metric");
}

absl::StatusOr<CalibrationResult> Calibrate(const CellHistogram& histogram,
                                            const CalibrationTarget& target) {
  if (absl::Status s = target.Validate(); !s.ok()) return s;
  const FreeParameter p = target.free;
  const double t = target.target;

  std::vector<double> xs(kScanPoints), fs(kScanPoints);
  for (int i = 0; i < kScanPoints; ++i) {
    const double u = static_cast<double>(i) / (kScanPoints - 1);
    xs[i] = p == FreeParameter::kSigma
                ? std::exp(std::log(target.lower) +
                           u * (std::log(target.upper) - std::log(target.lower)))
                : target.lower + u * (target.upper - target.lower);
  }
  xs.front() = target.lower;
  xs.back() = target.upper;
  for (int i = 0; i < kScanPoints; ++i) {
    absl::StatusOr<double> f = EvaluateMetric(histogram, target, xs[i]);
    if (!f.ok()) return f.status();
    fs[i] = *f;
  }

  CalibrationResult result;
  const double scale = std::max(std::fabs(*std::max_element(fs.begin(), fs.end())),
                                std::fabs(*std::min_element(fs.begin(), fs.end())));
  const double slack = 1e-12 * std::max(scale, 1e-300);
  bool up = true, down = true;
  for (int i = 1; i < kScanPoints; ++i) {
    up = up && fs[i] >= fs[i - 1] - slack;
    down = down && fs[i] <= fs[i - 1] + slack;
  }
  result.monotone = up || down;

  for (int i : {0, kScanPoints - 1}) {
    if (std::fabs(fs[i] - t) <= target.tolerance) {
      result.value = xs[i];
      result.achieved = fs[i];
      return result;
    }
  }

  const auto [lo_it, hi_it] = std::minmax_element(fs.begin(), fs.end());
  if (t < *lo_it - target.tolerance || t > *hi_it + target.tolerance) {
    return absl::OutOfRangeError(absl::StrCat(
        std::string(CalibrationMetricName(target.metric)), " target ", t,
        " is outside the attainable interval [", *lo_it, ", ", *hi_it,
        "] for ", p == FreeParameter::kSigma ? "sigma" : "nu", " in [",
        target.lower, ", ", target.upper, "]"));
  }

  int a = 0, b = kScanPoints - 1;
  if (!result.monotone) {
    // Grid min and max are both grid points, so some adjacent pair straddles.
    for (int i = 0; i + 1 < kScanPoints; ++i) {
      if ((fs[i] - t) * (fs[i + 1] - t) <= 0.0) {
        a = i;
        b = i + 1;
        break;
      }
    }
  }
  double xa = xs[a], xb = xs[b], fa = fs[a];
  for (int i = 0; i < kScanPoints; ++i) {
    if (std::fabs(fs[i] - t) <= target.tolerance &&
        (result.monotone || (i >= a && i <= b))) {
      result.value = xs[i];
      result.achieved = fs[i];
      return result;
    }
  }

  double xm = Between(p, xa, xb), fm = fa;
  for (int it = 1; it <= kMaxBisections; ++it) {
    xm = Between(p, xa, xb);
    absl::StatusOr<double> f = EvaluateMetric(histogram, target, xm);
    if (!f.ok()) return f.status();
    fm = *f;
    result.iterations = it;
    if (std::fabs(fm - t) <= target.tolerance) break;
    if ((fa - t) * (fm - t) <= 0.0) {
      xb = xm;
    } else {
      xa = xm;
      fa = fm;
    }
    if (std::fabs(xb - xa) <= 4e-16 * std::max(std::fabs(xa), std::fabs(xb))) {
      break;
    }
  }
  result.value = xm;
  result.achieved = fm;
  return result;
}

absl::StatusOr<std::vector<SweepRow>> Sweep(const CellHistogram& histogram,
                                             const SweepGrid& grid) {
  if (grid.families.empty() || grid.sigmas.empty()) {
    return absl::InvalidArgumentError("sweep grids must be non-empty");
  }
  if (grid.m < 1) return absl::InvalidArgumentError("m must be >= 1");
  if (absl::Status s = grid.zero_policy.Validate(); !s.ok()) return s;

  using Key = std::tuple<std::string_view, double, std::optional<double>>;
  std::vector<std::pair<Key, Family>> combos;
  for (Family family : grid.families) {
    const std::string_view name = FamilyName(family);
    switch (family) {
      case Family::kPoisson:
        combos.push_back({{name, 1.0, std::nullopt}, family});
        break;
      case Family::kNbi:
        for (double s : grid.sigmas) combos.push_back({{name, s, {}}, family});
        break;
      case Family::kGaf:
        if (grid.nus.empty()) {
          return absl::InvalidArgumentError("gaf sweep needs a nu grid");
        }
        for (double s : grid.sigmas) {
          for (double nu : grid.nus) combos.push_back({{name, s, nu}, family});
        }
        break;
    }
  }
  std::sort(combos.begin(), combos.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  combos.erase(std::unique(combos.begin(), combos.end()), combos.end());

  std::vector<SweepRow> rows;
  rows.reserve(combos.size());
  for (const auto& [key, family] : combos) {
    const auto& [name, sigma, nu] = key;
    absl::StatusOr<Mechanism> mechanism =
        family == Family::kPoisson ? Mechanism::Poisson()
                                   : Mechanism::Create(family, sigma, nu);
    if (!mechanism.ok()) return mechanism.status();
    SweepRow row;
    row.family = family;
    row.sigma = sigma;
    row.nu = nu;
    for (int64_t k : grid.tau_sizes) {
      row.tau.push_back(TauAnalytic(k, *mechanism, histogram, grid.zero_policy));
    }
    row.point =
        RiskUtilityAnalytic(histogram, *mechanism, grid.zero_policy, grid.m);
    rows.push_back(std::move(row));
  }
  return rows;
}

void WriteSweepCsv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "family,sigma,nu,risk,utility,log_utility,L1_raw\n";
  for (const SweepRow& row : rows) {
    out << FamilyName(row.family) << ',' << FormatDouble(row.sigma) << ','
        << (row.nu ? FormatDouble(*row.nu) : "") << ','
        << (row.point.risk_defined ? FormatDouble(row.point.risk) : "") << ','
        << FormatDouble(row.point.utility) << ','
        << FormatDouble(row.point.log_utility) << ','
        << FormatDouble(row.point.l1) << '\n';
  }
}

nlohmann::json CalibrationResultToJson(const CalibrationResult& result) {
  return {{"value", result.value},
          {"achieved", result.achieved},
          {"iterations", result.iterations},
          {"monotone", result.monotone}};
}

}  // namespace tabsynth
