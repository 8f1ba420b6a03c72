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

#ifndef TABSYNTH_CALIBRATION_H_
#define TABSYNTH_CALIBRATION_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "json.hpp"
#include "tabsynth/mechanism.h"
#include "tabsynth/metrics.h"
#include "tabsynth/synthesis.h"
#include "tabsynth/table.h"

namespace tabsynth {

enum class CalibrationMetric { kTau3, kTau4, kL1, kTotalCoverage };
enum class FreeParameter { kSigma, kNu };

absl::StatusOr<CalibrationMetric> ParseCalibrationMetric(std::string_view name);
std::string_view CalibrationMetricName(CalibrationMetric metric);
absl::StatusOr<FreeParameter> ParseFreeParameter(std::string_view name);

// sigma in [1e-3, 20], nu in [-3, 1].
std::pair<double, double> DefaultBounds(FreeParameter parameter);

struct CalibrationTarget {
  CalibrationMetric metric = CalibrationMetric::kTau3;
  int64_t k = 1;    // tau3 / tau4
  double d = 0.0;   // total coverage
  int m = 1;        // L1
  double target = 0.0;

  Family family = Family::kGaf;
  FreeParameter free = FreeParameter::kSigma;
  // The parameter held fixed: nu when solving for sigma, sigma otherwise.
  // Unused for NBI.
  double fixed = 0.0;
  ZeroPolicy zero_policy;

  double lower = 1e-3;
  double upper = 20.0;
  double tolerance = 1e-3;

  absl::Status Validate() const;
  // The mechanism with the free parameter set to `value`.
  absl::StatusOr<Mechanism> MechanismAt(double value) const;
};

// The analytic metric at one value of the free parameter.
absl::StatusOr<double> EvaluateMetric(const CellHistogram& histogram,
                                      const CalibrationTarget& target,
                                      double value);

struct CalibrationResult {
  double value = 0.0;
  double achieved = 0.0;
  int iterations = 0;
  bool monotone = true;
};

// Endpoint check, a 33-point monotonicity scan (log-spaced for sigma), then
// bisection on the bracket. A non-monotone metric is bisected within the
// first grid interval that straddles the target and flagged.
absl::StatusOr<CalibrationResult> Calibrate(const CellHistogram& histogram,
                                            const CalibrationTarget& target);

struct SweepGrid {
  std::vector<Family> families = {Family::kGaf, Family::kNbi};
  std::vector<double> sigmas = {0.5, 1.0, 2.0};
  std::vector<double> nus = {0.0, -0.25, -0.5};
  std::vector<int64_t> tau_sizes = {1};
  int m = 10;
  ZeroPolicy zero_policy = ZeroPolicy::Pseudocount(0.01);
};

struct SweepRow {
  Family family = Family::kGaf;
  double sigma = 0.0;
  std::optional<double> nu;
  std::vector<TauRow> tau;
  RiskUtilityPoint point;
};

// One analytic row per (family, sigma, nu); NBI ignores the nu grid and
// Poisson both grids. Rows are sorted by family name, sigma, then nu.
absl::StatusOr<std::vector<SweepRow>> Sweep(const CellHistogram& histogram,
                                             const SweepGrid& grid);

// family,sigma,nu,risk,utility,log_utility,L1_raw
void WriteSweepCsv(std::ostream& out, const std::vector<SweepRow>& rows);

nlohmann::json CalibrationResultToJson(const CalibrationResult& result);

}  // namespace tabsynth

#endif  // TABSYNTH_CALIBRATION_H_
