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

#ifndef TABSYNTH_LOGLINEAR_H_
#define TABSYNTH_LOGLINEAR_H_

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "absl/status/statusor.h"
#include "json.hpp"
#include "tabsynth/table.h"

namespace tabsynth {

// Which margins to fit and the highest interaction order.
struct LogLinearModel {
  std::vector<std::string> variables;
  int order = 2;
};

// The default specific-utility model: all two-way interactions among
// ETHNICITY, AGE and LANGUAGE.
LogLinearModel DefaultSpecificUtilityModel();

struct FitOptions {
  int max_iterations = 100;
  double score_tolerance = 1e-8;
  // A stalled deviance only counts as convergence once the score is
  // also below this bound.
  double deviance_tolerance = 1e-10;
  double stalled_score_tolerance = 1e-6;
  // Terms whose standard error exceeds this are reported as separated.
  double separation_std_error = 1e3;
};

struct FitResult {
  std::vector<std::string> terms;
  Eigen::VectorXd estimate;
  Eigen::VectorXd std_error;
  Eigen::VectorXd lower;  // estimate - 1.96 se
  Eigen::VectorXd upper;
  std::vector<bool> separated;
  Eigen::VectorXd fitted;

  int iterations = 0;
  bool converged = false;
  double deviance = 0.0;
  double log_likelihood = 0.0;
  double max_abs_score = 0.0;
};

// Treatment-coded design over every variable of `schema`: an intercept, then
// all interactions of order 1..`order` with the first category as reference.
// Rows follow the schema's cell order.
Eigen::MatrixXd DesignMatrix(const TableSchema& schema, int order,
                             std::vector<std::string>* term_names = nullptr);

// Poisson log-likelihood sum(y eta - exp(eta) - log y!) with eta = X beta.
double PoissonLogLikelihood(const Eigen::MatrixXd& design,
                            const Eigen::VectorXd& y,
                            const Eigen::VectorXd& beta);
// Its gradient X'(y - mu).
Eigen::VectorXd PoissonScore(const Eigen::MatrixXd& design,
                             const Eigen::VectorXd& y,
                             const Eigen::VectorXd& beta);

// Poisson GLM with log link fitted by iteratively reweighted least squares
// with step halving. Non-convergence is reported through FitResult, not as
// an error.
absl::StatusOr<FitResult> FitLogLinear(const ContingencyTable& table,
                                       int order,
                                       const FitOptions& options = {});

// Collapses `table` to the model's variables first.
absl::StatusOr<FitResult> FitLogLinear(const ContingencyTable& table,
                                       const LogLinearModel& model,
                                       const FitOptions& options = {});

struct OverlapValue {
  double value = 0.0;
  bool defined = true;
};

// Mean of the shared length's fractions of each interval, clamped at 0.
// Undefined when either interval has zero (or non-finite) width.
OverlapValue IntervalOverlap(double original_lower, double original_upper,
                             double synthetic_lower, double synthetic_upper);

struct OverlapReport {
  std::vector<std::string> terms;
  // values[r][t]: replicate r, term t. Separated terms are undefined.
  std::vector<std::vector<OverlapValue>> values;
  double median = 0.0;  // over every defined value
  int64_t undefined = 0;
};

absl::StatusOr<OverlapReport> CiOverlap(const FitResult& original,
                                        std::span<const FitResult> synthetic);

nlohmann::json FitResultToJson(const FitResult& fit);
nlohmann::json OverlapReportToJson(const OverlapReport& report);

}  // namespace tabsynth

#endif  // TABSYNTH_LOGLINEAR_H_
