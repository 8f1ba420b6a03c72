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

#ifndef TABSYNTH_METRICS_H_
#define TABSYNTH_METRICS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "json.hpp"
#include "tabsynth/mechanism.h"
#include "tabsynth/synthesis.h"
#include "tabsynth/table.h"

namespace tabsynth {

enum class MetricSource { kEmpirical, kAnalytic };

struct TauValue {
  double value = 0.0;
  double std_error = 0.0;  // Monte-Carlo standard error; 0 for analytic
  bool defined = true;
};

// tau1(k) = P(syn = k), tau2(k) = P(orig = k), tau3(k) = P(syn = k | orig =
// k), tau4(k) = P(orig = k | syn = k).
struct TauRow {
  int64_t k = 0;
  TauValue tau1, tau2, tau3, tau4;
  // Pooled counts behind the empirical values (zero for analytic rows).
  int64_t original_cells = 0;   // cells with orig = k
  int64_t synthetic_cells = 0;  // (cell, replicate) pairs with syn = k
  int64_t matched_cells = 0;    // ... with orig = syn = k
};

struct TauReport {
  MetricSource source = MetricSource::kEmpirical;
  int m = 0;
  int64_t num_cells = 0;
  std::vector<TauRow> rows;

  const TauRow* Find(int64_t k) const;
};

// Pools all m replicates: every (cell, replicate) pair is one observation.
absl::StatusOr<TauReport> TauEmpirical(const ContingencyTable& original,
                                       const ReplicateMatrix& replicates,
                                       std::span<const int64_t> sizes);

// P(syn = k | orig = k) for the GAF in closed form:
//   P(a, (k + 1/2) a / k) - P(a, (k - 1/2) a / k),  a = sigma^-2 k^(2 - nu).
double Tau3GafClosedForm(int64_t k, double sigma, double nu);

// Distribution of the synthetic count of a zero cell under the policy.
double ZeroCellPmf(int64_t k, const Mechanism& mechanism,
                   const ZeroPolicy& zero_policy);

// All four tau values at size k from the histogram alone. tau1 sums over the
// observed sizes R only; zero cells enter through the zero policy.
TauRow TauAnalytic(int64_t k, const Mechanism& mechanism,
                   const CellHistogram& histogram,
                   const ZeroPolicy& zero_policy);

// A single tau (which in 1..4).
absl::StatusOr<TauValue> TauAnalytic(int which, int64_t k,
                                     const Mechanism& mechanism,
                                     const CellHistogram& histogram,
                                     const ZeroPolicy& zero_policy);

TauReport TauAnalyticReport(std::span<const int64_t> sizes,
                            const Mechanism& mechanism,
                            const CellHistogram& histogram,
                            const ZeroPolicy& zero_policy, int m);

struct LossReport {
  // sum over cells with f > 0 of (f - mean_r syn_r)^2.
  double l1_empirical = 0.0;
  // Same sum over every cell, zero cells included.
  double l1_empirical_all_cells = 0.0;
  std::optional<double> l1_analytic;
  int64_t excluded_zero_cells = 0;
  int m = 0;
};

// sum_{j in R, j > 0} K tau2(j) Var(j) / m; for the GAF Var(j) = sigma^2 j^nu.
double L1Analytic(const CellHistogram& histogram, const Mechanism& mechanism,
                  int m);

absl::StatusOr<LossReport> LossL1(const ContingencyTable& original,
                                  const ReplicateMatrix& replicates,
                                  const Mechanism* analytic = nullptr);

// sum over nonzero cells of Var(f), plus the zero cells' contribution under
// the policy (pseudocount: Var(alpha); bernoulli: p(1 - p); keep: none).
double AnalyticTotalVariance(const CellHistogram& histogram,
                             const Mechanism& mechanism,
                             const ZeroPolicy& zero_policy);

// Normal approximation to P(|n_syn - n| < d): 2 Phi(d / sd) - 1.
double TotalCoverage(double analytic_variance, double d);

struct TotalReport {
  int64_t n = 0;
  std::vector<int64_t> synthetic_totals;
  double analytic_variance = 0.0;

  double Coverage(double d) const {
    return TotalCoverage(analytic_variance, d);
  }
  // Fraction of replicates with |n_syn - n| < d.
  double EmpiricalCoverage(double d) const;
};

// Grand total of a count vector, saturating at kMaxCount.
int64_t SaturatingTotal(const Eigen::Ref<const Counts>& counts);

TotalReport MakeTotalReport(const ContingencyTable& original,
                            std::vector<int64_t> synthetic_totals,
                            const Mechanism& mechanism,
                            const ZeroPolicy& zero_policy);
TotalReport MakeTotalReport(const ContingencyTable& original,
                            const ReplicateMatrix& replicates,
                            const Mechanism& mechanism,
                            const ZeroPolicy& zero_policy);

// Risk tau4(1) against utility 1 - inverse_logit(L1). L1 is used raw, so
// utility underflows to 0 once L1 exceeds ~745; log_utility keeps the
// ordering readable there.
struct RiskUtilityPoint {
  MetricSource source = MetricSource::kAnalytic;
  Family family = Family::kGaf;
  double sigma = 0.0;
  double nu = 0.0;
  double risk = 0.0;
  bool risk_defined = true;
  double l1 = 0.0;
  double utility = 0.0;
  double log_utility = 0.0;
};

RiskUtilityPoint MakeRiskUtilityPoint(MetricSource source,
                                      const Mechanism& mechanism,
                                      const TauValue& tau4_of_1, double l1);

RiskUtilityPoint RiskUtilityAnalytic(const CellHistogram& histogram,
                                     const Mechanism& mechanism,
                                     const ZeroPolicy& zero_policy, int m);

absl::StatusOr<RiskUtilityPoint> RiskUtilityEmpirical(
    const ContingencyTable& original, const ReplicateMatrix& replicates,
    const Mechanism& mechanism);

// Pooled distribution of one count given the other: synthetic counts of
// cells whose original count is `given`, or original counts of
// (cell, replicate) pairs whose synthetic count is `given`.
struct ConditionalDistribution {
  int64_t given = 0;
  int64_t total = 0;
  std::map<int64_t, int64_t> frequencies;
};

std::vector<ConditionalDistribution> SyntheticGivenOriginal(
    const ContingencyTable& original, const ReplicateMatrix& replicates,
    std::span<const int64_t> sizes);
std::vector<ConditionalDistribution> OriginalGivenSynthetic(
    const ContingencyTable& original, const ReplicateMatrix& replicates,
    std::span<const int64_t> sizes);

nlohmann::json TauReportToJson(const TauReport& report);
nlohmann::json LossReportToJson(const LossReport& report);
nlohmann::json TotalReportToJson(const TotalReport& report,
                                 std::span<const double> distances);
nlohmann::json RiskUtilityPointToJson(const RiskUtilityPoint& point);

}  // namespace tabsynth

#endif  // TABSYNTH_METRICS_H_
