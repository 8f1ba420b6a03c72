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

#include "tabsynth/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "absl/container/flat_hash_map.h"
#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "tabsynth/special_functions.h"

namespace tabsynth {
namespace {

absl::Status CheckShapes(const ContingencyTable& original,
                         const ReplicateMatrix& replicates) {
  if (replicates.rows() != original.num_cells()) {
    return absl::InvalidArgumentError(
        absl::StrCat("replicates have ", replicates.rows(),
                     " cells but the original table has ",
                     original.num_cells()));
  }
  if (replicates.cols() < 1) {
    return absl::InvalidArgumentError("no replicates");
  }
  return absl::OkStatus();
}

absl::flat_hash_map<int64_t, size_t> IndexSizes(
    std::span<const int64_t> sizes) {
  absl::flat_hash_map<int64_t, size_t> index;
  for (size_t i = 0; i < sizes.size(); ++i) index.try_emplace(sizes[i], i);
  return index;
}

TauValue Proportion(int64_t hits, int64_t trials) {
  if (trials <= 0) return {0.0, 0.0, false};
  const double p = static_cast<double>(hits) / static_cast<double>(trials);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(trials)), true};
}

nlohmann::json TauValueToJson(const TauValue& v) {
  if (!v.defined) return nullptr;
  return {{"value", v.value}, {"se", v.std_error}};
}

}  // namespace

const TauRow* TauReport::Find(int64_t k) const {
  for (const TauRow& row : rows) {
    if (row.k == k) return &row;
  }
  return nullptr;
}

absl::StatusOr<TauReport> TauEmpirical(const ContingencyTable& original,
                                       const ReplicateMatrix& replicates,
                                       std::span<const int64_t> sizes) {
  if (absl::Status s = CheckShapes(original, replicates); !s.ok()) return s;
  const auto index = IndexSizes(sizes);
  const int64_t num_cells = original.num_cells();
  const int m = static_cast<int>(replicates.cols());

  std::vector<int64_t> orig(sizes.size(), 0), syn(sizes.size(), 0),
      matched(sizes.size(), 0);
  for (int64_t i = 0; i < num_cells; ++i) {
    const auto it = index.find(original.count(i));
    if (it != index.end()) ++orig[it->second];
  }
  for (int r = 0; r < m; ++r) {
    const auto column = replicates.col(r);
    for (int64_t i = 0; i < num_cells; ++i) {
      const auto it = index.find(column[i]);
      if (it == index.end()) continue;
      ++syn[it->second];
      if (column[i] == original.count(i)) ++matched[it->second];
    }
  }

  TauReport report;
  report.source = MetricSource::kEmpirical;
  report.m = m;
  report.num_cells = num_cells;
  const int64_t pairs = num_cells * m;
  for (size_t s = 0; s < sizes.size(); ++s) {
    TauRow row;
    row.k = sizes[s];
    const size_t at = index.at(sizes[s]);
    row.original_cells = orig[at];
    row.synthetic_cells = syn[at];
    row.matched_cells = matched[at];
    row.tau1 = Proportion(row.synthetic_cells, pairs);
    row.tau2 = Proportion(row.original_cells, num_cells);
    row.tau2.std_error = 0.0;  // a property of the original, not simulated
    row.tau3 = Proportion(row.matched_cells, row.original_cells * m);
    row.tau4 = Proportion(row.matched_cells, row.synthetic_cells);
    report.rows.push_back(row);
  }
  return report;
}

double Tau3GafClosedForm(int64_t k, double sigma, double nu) {
  const double kd = static_cast<double>(k);
  const double a = std::exp((2.0 - nu) * std::log(kd) - 2.0 * std::log(sigma));
  const double hi = (kd + 0.5) * a / kd;
  const double lo = (kd - 0.5) * a / kd;
  // Differences of upper tails keep precision when both CDFs are near one.
  if (lo >= a) {
    return std::max(0.0, RegularizedGammaQ(a, lo) - RegularizedGammaQ(a, hi));
  }
  return std::max(0.0, RegularizedGammaP(a, hi) - RegularizedGammaP(a, lo));
}

double ZeroCellPmf(int64_t k, const Mechanism& mechanism,
                   const ZeroPolicy& zero_policy) {
  switch (zero_policy.kind) {
    case ZeroPolicy::Kind::kKeepZero:
      return k == 0 ? 1.0 : 0.0;
    case ZeroPolicy::Kind::kPseudocount:
      return mechanism.Pmf(k, zero_policy.value);
    case ZeroPolicy::Kind::kBernoulli:
      if (k == 0) return 1.0 - zero_policy.value;
      return k == 1 ? zero_policy.value : 0.0;
  }
  return 0.0;
}

namespace {

double Tau3Analytic(int64_t k, const Mechanism& mechanism,
                    const ZeroPolicy& zero_policy) {
  if (k == 0) return ZeroCellPmf(0, mechanism, zero_policy);
  if (mechanism.family() == Family::kGaf) {
    return Tau3GafClosedForm(k, mechanism.sigma(), mechanism.nu());
  }
  return mechanism.Pmf(k, static_cast<double>(k));
}

}  // namespace

TauRow TauAnalytic(int64_t k, const Mechanism& mechanism,
                   const CellHistogram& histogram,
                   const ZeroPolicy& zero_policy) {
  TauRow row;
  row.k = k;
  row.tau2 = {histogram.proportion(k), 0.0, true};
  row.tau3 = {Tau3Analytic(k, mechanism, zero_policy), 0.0, true};
  long double tau1 = 0.0L;
  for (const auto& [j, frequency] : histogram.frequencies()) {
    if (frequency == 0) continue;
    const double p = j == 0 ? ZeroCellPmf(k, mechanism, zero_policy)
                            : mechanism.Pmf(k, static_cast<double>(j));
    tau1 += static_cast<long double>(histogram.proportion(j)) * p;
  }
  row.tau1 = {static_cast<double>(tau1), 0.0, true};
  if (row.tau1.value > 0.0) {
    row.tau4 = {std::min(1.0, row.tau2.value * row.tau3.value / row.tau1.value),
                0.0, true};
  } else {
    row.tau4 = {0.0, 0.0, false};
  }
  return row;
}

absl::StatusOr<TauValue> TauAnalytic(int which, int64_t k,
                                     const Mechanism& mechanism,
                                     const CellHistogram& histogram,
                                     const ZeroPolicy& zero_policy) {
  if (k < 0) return absl::InvalidArgumentError("k must be non-negative");
  switch (which) {
    case 2:
      return TauValue{histogram.proportion(k), 0.0, true};
    case 3:
      return TauValue{Tau3Analytic(k, mechanism, zero_policy), 0.0, true};
    case 1:
      return TauAnalytic(k, mechanism, histogram, zero_policy).tau1;
    case 4:
      return TauAnalytic(k, mechanism, histogram, zero_policy).tau4;
    default:
      return absl::InvalidArgumentError(
          absl::StrCat("tau index must be 1..4, got ", which));
  }
}

TauReport TauAnalyticReport(std::span<const int64_t> sizes,
                            const Mechanism& mechanism,
                            const CellHistogram& histogram,
                            const ZeroPolicy& zero_policy, int m) {
  TauReport report;
  report.source = MetricSource::kAnalytic;
  report.m = m;
  report.num_cells = histogram.num_cells();
  for (int64_t k : sizes) {
    report.rows.push_back(TauAnalytic(k, mechanism, histogram, zero_policy));
  }
  return report;
}

double L1Analytic(const CellHistogram& histogram, const Mechanism& mechanism,
                  int m) {
  long double sum = 0.0L;
  for (const auto& [j, frequency] : histogram.frequencies()) {
    if (j <= 0) continue;
    sum += static_cast<long double>(frequency) *
           mechanism.Variance(static_cast<double>(j));
  }
  return static_cast<double>(sum / m);
}

absl::StatusOr<LossReport> LossL1(const ContingencyTable& original,
                                  const ReplicateMatrix& replicates,
                                  const Mechanism* analytic) {
  if (absl::Status s = CheckShapes(original, replicates); !s.ok()) return s;
  const int m = static_cast<int>(replicates.cols());
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(replicates.rows());
  for (int r = 0; r < m; ++r) sums += replicates.col(r).cast<double>();
  const Eigen::VectorXd diff =
      original.counts().cast<double>() - sums / static_cast<double>(m);

  LossReport report;
  report.m = m;
  long double nonzero = 0.0L, all = 0.0L;
  for (Eigen::Index i = 0; i < diff.size(); ++i) {
    const long double sq = static_cast<long double>(diff[i]) * diff[i];
    all += sq;
    if (original.count(i) > 0) {
      nonzero += sq;
    } else {
      ++report.excluded_zero_cells;
    }
  }
  report.l1_empirical = static_cast<double>(nonzero);
  report.l1_empirical_all_cells = static_cast<double>(all);
  if (analytic != nullptr) {
    report.l1_analytic = L1Analytic(Histogram(original), *analytic, m);
  }
  return report;
}

double AnalyticTotalVariance(const CellHistogram& histogram,
                             const Mechanism& mechanism,
                             const ZeroPolicy& zero_policy) {
  long double var = 0.0L;
  for (const auto& [j, frequency] : histogram.frequencies()) {
    if (j > 0) {
      var += static_cast<long double>(frequency) *
             mechanism.Variance(static_cast<double>(j));
    }
  }
  const long double zeros = histogram.frequency(0);
  switch (zero_policy.kind) {
    case ZeroPolicy::Kind::kKeepZero:
      break;
    case ZeroPolicy::Kind::kPseudocount:
      var += zeros * mechanism.Variance(zero_policy.value);
      break;
    case ZeroPolicy::Kind::kBernoulli:
      var += zeros * zero_policy.value * (1.0 - zero_policy.value);
      break;
  }
  return static_cast<double>(var);
}

double TotalCoverage(double analytic_variance, double d) {
  if (!(d > 0.0)) return 0.0;
  if (!(analytic_variance > 0.0)) return 1.0;
  const double z = d / std::sqrt(analytic_variance);
  return std::clamp(2.0 * NormalCdf(z) - 1.0, 0.0, 1.0);
}

double TotalReport::EmpiricalCoverage(double d) const {
  if (synthetic_totals.empty()) return 0.0;
  int64_t inside = 0;
  for (int64_t t : synthetic_totals) {
    const long double gap = std::fabs(static_cast<long double>(t) - n);
    if (gap < d) ++inside;
  }
  return static_cast<double>(inside) /
         static_cast<double>(synthetic_totals.size());
}

int64_t SaturatingTotal(const Eigen::Ref<const Counts>& counts) {
  int64_t total = 0;
  for (Eigen::Index i = 0; i < counts.size(); ++i) {
    if (__builtin_add_overflow(total, counts[i], &total)) return kMaxCount;
  }
  return total;
}

TotalReport MakeTotalReport(const ContingencyTable& original,
                            std::vector<int64_t> synthetic_totals,
                            const Mechanism& mechanism,
                            const ZeroPolicy& zero_policy) {
  TotalReport report;
  report.n = original.total();
  report.synthetic_totals = std::move(synthetic_totals);
  report.analytic_variance =
      AnalyticTotalVariance(Histogram(original), mechanism, zero_policy);
  return report;
}

TotalReport MakeTotalReport(const ContingencyTable& original,
                            const ReplicateMatrix& replicates,
                            const Mechanism& mechanism,
                            const ZeroPolicy& zero_policy) {
  std::vector<int64_t> totals;
  totals.reserve(replicates.cols());
  for (Eigen::Index r = 0; r < replicates.cols(); ++r) {
    totals.push_back(SaturatingTotal(replicates.col(r)));
  }
  return MakeTotalReport(original, std::move(totals), mechanism, zero_policy);
}

RiskUtilityPoint MakeRiskUtilityPoint(MetricSource source,
                                      const Mechanism& mechanism,
                                      const TauValue& tau4_of_1, double l1) {
  RiskUtilityPoint point;
  point.source = source;
  point.family = mechanism.family();
  point.sigma = mechanism.sigma();
  point.nu = mechanism.family() == Family::kGaf
                 ? mechanism.nu()
                 : std::numeric_limits<double>::quiet_NaN();
  point.risk = tau4_of_1.value;
  point.risk_defined = tau4_of_1.defined;
  point.l1 = l1;
  point.utility = InverseLogit(-l1);
  point.log_utility = LogOneMinusInverseLogit(l1);
  return point;
}

RiskUtilityPoint RiskUtilityAnalytic(const CellHistogram& histogram,
                                     const Mechanism& mechanism,
                                     const ZeroPolicy& zero_policy, int m) {
  const TauRow row = TauAnalytic(1, mechanism, histogram, zero_policy);
  return MakeRiskUtilityPoint(MetricSource::kAnalytic, mechanism, row.tau4,
                              L1Analytic(histogram, mechanism, m));
}

absl::StatusOr<RiskUtilityPoint> RiskUtilityEmpirical(
    const ContingencyTable& original, const ReplicateMatrix& replicates,
    const Mechanism& mechanism) {
  const int64_t one = 1;
  absl::StatusOr<TauReport> tau =
      TauEmpirical(original, replicates, std::span<const int64_t>(&one, 1));
  if (!tau.ok()) return tau.status();
  absl::StatusOr<LossReport> loss = LossL1(original, replicates);
  if (!loss.ok()) return loss.status();
  return MakeRiskUtilityPoint(MetricSource::kEmpirical, mechanism,
                              tau->rows.front().tau4, loss->l1_empirical);
}

std::vector<ConditionalDistribution> SyntheticGivenOriginal(
    const ContingencyTable& original, const ReplicateMatrix& replicates,
    std::span<const int64_t> sizes) {
  const auto index = IndexSizes(sizes);
  std::vector<ConditionalDistribution> out(sizes.size());
  for (size_t s = 0; s < sizes.size(); ++s) out[s].given = sizes[s];
  for (int64_t i = 0; i < original.num_cells(); ++i) {
    const auto it = index.find(original.count(i));
    if (it == index.end()) continue;
    ConditionalDistribution& dist = out[it->second];
    for (Eigen::Index r = 0; r < replicates.cols(); ++r) {
      ++dist.frequencies[replicates(i, r)];
      ++dist.total;
    }
  }
  return out;
}

std::vector<ConditionalDistribution> OriginalGivenSynthetic(
    const ContingencyTable& original, const ReplicateMatrix& replicates,
    std::span<const int64_t> sizes) {
  const auto index = IndexSizes(sizes);
  std::vector<ConditionalDistribution> out(sizes.size());
  for (size_t s = 0; s < sizes.size(); ++s) out[s].given = sizes[s];
  for (Eigen::Index r = 0; r < replicates.cols(); ++r) {
    const auto column = replicates.col(r);
    for (int64_t i = 0; i < original.num_cells(); ++i) {
      const auto it = index.find(column[i]);
      if (it == index.end()) continue;
      ConditionalDistribution& dist = out[it->second];
      ++dist.frequencies[original.count(i)];
      ++dist.total;
    }
  }
  return out;
}

nlohmann::json TauReportToJson(const TauReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const TauRow& row : report.rows) {
    nlohmann::json j = {{"k", row.k},
                        {"tau1", TauValueToJson(row.tau1)},
                        {"tau2", TauValueToJson(row.tau2)},
                        {"tau3", TauValueToJson(row.tau3)},
                        {"tau4", TauValueToJson(row.tau4)}};
    if (report.source == MetricSource::kEmpirical) {
      j["original_cells"] = row.original_cells;
      j["synthetic_cells"] = row.synthetic_cells;
      j["matched_cells"] = row.matched_cells;
    }
    rows.push_back(std::move(j));
  }
  return {{"source", report.source == MetricSource::kEmpirical ? "empirical"
                                                               : "analytic"},
          {"m", report.m},
          {"num_cells", report.num_cells},
          {"rows", std::move(rows)}};
}

nlohmann::json LossReportToJson(const LossReport& report) {
  nlohmann::json j = {{"l1_empirical", report.l1_empirical},
                      {"l1_empirical_all_cells", report.l1_empirical_all_cells},
                      {"excluded_zero_cells", report.excluded_zero_cells},
                      {"m", report.m}};
  j["l1_analytic"] = report.l1_analytic.has_value()
                         ? nlohmann::json(*report.l1_analytic)
                         : nlohmann::json(nullptr);
  return j;
}

nlohmann::json TotalReportToJson(const TotalReport& report,
                                 std::span<const double> distances) {
  nlohmann::json coverage = nlohmann::json::array();
  for (double d : distances) {
    coverage.push_back({{"d", d},
                        {"analytic", report.Coverage(d)},
                        {"empirical", report.EmpiricalCoverage(d)}});
  }
  return {{"n", report.n},
          {"synthetic_totals", report.synthetic_totals},
          {"analytic_variance", report.analytic_variance},
          {"analytic_sd", std::sqrt(report.analytic_variance)},
          {"coverage", std::move(coverage)}};
}

nlohmann::json RiskUtilityPointToJson(const RiskUtilityPoint& point) {
  nlohmann::json j = {
      {"source",
       point.source == MetricSource::kEmpirical ? "empirical" : "analytic"},
      {"family", std::string(FamilyName(point.family))},
      {"sigma", point.sigma},
      {"l1", point.l1},
      {"utility", point.utility},
      {"log_utility", point.log_utility}};
  j["nu"] = std::isnan(point.nu) ? nlohmann::json(nullptr)
                                 : nlohmann::json(point.nu);
  j["risk"] = point.risk_defined ? nlohmann::json(point.risk)
                                 : nlohmann::json(nullptr);
  return j;
}

}  // namespace tabsynth
