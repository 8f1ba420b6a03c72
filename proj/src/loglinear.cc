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

#include "tabsynth/loglinear.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "tabsynth/special_functions.h"

namespace tabsynth {
namespace {

constexpr double kMaxEta = 700.0;

// Every subset of {0..n-1} with 1..order elements, smaller subsets first.
std::vector<std::vector<size_t>> InteractionSets(size_t n, int order) {
  std::vector<std::vector<size_t>> sets;
  std::vector<size_t> current;
  std::function<void(size_t, size_t)> extend = [&](size_t start, size_t size) {
    if (current.size() == size) {
      sets.push_back(current);
      return;
    }
    for (size_t v = start; v < n; ++v) {
      current.push_back(v);
      extend(v + 1, size);
      current.pop_back();
    }
  };
  for (size_t size = 1; size <= static_cast<size_t>(order) && size <= n;
       ++size) {
    extend(0, size);
  }
  return sets;
}

Eigen::VectorXd LinearPredictor(const Eigen::MatrixXd& design,
                                const Eigen::VectorXd& beta) {
  return (design * beta).cwiseMin(kMaxEta);
}

double Deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
  long double dev = 0.0L;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] > 0.0) {
      dev += y[i] * std::log(y[i] / mu[i]) - (y[i] - mu[i]);
    } else {
      dev += mu[i];
    }
  }
  return static_cast<double>(2.0L * dev);
}

// Solves A x = b for the symmetric positive semi-definite A, falling back to
// a rank-revealing solve when the Cholesky factorisation breaks down.
Eigen::VectorXd SolveNormal(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    Eigen::VectorXd x = ldlt.solve(b);
    if (x.allFinite()) return x;
  }
  return a.completeOrthogonalDecomposition().solve(b);
}

Eigen::MatrixXd WeightedCrossProduct(const Eigen::MatrixXd& design,
                                     const Eigen::VectorXd& weights) {
  Eigen::MatrixXd scaled = design;
  scaled.array().colwise() *= weights.array().sqrt();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(design.cols(), design.cols());
  a.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
  a.triangularView<Eigen::StrictlyUpper>() = a.transpose();
  return a;
}

}  // namespace

LogLinearModel DefaultSpecificUtilityModel() {
  return {{"ETHNICITY", "AGE", "LANGUAGE"}, 2};
}

Eigen::MatrixXd DesignMatrix(const TableSchema& schema, int order,
                             std::vector<std::string>* term_names) {
  const auto sets = InteractionSets(schema.num_variables(), order);
  // Column layout: per set, the non-reference level combinations with the
  // last variable varying fastest.
  struct Column {
    const std::vector<size_t>* set;
    std::vector<int32_t> levels;
  };
  std::vector<Column> columns;
  for (const auto& set : sets) {
    std::vector<int32_t> levels(set.size(), 1);
    while (true) {
      columns.push_back({&set, levels});
      bool done = true;
      for (size_t pos = set.size(); pos-- > 0;) {
        if (++levels[pos] < schema.num_categories(set[pos])) {
          done = false;
          break;
        }
        levels[pos] = 1;
      }
      if (done) break;
    }
  }

  if (term_names != nullptr) {
    term_names->assign(1, "(Intercept)");
    for (const Column& c : columns) {
      std::string name;
      for (size_t i = 0; i < c.set->size(); ++i) {
        const Variable& var = schema.variable((*c.set)[i]);
        absl::StrAppend(&name, i == 0 ? "" : ":", var.name, "=",
                        var.categories[c.levels[i]]);
      }
      term_names->push_back(std::move(name));
    }
  }

  Eigen::MatrixXd x(schema.num_cells(), 1 + columns.size());
  std::vector<int32_t> cats(schema.num_variables());
  for (int64_t cell = 0; cell < schema.num_cells(); ++cell) {
    schema.CategoriesOf(cell, cats);
    x(cell, 0) = 1.0;
    for (size_t j = 0; j < columns.size(); ++j) {
      bool on = true;
      for (size_t i = 0; i < columns[j].set->size() && on; ++i) {
        on = cats[(*columns[j].set)[i]] == columns[j].levels[i];
      }
      x(cell, 1 + j) = on ? 1.0 : 0.0;
    }
  }
  return x;
}

double PoissonLogLikelihood(const Eigen::MatrixXd& design,
                            const Eigen::VectorXd& y,
                            const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = design * beta;
  long double ll = 0.0L;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    ll += y[i] * eta[i] - std::exp(eta[i]) - LogGamma(y[i] + 1.0);
  }
  return static_cast<double>(ll);
}

Eigen::VectorXd PoissonScore(const Eigen::MatrixXd& design,
                             const Eigen::VectorXd& y,
                             const Eigen::VectorXd& beta) {
  const Eigen::VectorXd mu = (design * beta).array().exp().matrix();
  return design.transpose() * (y - mu);
}

absl::StatusOr<FitResult> FitLogLinear(const ContingencyTable& table,
                                       int order, const FitOptions& options) {
  if (order < 1) return absl::InvalidArgumentError("order must be >= 1");
  FitResult fit;
  const Eigen::MatrixXd x = DesignMatrix(table.schema(), order, &fit.terms);
  if (x.cols() > x.rows()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "model has ", x.cols(), " parameters for ", x.rows(), " cells"));
  }
  const Eigen::VectorXd y = table.counts().cast<double>();
  if (y.sum() <= 0.0) return absl::InvalidArgumentError("table is empty");

  // Start from mu = y + 0.1 as a working response, the usual GLM choice.
  Eigen::VectorXd mu = (y.array() + 0.1).matrix();
  Eigen::VectorXd eta = mu.array().log().matrix();
  double deviance = Deviance(y, mu);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    const Eigen::VectorXd z = eta + ((y - mu).array() / mu.array()).matrix();
    const Eigen::MatrixXd a = WeightedCrossProduct(x, mu);
    const Eigen::VectorXd b = x.transpose() * (mu.array() * z.array()).matrix();
    Eigen::VectorXd candidate = SolveNormal(a, b);

    Eigen::VectorXd eta_new = LinearPredictor(x, candidate);
    Eigen::VectorXd mu_new = eta_new.array().exp().matrix();
    double deviance_new = Deviance(y, mu_new);
    for (int halving = 0;
         iter > 1 && halving < 30 &&
         !(deviance_new <= deviance * (1.0 + 1e-12) + 1e-12);
         ++halving) {
      candidate = 0.5 * (candidate + beta);
      eta_new = LinearPredictor(x, candidate);
      mu_new = eta_new.array().exp().matrix();
      deviance_new = Deviance(y, mu_new);
    }

    const double change = std::fabs(deviance_new - deviance) /
                          (std::fabs(deviance_new) + 0.1);
    beta = std::move(candidate);
    eta = std::move(eta_new);
    mu = std::move(mu_new);
    deviance = deviance_new;
    fit.iterations = iter;

    const Eigen::VectorXd score = x.transpose() * (y - mu);
    fit.max_abs_score = score.cwiseAbs().maxCoeff();
    if (fit.max_abs_score < options.score_tolerance ||
        (iter > 1 && change < options.deviance_tolerance &&
         fit.max_abs_score < options.stalled_score_tolerance)) {
      fit.converged = true;
      break;
    }
  }

  fit.estimate = beta;
  fit.fitted = mu;
  fit.deviance = deviance;
  fit.log_likelihood = PoissonLogLikelihood(x, y, beta);

  const Eigen::MatrixXd info = WeightedCrossProduct(x, mu);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  Eigen::MatrixXd cov;
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    cov = ldlt.solve(Eigen::MatrixXd::Identity(x.cols(), x.cols()));
  } else {
    cov = info.completeOrthogonalDecomposition().pseudoInverse();
  }
  const Eigen::Index p = x.cols();
  fit.std_error.resize(p);
  fit.separated.assign(p, false);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double var = cov(j, j);
    fit.std_error[j] = var > 0.0 ? std::sqrt(var)
                                 : std::numeric_limits<double>::infinity();
    fit.separated[j] = !std::isfinite(fit.std_error[j]) ||
                       fit.std_error[j] > options.separation_std_error;
  }
  fit.lower = fit.estimate - 1.96 * fit.std_error;
  fit.upper = fit.estimate + 1.96 * fit.std_error;
  return fit;
}

absl::StatusOr<FitResult> FitLogLinear(const ContingencyTable& table,
                                       const LogLinearModel& model,
                                       const FitOptions& options) {
  if (model.variables.empty()) {
    return absl::InvalidArgumentError("model has no variables");
  }
  if (model.order < 1 ||
      model.order > static_cast<int>(model.variables.size())) {
    return absl::InvalidArgumentError(
        absl::StrCat("interaction order ", model.order, " outside 1..",
                     model.variables.size()));
  }
  absl::StatusOr<ContingencyTable> margin = Marginal(table, model.variables);
  if (!margin.ok()) return margin.status();
  return FitLogLinear(*margin, model.order, options);
}

OverlapValue IntervalOverlap(double original_lower, double original_upper,
                             double synthetic_lower, double synthetic_upper) {
  const double wo = original_upper - original_lower;
  const double ws = synthetic_upper - synthetic_lower;
  if (!(wo > 0.0) || !(ws > 0.0) || !std::isfinite(wo) || !std::isfinite(ws)) {
    return {0.0, false};
  }
  const double shared = std::min(original_upper, synthetic_upper) -
                        std::max(original_lower, synthetic_lower);
  return {std::max(0.0, 0.5 * (shared / wo + shared / ws)), true};
}

absl::StatusOr<OverlapReport> CiOverlap(const FitResult& original,
                                        std::span<const FitResult> synthetic) {
  OverlapReport report;
  report.terms = original.terms;
  std::vector<double> defined;
  for (size_t r = 0; r < synthetic.size(); ++r) {
    const FitResult& s = synthetic[r];
    if (s.terms != original.terms) {
      return absl::InvalidArgumentError(
          absl::StrCat("replicate ", r, " was fitted with different terms"));
    }
    std::vector<OverlapValue> row(original.terms.size());
    for (size_t t = 0; t < row.size(); ++t) {
      if (original.separated[t] || s.separated[t]) {
        row[t] = {0.0, false};
      } else {
        row[t] = IntervalOverlap(original.lower[t], original.upper[t],
                                 s.lower[t], s.upper[t]);
      }
      if (row[t].defined) {
        defined.push_back(row[t].value);
      } else {
        ++report.undefined;
      }
    }
    report.values.push_back(std::move(row));
  }
  if (!defined.empty()) {
    const size_t mid = defined.size() / 2;
    std::nth_element(defined.begin(), defined.begin() + mid, defined.end());
    double median = defined[mid];
    if (defined.size() % 2 == 0) {
      median = 0.5 * (median + *std::max_element(defined.begin(),
                                                 defined.begin() + mid));
    }
    report.median = median;
  } else {
    report.median = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

nlohmann::json FitResultToJson(const FitResult& fit) {
  nlohmann::json terms = nlohmann::json::array();
  for (size_t t = 0; t < fit.terms.size(); ++t) {
    terms.push_back({{"term", fit.terms[t]},
                     {"estimate", fit.estimate[t]},
                     {"se", fit.std_error[t]},
                     {"lower", fit.lower[t]},
                     {"upper", fit.upper[t]},
                     {"separated", static_cast<bool>(fit.separated[t])}});
  }
  return {{"converged", fit.converged},
          {"iterations", fit.iterations},
          {"deviance", fit.deviance},
          {"log_likelihood", fit.log_likelihood},
          {"max_abs_score", fit.max_abs_score},
          {"terms", std::move(terms)}};
}

nlohmann::json OverlapReportToJson(const OverlapReport& report) {
  nlohmann::json j = {{"terms", report.terms.size()},
                      {"replicates", report.values.size()},
                      {"undefined", report.undefined}};
  j["median"] = std::isnan(report.median) ? nlohmann::json(nullptr)
                                          : nlohmann::json(report.median);
  return j;
}

}  // namespace tabsynth
