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

#include "cli.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "json.hpp"
#include "tabsynth/calibration.h"
#include "tabsynth/csv.h"
#include "tabsynth/distributions.h"
#include "tabsynth/fixture.h"
#include "tabsynth/loglinear.h"
#include "tabsynth/mechanism.h"
#include "tabsynth/metrics.h"
#include "tabsynth/status_macros.h"
#include "tabsynth/synthesis.h"
#include "tabsynth/table.h"
#include "tabsynth/table_io.h"
#include "tabsynth/version.h"

namespace tabsynth::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Problems with the command line that only show up after parsing. Reported
// with exit code 1 like parse errors.
absl::Status UsageError(std::string message) {
  return absl::AbortedError(std::move(message));
}
bool IsUsageError(const absl::Status& status) {
  return status.code() == absl::StatusCode::kAborted;
}

absl::StatusOr<std::string> HashFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open '", path.string(), "'"));
  uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return std::string(hex);
}

absl::Status WriteFile(const fs::path& path,
                       const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    return absl::PermissionDeniedError(
        absl::StrCat("cannot write '", path.string(), "'"));
  }
  body(out);
  out.flush();
  if (!out) {
    return absl::DataLossError(absl::StrCat("error writing '", path.string(), "'"));
  }
  return absl::OkStatus();
}

absl::Status EnsureDirectory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    return absl::PermissionDeniedError(
        absl::StrCat("cannot create '", dir.string(), "': ", ec.message()));
  }
  return absl::OkStatus();
}

absl::Status ReadJsonFile(const fs::path& path, json* out) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open '", path.string(), "'"));
  try {
    *out = json::parse(in);
  } catch (const json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("'", path.string(), "' is not valid JSON: ", e.what()));
  }
  return absl::OkStatus();
}

// Everything needed to repeat a run: the command line, the resolved flag
// values and fingerprints of every input file.
struct RunManifest {
  std::string subcommand;
  std::vector<std::string> argv;
  json flags = json::object();
  json inputs = json::array();
  std::optional<uint64_t> seed;
  json warnings = json::object();

  absl::Status AddInput(const fs::path& path) {
    ASSIGN_OR_RETURN(std::string hash, HashFile(path));
    inputs.push_back({{"path", path.string()}, {"fnv1a64", hash}});
    return absl::OkStatus();
  }

  void RecordFlags(const CLI::App& app) {
    for (const CLI::Option* opt : app.get_options()) {
      const std::string name = opt->get_name();
      if (name == "--help" || name.empty()) continue;
      if (opt->count() > 0) {
        const auto& results = opt->results();
        flags[name] = results.size() == 1 ? json(results.front()) : json(results);
      } else if (!opt->get_default_str().empty()) {
        flags[name] = opt->get_default_str();
      }
    }
  }

  absl::Status Write(const fs::path& dir, double seconds) const {
    json j = {{"subcommand", subcommand},
              {"argv", argv},
              {"flags", flags},
              {"inputs", inputs},
              {"version", kVersion},
              {"duration_seconds", seconds},
              {"warnings", warnings}};
    j["seed"] = seed ? json(*seed) : json(nullptr);
    RETURN_IF_ERROR(EnsureDirectory(dir));
    return WriteFile(dir / absl::StrCat(subcommand, ".manifest.json"),
                     [&](std::ostream& out) { out << j.dump(2) << '\n'; });
  }
};

absl::StatusOr<std::vector<int64_t>> ParseSizes(const std::string& text) {
  std::vector<int64_t> sizes;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    const size_t dash = part.find('-', 1);
    if (dash == std::string::npos) {
      ASSIGN_OR_RETURN(int64_t k, ParseCount(part));
      sizes.push_back(k);
      continue;
    }
    ASSIGN_OR_RETURN(int64_t lo, ParseCount(part.substr(0, dash)));
    ASSIGN_OR_RETURN(int64_t hi, ParseCount(part.substr(dash + 1)));
    if (hi < lo || hi - lo > 1000000) {
      return UsageError(absl::StrCat("bad size range '", part, "'"));
    }
    for (int64_t k = lo; k <= hi; ++k) sizes.push_back(k);
  }
  if (sizes.empty()) return UsageError("empty size list");
  return sizes;
}

struct MechanismFlags {
  std::string family = "gaf";
  double sigma = 1.0;
  double nu = 0.0;
  std::string zero_policy = "keep";
  CLI::Option* nu_option = nullptr;

  void Add(CLI::App* app, std::string default_policy = "keep") {
    zero_policy = std::move(default_policy);
    app->add_option("--family", family, "poisson, nbi or gaf")
        ->capture_default_str();
    app->add_option("--sigma", sigma, "dispersion parameter")
        ->capture_default_str();
    nu_option = app->add_option("--nu", nu, "GAF variance exponent");
    app->add_option("--zero-policy", zero_policy,
                    "keep, alpha=<a> or bernoulli=<p>")
        ->capture_default_str();
  }

  std::optional<double> MaybeNu() const {
    if (nu_option != nullptr && nu_option->count() > 0) return nu;
    return std::nullopt;
  }

  absl::StatusOr<Mechanism> Build() const {
    ASSIGN_OR_RETURN(Family f, ParseFamily(family));
    if (f == Family::kGaf && !MaybeNu()) return UsageError("--nu is required for gaf");
    return Mechanism::Create(f, sigma, MaybeNu());
  }

  absl::StatusOr<ZeroPolicy> Policy() const {
    return ParseZeroPolicy(zero_policy);
  }
};

// A histogram from --histogram, or from --table with --schema.
struct HistogramFlags {
  std::string histogram;
  std::string table;
  std::string schema;

  void Add(CLI::App* app) {
    app->add_option("--histogram", histogram,
                    "cell-size histogram CSV (size,frequency)");
    app->add_option("--table", table, "aggregated table CSV");
    app->add_option("--schema", schema, "schema JSON for --table");
  }

  bool present() const { return !histogram.empty() || !table.empty(); }

  absl::StatusOr<CellHistogram> Load(RunManifest& manifest) const {
    if (!histogram.empty()) {
      RETURN_IF_ERROR(manifest.AddInput(histogram));
      return LoadHistogram(histogram);
    }
    if (table.empty() || schema.empty()) {
      return UsageError("give --histogram, or --table with --schema");
    }
    RETURN_IF_ERROR(manifest.AddInput(schema));
    RETURN_IF_ERROR(manifest.AddInput(table));
    ASSIGN_OR_RETURN(TableSchema s, LoadSchema(schema));
    ASSIGN_OR_RETURN(ContingencyTable t, LoadAggregated(table, s));
    return Histogram(t);
  }
};

absl::Status WriteTableOutputs(const fs::path& dir,
                               const ContingencyTable& table) {
  RETURN_IF_ERROR(EnsureDirectory(dir));
  RETURN_IF_ERROR(WriteFile(dir / "schema.json", [&](std::ostream& out) {
    out << SchemaToJson(table.schema()).dump(2) << '\n';
  }));
  RETURN_IF_ERROR(WriteFile(dir / "table.csv", [&](std::ostream& out) {
    WriteAggregated(out, table);
  }));
  return WriteFile(dir / "histogram.csv", [&](std::ostream& out) {
    WriteHistogram(out, Histogram(table));
  });
}

void PrintTableSummary(std::ostream& out, const ContingencyTable& table) {
  const CellHistogram h = Histogram(table);
  out << "cells " << table.num_cells() << ", total " << table.total()
      << ", nonzero " << table.num_cells() - h.frequency(0) << '\n';
}

// ---- ingest ---------------------------------------------------------------

struct IngestFlags {
  std::string schema, microdata, aggregated, out = ".";
};

absl::Status RunIngest(const IngestFlags& f, RunManifest& manifest,
                       std::ostream& out) {
  if (f.microdata.empty() == f.aggregated.empty()) {
    return UsageError("give exactly one of --microdata and --aggregated");
  }
  std::optional<TableSchema> schema;
  if (!f.schema.empty()) {
    RETURN_IF_ERROR(manifest.AddInput(f.schema));
    ASSIGN_OR_RETURN(TableSchema s, LoadSchema(f.schema));
    schema = std::move(s);
  }
  const std::string& input = f.microdata.empty() ? f.aggregated : f.microdata;
  RETURN_IF_ERROR(manifest.AddInput(input));
  std::ifstream in(input, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open '", input, "'"));

  absl::StatusOr<ContingencyTable> table = absl::UnknownError("unset");
  if (!f.microdata.empty()) {
    table = IngestMicrodata(in, schema ? &*schema : nullptr);
  } else {
    if (!schema) return UsageError("--aggregated needs --schema");
    table = IngestAggregated(in, *schema);
  }
  if (!table.ok()) {
    return absl::Status(table.status().code(),
                        absl::StrCat(input, ": ", table.status().message()));
  }
  RETURN_IF_ERROR(WriteTableOutputs(f.out, *table));
  PrintTableSummary(out, *table);
  return absl::OkStatus();
}

// ---- genfixture -----------------------------------------------------------

struct GenFixtureFlags {
  std::string schema, histogram, out = ".";
  uint64_t seed = 0;
  double tail_mean = 100.0;
};

absl::Status RunGenFixture(const GenFixtureFlags& f, RunManifest& manifest,
                           std::ostream& out) {
  manifest.seed = f.seed;
  RETURN_IF_ERROR(manifest.AddInput(f.schema));
  RETURN_IF_ERROR(manifest.AddInput(f.histogram));
  ASSIGN_OR_RETURN(TableSchema schema, LoadSchema(f.schema));
  std::ifstream in(f.histogram, std::ios::binary);
  if (!in) {
    return absl::NotFoundError(absl::StrCat("cannot open '", f.histogram, "'"));
  }
  ASSIGN_OR_RETURN(TargetHistogram target, ReadTargetHistogram(in, f.tail_mean));
  ASSIGN_OR_RETURN(ContingencyTable table,
                   GenerateFixture(schema, target, f.seed));
  RETURN_IF_ERROR(WriteTableOutputs(f.out, table));
  manifest.warnings["target"] = TargetHistogramToJson(target);
  PrintTableSummary(out, table);
  return absl::OkStatus();
}

// ---- synth ----------------------------------------------------------------

struct SynthFlags {
  std::string schema, table, out = ".";
  MechanismFlags mechanism;
  int m = 10;
  uint64_t seed = 0;
  int threads = 0;
  bool long_csv = true;
};

std::string ReplicateFileName(int r) {
  return absl::StrCat("replicate_", r + 1, ".csv");
}

absl::Status RunSynth(const SynthFlags& f, RunManifest& manifest,
                      std::ostream& out) {
  manifest.seed = f.seed;
  RETURN_IF_ERROR(manifest.AddInput(f.schema));
  RETURN_IF_ERROR(manifest.AddInput(f.table));
  ASSIGN_OR_RETURN(TableSchema schema, LoadSchema(f.schema));
  ASSIGN_OR_RETURN(ContingencyTable original, LoadAggregated(f.table, schema));

  MechanismConfig config;
  ASSIGN_OR_RETURN(config.family, ParseFamily(f.mechanism.family));
  if (config.family == Family::kGaf && !f.mechanism.MaybeNu()) {
    return UsageError("--nu is required for gaf");
  }
  config.sigma = f.mechanism.sigma;
  config.nu = f.mechanism.MaybeNu();
  ASSIGN_OR_RETURN(config.zero_policy, f.mechanism.Policy());
  config.m = f.m;
  config.master_seed = f.seed;

  ASSIGN_OR_RETURN(SyntheticEnsemble ensemble,
                   Synthesize(original, config, {.threads = f.threads}));

  const fs::path dir = f.out;
  RETURN_IF_ERROR(EnsureDirectory(dir));
  json files = json::array();
  for (int r = 0; r < ensemble.m(); ++r) {
    const std::string name = ReplicateFileName(r);
    RETURN_IF_ERROR(WriteFile(dir / name, [&](std::ostream& os) {
      WriteAggregatedCounts(os, schema, ensemble.replicates.col(r));
    }));
    files.push_back(name);
  }
  if (f.long_csv) {
    RETURN_IF_ERROR(WriteFile(dir / "synthetic_long.csv", [&](std::ostream& os) {
      std::vector<std::string> row;
      for (const Variable& v : schema.variables()) row.push_back(v.name);
      row.push_back("replicate");
      row.push_back("count");
      WriteCsvRow(os, row);
      std::vector<int32_t> cats(schema.num_variables());
      std::string line;
      for (int r = 0; r < ensemble.m(); ++r) {
        const auto col = ensemble.replicates.col(r);
        for (int64_t cell = 0; cell < col.size(); ++cell) {
          if (col[cell] == 0) continue;
          schema.CategoriesOf(cell, cats);
          line.clear();
          for (size_t v = 0; v < cats.size(); ++v) {
            absl::StrAppend(&line,
                            CsvEscape(schema.variable(v).categories[cats[v]]),
                            ",");
          }
          absl::StrAppend(&line, r + 1, ",", col[cell], "\n");
          os << line;
        }
      }
    }));
  }

  json sidecar = {
      {"config", MechanismConfigToJson(config)},
      {"original_fingerprint", ensemble.original_fingerprint},
      {"ensemble_fingerprint", Fingerprint(ensemble.replicates)},
      {"num_cells", ensemble.num_cells()},
      {"m", ensemble.m()},
      {"replicates", files},
      {"stats", SynthesisStatsToJson(ensemble.stats)},
      {"version", kVersion}};
  RETURN_IF_ERROR(WriteFile(dir / "synth.json", [&](std::ostream& os) {
    os << sidecar.dump(2) << '\n';
  }));
  manifest.warnings = SynthesisStatsToJson(ensemble.stats);

  const SynthesisStats& s = ensemble.stats;
  out << "synthesized " << ensemble.m() << " replicates of "
      << ensemble.num_cells() << " cells\n";
  if (s.clamped_draws > 0) {
    out << "warning: " << s.clamped_draws
        << " draws exceeded the int64 range and were clamped\n";
  }
  if (s.zero_cells_drawn > 0) {
    out << "zero cells: " << s.zero_cells_converted << " of "
        << s.zero_cells_drawn << " draws became nonzero (max "
        << s.max_draw_from_zero << ")\n";
  }
  return absl::OkStatus();
}

// ---- metrics --------------------------------------------------------------

struct MetricsFlags {
  std::string schema, table, synth, out = ".";
  std::string sizes = "0-10";
  std::vector<double> distances;
  std::vector<std::string> model_vars;
  int order = 2;
  bool fit = true;
  CLI::Option* model_vars_option = nullptr;
};

absl::StatusOr<SyntheticEnsemble> LoadEnsemble(const fs::path& dir,
                                               const TableSchema& schema,
                                               RunManifest& manifest) {
  const fs::path sidecar_path = dir / "synth.json";
  RETURN_IF_ERROR(manifest.AddInput(sidecar_path));
  json sidecar;
  RETURN_IF_ERROR(ReadJsonFile(sidecar_path, &sidecar));
  SyntheticEnsemble ensemble;
  try {
    ASSIGN_OR_RETURN(ensemble.config,
                     MechanismConfigFromJson(sidecar.at("config")));
    ensemble.original_fingerprint =
        sidecar.at("original_fingerprint").get<uint64_t>();
    const auto files = sidecar.at("replicates").get<std::vector<std::string>>();
    if (files.empty()) {
      return absl::InvalidArgumentError("synth.json lists no replicates");
    }
    ensemble.replicates.resize(schema.num_cells(),
                               static_cast<Eigen::Index>(files.size()));
    for (size_t r = 0; r < files.size(); ++r) {
      RETURN_IF_ERROR(manifest.AddInput(dir / files[r]));
      ASSIGN_OR_RETURN(Counts counts, LoadAggregatedCounts(dir / files[r], schema));
      ensemble.replicates.col(static_cast<Eigen::Index>(r)) = counts;
    }
  } catch (const json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed synth.json: ", e.what()));
  }
  return ensemble;
}

void WriteTauCsv(std::ostream& out, const TauReport& empirical,
                 const TauReport& analytic) {
  out << "k,source,tau1,tau1_se,tau2,tau2_se,tau3,tau3_se,tau4,tau4_se\n";
  auto cell = [&](const TauValue& v) {
    if (!v.defined) return std::string(",");
    return absl::StrCat(FormatDouble(v.value), ",", FormatDouble(v.std_error));
  };
  for (const TauReport* report : {&empirical, &analytic}) {
    const char* source =
        report->source == MetricSource::kEmpirical ? "empirical" : "analytic";
    for (const TauRow& row : report->rows) {
      out << row.k << ',' << source << ',' << cell(row.tau1) << ','
          << cell(row.tau2) << ',' << cell(row.tau3) << ',' << cell(row.tau4)
          << '\n';
    }
  }
}

void WriteConditionalCsv(std::ostream& out, const char* given_name,
                         const char* value_name,
                         const std::vector<ConditionalDistribution>& dists) {
  out << given_name << ',' << value_name << ",frequency,proportion\n";
  for (const ConditionalDistribution& d : dists) {
    for (const auto& [value, freq] : d.frequencies) {
      out << d.given << ',' << value << ',' << freq << ','
          << FormatDouble(static_cast<double>(freq) /
                          static_cast<double>(d.total))
          << '\n';
    }
  }
}

void WriteRiskUtilityCsv(std::ostream& out,
                         const std::vector<RiskUtilityPoint>& points) {
  out << "source,family,sigma,nu,risk,utility,log_utility,L1_raw\n";
  for (const RiskUtilityPoint& p : points) {
    out << (p.source == MetricSource::kEmpirical ? "empirical" : "analytic")
        << ',' << FamilyName(p.family) << ',' << FormatDouble(p.sigma) << ','
        << (std::isnan(p.nu) ? "" : FormatDouble(p.nu)) << ','
        << (p.risk_defined ? FormatDouble(p.risk) : "") << ','
        << FormatDouble(p.utility) << ',' << FormatDouble(p.log_utility) << ','
        << FormatDouble(p.l1) << '\n';
  }
}

absl::Status RunMetrics(const MetricsFlags& f, RunManifest& manifest,
                        std::ostream& out) {
  RETURN_IF_ERROR(manifest.AddInput(f.schema));
  RETURN_IF_ERROR(manifest.AddInput(f.table));
  ASSIGN_OR_RETURN(TableSchema schema, LoadSchema(f.schema));
  ASSIGN_OR_RETURN(ContingencyTable original, LoadAggregated(f.table, schema));
  ASSIGN_OR_RETURN(SyntheticEnsemble ensemble,
                   LoadEnsemble(f.synth, schema, manifest));
  if (ensemble.original_fingerprint != Fingerprint(original)) {
    return absl::FailedPreconditionError(
        "the ensemble was not synthesized from this table "
        "(fingerprint mismatch)");
  }
  ASSIGN_OR_RETURN(std::vector<int64_t> sizes, ParseSizes(f.sizes));
  ASSIGN_OR_RETURN(Mechanism mechanism, ensemble.config.mechanism());
  const ZeroPolicy& policy = ensemble.config.zero_policy;
  const ReplicateMatrix& reps = ensemble.replicates;
  const CellHistogram histogram = Histogram(original);
  const int m = static_cast<int>(reps.cols());

  ASSIGN_OR_RETURN(TauReport tau_emp, TauEmpirical(original, reps, sizes));
  const TauReport tau_ana =
      TauAnalyticReport(sizes, mechanism, histogram, policy, m);
  ASSIGN_OR_RETURN(LossReport loss, LossL1(original, reps, &mechanism));
  const TotalReport total = MakeTotalReport(original, reps, mechanism, policy);
  std::vector<double> distances = f.distances;
  if (distances.empty()) {
    const double s = std::sqrt(total.analytic_variance);
    distances = {s, 2.0 * s};
  }
  ASSIGN_OR_RETURN(RiskUtilityPoint ru_emp,
                   RiskUtilityEmpirical(original, reps, mechanism));
  const RiskUtilityPoint ru_ana =
      RiskUtilityAnalytic(histogram, mechanism, policy, m);

  json report = {{"config", MechanismConfigToJson(ensemble.config)},
                 {"m", m},
                 {"num_cells", original.num_cells()},
                 {"tau_empirical", TauReportToJson(tau_emp)},
                 {"tau_analytic", TauReportToJson(tau_ana)},
                 {"loss", LossReportToJson(loss)},
                 {"total", TotalReportToJson(total, distances)},
                 {"risk_utility",
                  {RiskUtilityPointToJson(ru_emp), RiskUtilityPointToJson(ru_ana)}},
                 {"version", kVersion}};

  const fs::path dir = f.out;
  RETURN_IF_ERROR(EnsureDirectory(dir));

  // Specific utility.
  std::optional<OverlapReport> overlap;
  if (f.fit) {
    LogLinearModel model = DefaultSpecificUtilityModel();
    model.order = f.order;
    bool explicit_vars = f.model_vars_option != nullptr &&
                         f.model_vars_option->count() > 0;
    if (explicit_vars) model.variables = f.model_vars;
    bool available = true;
    for (const std::string& v : model.variables) {
      available = available && schema.VariableIndex(v).has_value();
    }
    if (!available && !explicit_vars) {
      manifest.warnings["specific_utility"] =
          "default model variables not in schema; fit skipped";
      report["specific_utility"] = nullptr;
    } else {
      ASSIGN_OR_RETURN(FitResult original_fit, FitLogLinear(original, model));
      std::vector<FitResult> fits;
      int64_t unconverged = original_fit.converged ? 0 : 1;
      for (int r = 0; r < m; ++r) {
        ASSIGN_OR_RETURN(ContingencyTable syn,
                         ContingencyTable::Create(schema, reps.col(r)));
        ASSIGN_OR_RETURN(FitResult fit, FitLogLinear(syn, model));
        if (!fit.converged) ++unconverged;
        fits.push_back(std::move(fit));
      }
      ASSIGN_OR_RETURN(OverlapReport o, CiOverlap(original_fit, fits));
      report["specific_utility"] = {
          {"variables", model.variables},
          {"order", model.order},
          {"original_fit", FitResultToJson(original_fit)},
          {"overlap", OverlapReportToJson(o)},
          {"unconverged_fits", unconverged}};
      if (unconverged > 0) manifest.warnings["unconverged_fits"] = unconverged;
      overlap = std::move(o);
    }
  }

  RETURN_IF_ERROR(WriteFile(dir / "report.json", [&](std::ostream& os) {
    os << report.dump(2) << '\n';
  }));
  RETURN_IF_ERROR(WriteFile(dir / "tau_by_k.csv", [&](std::ostream& os) {
    WriteTauCsv(os, tau_emp, tau_ana);
  }));
  RETURN_IF_ERROR(WriteFile(dir / "synthetic_given_original.csv",
                            [&](std::ostream& os) {
    WriteConditionalCsv(os, "original", "synthetic",
                        SyntheticGivenOriginal(original, reps, sizes));
  }));
  RETURN_IF_ERROR(WriteFile(dir / "original_given_synthetic.csv",
                            [&](std::ostream& os) {
    WriteConditionalCsv(os, "synthetic", "original",
                        OriginalGivenSynthetic(original, reps, sizes));
  }));
  RETURN_IF_ERROR(WriteFile(dir / "risk_utility.csv", [&](std::ostream& os) {
    WriteRiskUtilityCsv(os, {ru_emp, ru_ana});
  }));
  if (overlap) {
    RETURN_IF_ERROR(WriteFile(dir / "overlap.csv", [&](std::ostream& os) {
      os << "replicate,term,overlap\n";
      for (size_t r = 0; r < overlap->values.size(); ++r) {
        for (size_t t = 0; t < overlap->terms.size(); ++t) {
          const OverlapValue& v = overlap->values[r][t];
          os << r + 1 << ',' << CsvEscape(overlap->terms[t]) << ','
             << (v.defined ? FormatDouble(v.value) : "") << '\n';
        }
      }
    }));
  }

  out << "L1 empirical " << FormatDouble(loss.l1_empirical) << ", analytic "
      << FormatDouble(*loss.l1_analytic) << "; risk tau4(1) "
      << (ru_emp.risk_defined ? FormatDouble(ru_emp.risk) : "undefined")
      << '\n';
  return absl::OkStatus();
}

// ---- apriori --------------------------------------------------------------

struct AprioriFlags {
  HistogramFlags input;
  MechanismFlags mechanism;
  std::string metric = "tau3";
  int64_t k = 1;
  int m = 1;
  double d = 0.0;
  std::string out = ".";
};

absl::Status RunApriori(const AprioriFlags& f, RunManifest& manifest,
                        std::ostream& out) {
  ASSIGN_OR_RETURN(Mechanism mechanism, f.mechanism.Build());
  ASSIGN_OR_RETURN(ZeroPolicy policy, f.mechanism.Policy());
  if (f.k < 0) return UsageError("--k must be non-negative");
  if (f.m < 1) return UsageError("--m must be >= 1");

  int which = 0;
  if (f.metric == "tau1") which = 1;
  if (f.metric == "tau2") which = 2;
  if (f.metric == "tau3") which = 3;
  if (f.metric == "tau4") which = 4;
  const bool needs_histogram = which != 3;
  if (which == 0 && f.metric != "l1" && f.metric != "coverage" &&
      f.metric != "variance") {
    return UsageError(absl::StrCat("unknown metric '", f.metric, "'"));
  }
  std::optional<CellHistogram> histogram;
  if (needs_histogram || f.input.present()) {
    if (!f.input.present()) {
      return UsageError(absl::StrCat(f.metric, " needs --histogram or --table"));
    }
    ASSIGN_OR_RETURN(CellHistogram h, f.input.Load(manifest));
    histogram = std::move(h);
  }

  double value = 0.0;
  if (which == 3) {
    value = TauAnalytic(3, f.k, mechanism,
                        histogram ? *histogram
                                  : *CellHistogram::FromFrequencies({{f.k, 1}}),
                        policy)
                ->value;
  } else if (which != 0) {
    ASSIGN_OR_RETURN(TauValue tau,
                     TauAnalytic(which, f.k, mechanism, *histogram, policy));
    if (!tau.defined) {
      return absl::FailedPreconditionError(
          absl::StrCat(f.metric, "(", f.k, ") is undefined: tau1 is zero"));
    }
    value = tau.value;
  } else if (f.metric == "l1") {
    value = L1Analytic(*histogram, mechanism, f.m);
  } else if (f.metric == "variance") {
    value = AnalyticTotalVariance(*histogram, mechanism, policy);
  } else {
    value = TotalCoverage(AnalyticTotalVariance(*histogram, mechanism, policy),
                          f.d);
  }
  out << FormatDouble(value) << '\n';
  return absl::OkStatus();
}

// ---- calibrate ------------------------------------------------------------

struct CalibrateFlags {
  HistogramFlags input;
  MechanismFlags mechanism;
  std::string metric = "tau3";
  std::string free = "sigma";
  double target = 0.0;
  int64_t k = 1;
  int m = 1;
  double d = 0.0;
  double tolerance = 1e-3;
  CLI::Option* lower_option = nullptr;
  CLI::Option* upper_option = nullptr;
  double lower = 0.0, upper = 0.0;
  std::string out = ".";
};

absl::Status RunCalibrate(const CalibrateFlags& f, RunManifest& manifest,
                          std::ostream& out) {
  CalibrationTarget target;
  ASSIGN_OR_RETURN(target.metric, ParseCalibrationMetric(f.metric));
  ASSIGN_OR_RETURN(target.free, ParseFreeParameter(f.free));
  ASSIGN_OR_RETURN(target.family, ParseFamily(f.mechanism.family));
  ASSIGN_OR_RETURN(target.zero_policy, f.mechanism.Policy());
  target.k = f.k;
  target.m = f.m;
  target.d = f.d;
  target.target = f.target;
  target.tolerance = f.tolerance;
  if (target.free == FreeParameter::kSigma) {
    if (target.family == Family::kGaf && !f.mechanism.MaybeNu()) {
      return UsageError("calibrating sigma for gaf needs a fixed --nu");
    }
    target.fixed = f.mechanism.nu;
  } else {
    target.fixed = f.mechanism.sigma;
  }
  std::tie(target.lower, target.upper) = DefaultBounds(target.free);
  if (f.lower_option->count() > 0) target.lower = f.lower;
  if (f.upper_option->count() > 0) target.upper = f.upper;
  if (absl::Status s = target.Validate(); !s.ok()) return UsageError(std::string(s.message()));

  CellHistogram histogram = *CellHistogram::FromFrequencies({{f.k, 1}});
  if (target.metric != CalibrationMetric::kTau3 || f.input.present()) {
    if (!f.input.present()) {
      return UsageError(absl::StrCat(f.metric, " needs --histogram or --table"));
    }
    ASSIGN_OR_RETURN(histogram, f.input.Load(manifest));
  }
  ASSIGN_OR_RETURN(CalibrationResult result, Calibrate(histogram, target));
  if (!result.monotone) manifest.warnings["non_monotone"] = true;
  json j = CalibrationResultToJson(result);
  j["parameter"] = f.free;
  j["metric"] = f.metric;
  j["target"] = f.target;
  out << j.dump(2) << '\n';
  return absl::OkStatus();
}

// ---- sweep ----------------------------------------------------------------

struct SweepFlags {
  HistogramFlags input;
  std::vector<std::string> families = {"gaf", "nbi"};
  std::vector<double> sigmas = {0.5, 1.0, 2.0};
  std::vector<double> nus = {0.0, -0.25, -0.5};
  std::string sizes = "1";
  int m = 10;
  std::string zero_policy = "alpha=0.01";
  std::string out = ".";
};

absl::Status RunSweep(const SweepFlags& f, RunManifest& manifest,
                      std::ostream& out) {
  SweepGrid grid;
  grid.families.clear();
  for (const std::string& name : f.families) {
    ASSIGN_OR_RETURN(Family family, ParseFamily(name));
    grid.families.push_back(family);
  }
  grid.sigmas = f.sigmas;
  grid.nus = f.nus;
  grid.m = f.m;
  ASSIGN_OR_RETURN(grid.tau_sizes, ParseSizes(f.sizes));
  ASSIGN_OR_RETURN(grid.zero_policy, ParseZeroPolicy(f.zero_policy));
  ASSIGN_OR_RETURN(CellHistogram histogram, f.input.Load(manifest));
  ASSIGN_OR_RETURN(std::vector<SweepRow> rows, Sweep(histogram, grid));

  const fs::path dir = f.out;
  RETURN_IF_ERROR(EnsureDirectory(dir));
  RETURN_IF_ERROR(WriteFile(dir / "sweep.csv", [&](std::ostream& os) {
    WriteSweepCsv(os, rows);
  }));
  json j = json::array();
  for (const SweepRow& row : rows) {
    TauReport tau;
    tau.source = MetricSource::kAnalytic;
    tau.m = grid.m;
    tau.num_cells = histogram.num_cells();
    tau.rows = row.tau;
    j.push_back({{"point", RiskUtilityPointToJson(row.point)},
                 {"tau", TauReportToJson(tau)}});
  }
  RETURN_IF_ERROR(WriteFile(dir / "sweep.json", [&](std::ostream& os) {
    os << j.dump(2) << '\n';
  }));
  out << rows.size() << " sweep rows\n";
  return absl::OkStatus();
}

// ---- dist pmf -------------------------------------------------------------

struct DistFlags {
  MechanismFlags mechanism;
  double mu = 1.0;
  double tail_eps = kDefaultTailEps;
  std::string out = ".";
};

absl::Status RunDistPmf(const DistFlags& f, RunManifest&, std::ostream& out) {
  ASSIGN_OR_RETURN(Family family, ParseFamily(f.mechanism.family));
  if (!(f.mu > 0.0)) return UsageError("--mu must be positive");
  if (family != Family::kGaf) {
    // Count families: walk the pmf until the remaining mass is negligible.
    ASSIGN_OR_RETURN(Mechanism mech,
                     Mechanism::Create(family, f.mechanism.sigma, std::nullopt));
    out << "y,pmf\n";
    long double cumulative = 0.0L;
    for (int64_t y = 0; cumulative < 1.0L - f.tail_eps / 2 && y < 100000000;
         ++y) {
      const double p = mech.Pmf(y, f.mu);
      cumulative += p;
      out << y << ',' << FormatDouble(p) << '\n';
    }
    return absl::OkStatus();
  }
  if (!f.mechanism.MaybeNu()) return UsageError("--nu is required for gaf");
  ASSIGN_OR_RETURN(GafParams params,
                   GafParams::Create(f.mu, f.mechanism.sigma, f.mechanism.nu));
  absl::StatusOr<Pmf> pmf = GafPmf(params, {.tail_eps = f.tail_eps});
  if (!pmf.ok()) return pmf.status();
  out << "y,pmf\n";
  for (int64_t y = pmf->offset(); y <= pmf->last(); ++y) {
    out << y << ',' << FormatDouble(pmf->at(y)) << '\n';
  }
  return absl::OkStatus();
}

}  // namespace

int Run(std::span<const std::string> args, std::ostream& out,
        std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  CLI::App app{"tabsynth: synthetic contingency tables by count noise",
               "tabsynth"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  IngestFlags ingest;
  CLI::App* ingest_cmd = app.add_subcommand("ingest", "load microdata or an aggregated table");
  ingest_cmd->add_option("--schema", ingest.schema, "schema JSON");
  ingest_cmd->add_option("--microdata", ingest.microdata, "one row per individual");
  ingest_cmd->add_option("--aggregated", ingest.aggregated, "variables plus count");
  ingest_cmd->add_option("--out", ingest.out, "output directory")->capture_default_str();

  GenFixtureFlags gen;
  CLI::App* gen_cmd = app.add_subcommand("genfixture", "generate a table with a target cell-size histogram");
  gen_cmd->add_option("--schema", gen.schema, "schema JSON")->required();
  gen_cmd->add_option("--histogram", gen.histogram, "target histogram CSV")->required();
  gen_cmd->add_option("--seed", gen.seed, "master seed")->required();
  gen_cmd->add_option("--tail-mean", gen.tail_mean, "mean size in the N+ bucket")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "output directory")->capture_default_str();

  SynthFlags synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "synthesize m replicates");
  synth_cmd->add_option("--schema", synth.schema, "schema JSON")->required();
  synth_cmd->add_option("--table", synth.table, "aggregated original table")->required();
  synth.mechanism.Add(synth_cmd);
  synth_cmd->add_option("--m", synth.m, "number of replicates")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "master seed")->required();
  synth_cmd->add_option("--threads", synth.threads, "worker threads, 0 = all cores")->capture_default_str();
  synth_cmd->add_flag("!--no-long", synth.long_csv, "skip synthetic_long.csv");
  synth_cmd->add_option("--out", synth.out, "output directory")->capture_default_str();

  MetricsFlags metrics;
  CLI::App* metrics_cmd = app.add_subcommand("metrics", "risk and utility of a synthesized ensemble");
  metrics_cmd->add_option("--schema", metrics.schema, "schema JSON")->required();
  metrics_cmd->add_option("--table", metrics.table, "aggregated original table")->required();
  metrics_cmd->add_option("--synth", metrics.synth, "directory written by synth")->required();
  metrics_cmd->add_option("--sizes", metrics.sizes, "cell sizes, e.g. 0-10 or 1,2,5")->capture_default_str();
  metrics_cmd->add_option("--distances", metrics.distances, "grand-total distances d (default: 1 and 2 sd)");
  metrics.model_vars_option = metrics_cmd->add_option("--model-vars", metrics.model_vars, "log-linear model variables")->delimiter(',');
  metrics_cmd->add_option("--order", metrics.order, "highest interaction order")->capture_default_str();
  metrics_cmd->add_flag("!--no-fit", metrics.fit, "skip the log-linear fits");
  metrics_cmd->add_option("--out", metrics.out, "output directory")->capture_default_str();

  AprioriFlags apriori;
  CLI::App* apriori_cmd = app.add_subcommand("apriori", "analytic metric from the histogram alone");
  apriori.input.Add(apriori_cmd);
  apriori.mechanism.Add(apriori_cmd);
  apriori_cmd->add_option("--metric", apriori.metric, "tau1..tau4, l1, coverage or variance")->capture_default_str();
  apriori_cmd->add_option("--k", apriori.k, "cell size")->capture_default_str();
  apriori_cmd->add_option("--m", apriori.m, "replicates (l1)")->capture_default_str();
  apriori_cmd->add_option("--d", apriori.d, "distance (coverage)")->capture_default_str();
  apriori_cmd->add_option("--out", apriori.out, "manifest directory")->capture_default_str();

  CalibrateFlags calibrate;
  CLI::App* calibrate_cmd = app.add_subcommand("calibrate", "solve for sigma or nu hitting a metric target");
  calibrate.input.Add(calibrate_cmd);
  calibrate.mechanism.Add(calibrate_cmd);
  calibrate_cmd->add_option("--metric", calibrate.metric, "tau3, tau4, l1 or coverage")->capture_default_str();
  calibrate_cmd->add_option("--free", calibrate.free, "sigma or nu")->capture_default_str();
  calibrate_cmd->add_option("--target", calibrate.target, "target metric value")->required();
  calibrate_cmd->add_option("--k", calibrate.k, "cell size (tau)")->capture_default_str();
  calibrate_cmd->add_option("--m", calibrate.m, "replicates (l1)")->capture_default_str();
  calibrate_cmd->add_option("--d", calibrate.d, "distance (coverage)")->capture_default_str();
  calibrate_cmd->add_option("--tol", calibrate.tolerance, "tolerance on the metric")->capture_default_str();
  calibrate.lower_option = calibrate_cmd->add_option("--lower", calibrate.lower, "lower bound");
  calibrate.upper_option = calibrate_cmd->add_option("--upper", calibrate.upper, "upper bound");
  calibrate_cmd->add_option("--out", calibrate.out, "manifest directory")->capture_default_str();

  SweepFlags sweep;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "analytic risk-utility points over a parameter grid");
  sweep.input.Add(sweep_cmd);
  sweep_cmd->add_option("--families", sweep.families, "families")->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--sigmas", sweep.sigmas, "sigma grid")->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--nus", sweep.nus, "nu grid (gaf)")->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--sizes", sweep.sizes, "tau sizes")->capture_default_str();
  sweep_cmd->add_option("--m", sweep.m, "replicates (l1)")->capture_default_str();
  sweep_cmd->add_option("--zero-policy", sweep.zero_policy, "zero-cell policy")->capture_default_str();
  sweep_cmd->add_option("--out", sweep.out, "output directory")->capture_default_str();

  DistFlags dist;
  CLI::App* dist_cmd = app.add_subcommand("dist", "single-distribution utilities");
  dist_cmd->require_subcommand(1);
  CLI::App* pmf_cmd = dist_cmd->add_subcommand("pmf", "print the count pmf for one mean");
  dist.mechanism.Add(pmf_cmd);
  pmf_cmd->add_option("--mu", dist.mu, "mean")->required();
  pmf_cmd->add_option("--tail-eps", dist.tail_eps, "tail mass left out")->capture_default_str();
  pmf_cmd->add_option("--out", dist.out, "manifest directory")->capture_default_str();

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  RunManifest manifest;
  manifest.argv.assign(args.begin(), args.end());
  absl::Status status;
  std::string out_dir = ".";
  const CLI::App* used = nullptr;
  if (*ingest_cmd) {
    used = ingest_cmd;
    out_dir = ingest.out;
    status = RunIngest(ingest, manifest, out);
  } else if (*gen_cmd) {
    used = gen_cmd;
    out_dir = gen.out;
    status = RunGenFixture(gen, manifest, out);
  } else if (*synth_cmd) {
    used = synth_cmd;
    out_dir = synth.out;
    status = RunSynth(synth, manifest, out);
  } else if (*metrics_cmd) {
    used = metrics_cmd;
    out_dir = metrics.out;
    status = RunMetrics(metrics, manifest, out);
  } else if (*apriori_cmd) {
    used = apriori_cmd;
    out_dir = apriori.out;
    status = RunApriori(apriori, manifest, out);
  } else if (*calibrate_cmd) {
    used = calibrate_cmd;
    out_dir = calibrate.out;
    status = RunCalibrate(calibrate, manifest, out);
  } else if (*sweep_cmd) {
    used = sweep_cmd;
    out_dir = sweep.out;
    status = RunSweep(sweep, manifest, out);
  } else if (*pmf_cmd) {
    used = pmf_cmd;
    out_dir = dist.out;
    manifest.subcommand = "dist-pmf";
    status = RunDistPmf(dist, manifest, out);
  }
  if (used == nullptr) {
    err << app.help();
    return kExitUsage;
  }
  if (manifest.subcommand.empty()) manifest.subcommand = used->get_name();
  manifest.RecordFlags(*used);

  if (!status.ok()) {
    err << "error: " << status.message() << '\n';
    if (IsUsageError(status)) {
      err << '\n' << used->help();
      return kExitUsage;
    }
    return kExitData;
  }
  const double seconds = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start)
                             .count();
  if (absl::Status s = manifest.Write(out_dir, seconds); !s.ok()) {
    err << "error: " << s.message() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace tabsynth::cli
