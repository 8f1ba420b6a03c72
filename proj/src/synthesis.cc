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

#include "tabsynth/synthesis.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <mutex>
#include <thread>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "tabsynth/status_macros.h"

namespace tabsynth {
namespace {

constexpr int64_t kChunkCells = 1 << 14;
constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr uint64_t kFnvPrime = 0x100000001b3ULL;

absl::StatusOr<double> ParseNumber(std::string_view text) {
  double value = 0.0;
  auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("'", std::string(text), "' is not a number"));
  }
  return value;
}

void FillReplicate(const ContingencyTable& original,
                   const Mechanism& mechanism, const MechanismConfig& config,
                   int replicate, int64_t* out, int threads,
                   SynthesisStats* stats) {
  std::mutex mu;
  const Counts& counts = original.counts();
  ParallelFor(original.num_cells(), threads, [&](int64_t begin, int64_t end) {
    SynthesisStats local;
    for (int64_t cell = begin; cell < end; ++cell) {
      PhiloxStream gen = CellStream(config.master_seed, replicate, cell);
      bool clamped = false;
      const int64_t f = counts[cell];
      const int64_t draw =
          SynthesizeCell(f, mechanism, config.zero_policy, gen, &clamped);
      out[cell] = draw;
      if (clamped) ++local.clamped_draws;
      if (f == 0 &&
          config.zero_policy.kind != ZeroPolicy::Kind::kKeepZero) {
        ++local.zero_cells_drawn;
        if (draw > 0) ++local.zero_cells_converted;
        if (draw == 1) ++local.zero_cells_to_one;
        local.max_draw_from_zero = std::max(local.max_draw_from_zero, draw);
      }
    }
    std::lock_guard<std::mutex> lock(mu);
    *stats += local;
  });
}

}  // namespace

absl::Status ZeroPolicy::Validate() const {
  switch (kind) {
    case Kind::kKeepZero:
      return absl::OkStatus();
    case Kind::kPseudocount:
      if (!std::isfinite(value) || !(value > 0.0)) {
        return absl::InvalidArgumentError(
            absl::StrCat("pseudocount alpha must be positive, got ", value));
      }
      return absl::OkStatus();
    case Kind::kBernoulli:
      if (!(value >= 0.0 && value <= 1.0)) {
        return absl::InvalidArgumentError(absl::StrCat(
            "bernoulli probability must lie in [0, 1], got ", value));
      }
      return absl::OkStatus();
  }
  return absl::InvalidArgumentError("unknown zero policy");
}

absl::StatusOr<ZeroPolicy> ParseZeroPolicy(std::string_view text) {
  ZeroPolicy policy;
  if (text == "keep") return policy;
  if (text.starts_with("alpha=")) {
    ASSIGN_OR_RETURN(double alpha, ParseNumber(text.substr(6)));
    policy = ZeroPolicy::Pseudocount(alpha);
  } else if (text.starts_with("bernoulli=")) {
    ASSIGN_OR_RETURN(double p, ParseNumber(text.substr(10)));
    policy = ZeroPolicy::Bernoulli(p);
  } else {
    return absl::InvalidArgumentError(absl::StrCat(
        "zero policy '", std::string(text), "' is not keep, alpha=<a> or bernoulli=<p>"));
  }
  RETURN_IF_ERROR(policy.Validate());
  return policy;
}

std::string ZeroPolicyToString(const ZeroPolicy& policy) {
  switch (policy.kind) {
    case ZeroPolicy::Kind::kKeepZero:
      return "keep";
    case ZeroPolicy::Kind::kPseudocount:
      return absl::StrCat("alpha=", policy.value);
    case ZeroPolicy::Kind::kBernoulli:
      return absl::StrCat("bernoulli=", policy.value);
  }
  return "unknown";
}

absl::Status MechanismConfig::Validate() const {
  if (m < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("number of replicates m must be >= 1, got ", m));
  }
  RETURN_IF_ERROR(zero_policy.Validate());
  return mechanism().status();
}

absl::StatusOr<Mechanism> MechanismConfig::mechanism() const {
  return Mechanism::Create(family, sigma, nu);
}

nlohmann::json MechanismConfigToJson(const MechanismConfig& config) {
  nlohmann::json json = {
      {"family", FamilyName(config.family)},
      {"sigma", config.sigma},
      {"zero_policy", ZeroPolicyToString(config.zero_policy)},
      {"m", config.m},
      {"master_seed", config.master_seed},
  };
  json["nu"] = config.nu ? nlohmann::json(*config.nu) : nlohmann::json(nullptr);
  return json;
}

absl::StatusOr<MechanismConfig> MechanismConfigFromJson(
    const nlohmann::json& json) {
  try {
    MechanismConfig config;
    ASSIGN_OR_RETURN(config.family,
                     ParseFamily(json.at("family").get<std::string>()));
    config.sigma = json.at("sigma").get<double>();
    if (json.contains("nu") && !json["nu"].is_null()) {
      config.nu = json["nu"].get<double>();
    }
    ASSIGN_OR_RETURN(config.zero_policy,
                     ParseZeroPolicy(json.at("zero_policy").get<std::string>()));
    config.m = json.at("m").get<int>();
    config.master_seed = json.at("master_seed").get<uint64_t>();
    RETURN_IF_ERROR(config.Validate());
    return config;
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed mechanism config: ", e.what()));
  }
}

SynthesisStats& SynthesisStats::operator+=(const SynthesisStats& other) {
  clamped_draws += other.clamped_draws;
  zero_cells_drawn += other.zero_cells_drawn;
  zero_cells_converted += other.zero_cells_converted;
  zero_cells_to_one += other.zero_cells_to_one;
  max_draw_from_zero = std::max(max_draw_from_zero, other.max_draw_from_zero);
  return *this;
}

nlohmann::json SynthesisStatsToJson(const SynthesisStats& stats) {
  return {
      {"clamped_draws", stats.clamped_draws},
      {"zero_cells_drawn", stats.zero_cells_drawn},
      {"zero_cells_converted", stats.zero_cells_converted},
      {"zero_cells_to_one", stats.zero_cells_to_one},
      {"max_draw_from_zero", stats.max_draw_from_zero},
  };
}

PhiloxStream CellStream(uint64_t master_seed, int replicate, int64_t cell) {
  return PhiloxStream(master_seed, static_cast<uint32_t>(replicate),
                      static_cast<uint64_t>(cell));
}

int ResolveThreads(int requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

void ParallelFor(int64_t n, int threads,
                 const std::function<void(int64_t, int64_t)>& fn) {
  const int64_t chunks = (n + kChunkCells - 1) / kChunkCells;
  const int workers =
      static_cast<int>(std::min<int64_t>(ResolveThreads(threads), chunks));
  std::atomic<int64_t> next{0};
  auto work = [&] {
    for (int64_t c = next++; c < chunks; c = next++) {
      fn(c * kChunkCells, std::min(n, (c + 1) * kChunkCells));
    }
  };
  if (workers <= 1) {
    work();
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int t = 0; t < workers; ++t) pool.emplace_back(work);
}

absl::StatusOr<SyntheticEnsemble> Synthesize(const ContingencyTable& original,
                                             const MechanismConfig& config,
                                             const SynthesisOptions& options) {
  RETURN_IF_ERROR(config.Validate());
  ASSIGN_OR_RETURN(Mechanism mechanism, config.mechanism());
  SyntheticEnsemble ensemble;
  ensemble.original_fingerprint = Fingerprint(original);
  ensemble.config = config;
  ensemble.replicates.resize(original.num_cells(), config.m);
  for (int r = 0; r < config.m; ++r) {
    FillReplicate(original, mechanism, config, r,
                  ensemble.replicates.col(r).data(), options.threads,
                  &ensemble.stats);
  }
  return ensemble;
}

absl::StatusOr<Counts> SynthesizeReplicate(const ContingencyTable& original,
                                           const MechanismConfig& config,
                                           int replicate, SynthesisStats* stats,
                                           const SynthesisOptions& options) {
  RETURN_IF_ERROR(config.Validate());
  if (replicate < 0 || replicate >= config.m) {
    return absl::OutOfRangeError(absl::StrCat(
        "replicate ", replicate, " outside [0, ", config.m, ")"));
  }
  ASSIGN_OR_RETURN(Mechanism mechanism, config.mechanism());
  Counts out(original.num_cells());
  SynthesisStats local;
  FillReplicate(original, mechanism, config, replicate, out.data(),
                options.threads, &local);
  if (stats != nullptr) *stats += local;
  return out;
}

uint64_t Fingerprint(const ReplicateMatrix& replicates) {
  uint64_t hash = kFnvOffset;
  const auto* bytes = reinterpret_cast<const unsigned char*>(replicates.data());
  const size_t size = static_cast<size_t>(replicates.size()) * sizeof(int64_t);
  for (size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= kFnvPrime;
  }
  return hash;
}

}  // namespace tabsynth
