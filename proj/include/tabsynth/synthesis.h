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

#ifndef TABSYNTH_SYNTHESIS_H_
#define TABSYNTH_SYNTHESIS_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "absl/status/statusor.h"
#include "json.hpp"
#include "tabsynth/mechanism.h"
#include "tabsynth/random.h"
#include "tabsynth/table.h"

namespace tabsynth {

// What happens to cells whose original count is zero.
struct ZeroPolicy {
  enum class Kind {
    kKeepZero,     // stay zero
    kPseudocount,  // drawn from the family with mean alpha
    kBernoulli,    // become 1 with probability p
  };
  Kind kind = Kind::kKeepZero;
  double value = 0.0;  // alpha or p

  static ZeroPolicy KeepZero() { return {}; }
  static ZeroPolicy Pseudocount(double alpha) {
    return {Kind::kPseudocount, alpha};
  }
  static ZeroPolicy Bernoulli(double p) { return {Kind::kBernoulli, p}; }

  absl::Status Validate() const;
  bool operator==(const ZeroPolicy&) const = default;
};

// "keep", "alpha=<a>" or "bernoulli=<p>".
absl::StatusOr<ZeroPolicy> ParseZeroPolicy(std::string_view text);
std::string ZeroPolicyToString(const ZeroPolicy& policy);

struct MechanismConfig {
  Family family = Family::kGaf;
  double sigma = 1.0;
  std::optional<double> nu;
  ZeroPolicy zero_policy;
  int m = 1;
  uint64_t master_seed = 0;

  absl::Status Validate() const;
  absl::StatusOr<Mechanism> mechanism() const;
};

nlohmann::json MechanismConfigToJson(const MechanismConfig& config);
absl::StatusOr<MechanismConfig> MechanismConfigFromJson(
    const nlohmann::json& json);

// Counters describing one synthesis run.
struct SynthesisStats {
  int64_t clamped_draws = 0;
  int64_t zero_cells_drawn = 0;       // zero-cell draws under the policy
  int64_t zero_cells_converted = 0;   // ... that came out nonzero
  int64_t zero_cells_to_one = 0;      // ... that came out exactly 1
  int64_t max_draw_from_zero = 0;

  SynthesisStats& operator+=(const SynthesisStats& other);
  bool operator==(const SynthesisStats&) const = default;
};

nlohmann::json SynthesisStatsToJson(const SynthesisStats& stats);

// K x m; column r is replicate r in canonical cell order.
using ReplicateMatrix =
    Eigen::Matrix<int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;

struct SyntheticEnsemble {
  uint64_t original_fingerprint = 0;
  MechanismConfig config;
  ReplicateMatrix replicates;
  SynthesisStats stats;

  int m() const { return static_cast<int>(replicates.cols()); }
  int64_t num_cells() const { return replicates.rows(); }
};

struct SynthesisOptions {
  int threads = 0;  // 0: std::thread::hardware_concurrency()
};

// The random stream for one (replicate, cell) pair. Replicates must stay
// below 2^32 - 1.
PhiloxStream CellStream(uint64_t master_seed, int replicate, int64_t cell);

// One synthetic count for a cell with original count `original`.
template <typename Urbg>
int64_t SynthesizeCell(int64_t original, const Mechanism& mechanism,
                       const ZeroPolicy& zero_policy, Urbg& gen,
                       bool* clamped) {
  if (original > 0) {
    return mechanism.Sample(static_cast<double>(original), gen, clamped);
  }
  switch (zero_policy.kind) {
    case ZeroPolicy::Kind::kKeepZero:
      return 0;
    case ZeroPolicy::Kind::kPseudocount:
      return mechanism.Sample(zero_policy.value, gen, clamped);
    case ZeroPolicy::Kind::kBernoulli:
      return UniformOpen01(gen) < zero_policy.value ? 1 : 0;
  }
  return 0;
}

absl::StatusOr<SyntheticEnsemble> Synthesize(
    const ContingencyTable& original, const MechanismConfig& config,
    const SynthesisOptions& options = {});

// Replicate r alone, identical to column r of Synthesize(). Lets callers
// stream over many replicates without holding the ensemble.
absl::StatusOr<Counts> SynthesizeReplicate(const ContingencyTable& original,
                                           const MechanismConfig& config,
                                           int replicate,
                                           SynthesisStats* stats = nullptr,
                                           const SynthesisOptions& options = {});

uint64_t Fingerprint(const ReplicateMatrix& replicates);

// Runs fn(begin, end) over [0, n) in fixed-size chunks on `threads` workers.
void ParallelFor(int64_t n, int threads,
                 const std::function<void(int64_t, int64_t)>& fn);

int ResolveThreads(int requested);

}  // namespace tabsynth

#endif  // TABSYNTH_SYNTHESIS_H_
