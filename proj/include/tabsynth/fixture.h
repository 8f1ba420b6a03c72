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

#ifndef TABSYNTH_FIXTURE_H_
#define TABSYNTH_FIXTURE_H_

#include <cstdint>
#include <istream>
#include <map>
#include <optional>

#include "absl/status/statusor.h"
#include "json.hpp"
#include "tabsynth/table.h"

namespace tabsynth {

// Sizes >= min_size drawn as min_size + a geometric excess with the given
// overall mean.
struct TailBucket {
  int64_t min_size = 11;
  double weight = 0.0;
  double mean = 100.0;
};

// Target cell-size distribution for a synthetic fixture. Weights cover sizes
// >= 1; the zero share is whatever is left.
struct TargetHistogram {
  enum class Kind {
    kFrequency,   // weights are exact cell counts; placement is a shuffle
    kProportion,  // weights are probabilities; cells are drawn i.i.d.
  };
  Kind kind = Kind::kProportion;
  std::map<int64_t, double> weights;
  std::optional<TailBucket> tail;
};

// CSV with a `size` column and one of `frequency`, `proportion` or `percent`
// (first found wins, in that order). A size written "N+" is the tail bucket;
// a size-0 row is ignored.
absl::StatusOr<TargetHistogram> ReadTargetHistogram(std::istream& in,
                                                    double tail_mean);

nlohmann::json TargetHistogramToJson(const TargetHistogram& target);

// Deterministic in (schema, target, seed).
absl::StatusOr<ContingencyTable> GenerateFixture(const TableSchema& schema,
                                                 const TargetHistogram& target,
                                                 uint64_t seed);

}  // namespace tabsynth

#endif  // TABSYNTH_FIXTURE_H_
