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

#include "tabsynth/fixture.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "tabsynth/csv.h"
#include "tabsynth/random.h"
#include "tabsynth/status_macros.h"
#include "tabsynth/table_io.h"

namespace tabsynth {
namespace {

// Stream id reserved for fixture generation; synthesis replicate indices
// stay below it.
constexpr uint32_t kFixtureStream = 0xFFFFFFFFu;

absl::StatusOr<double> ParseWeight(std::string_view text) {
  double value = 0.0;
  auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() ||
      !std::isfinite(value) || value < 0.0) {
    return absl::InvalidArgumentError(
        absl::StrCat("'", std::string(text), "' is not a non-negative number"));
  }
  return value;
}

template <typename Urbg>
int64_t DrawTail(const TailBucket& tail, Urbg& gen) {
  const double excess_mean = tail.mean - static_cast<double>(tail.min_size);
  if (!(excess_mean > 0.0)) return tail.min_size;
  const double p = 1.0 / (excess_mean + 1.0);
  const double excess =
      std::floor(std::log(UniformOpen01(gen)) / std::log1p(-p));
  return tail.min_size + static_cast<int64_t>(excess);
}

}  // namespace

absl::StatusOr<TargetHistogram> ReadTargetHistogram(std::istream& in,
                                                    double tail_mean) {
  CsvReader reader(in);
  std::vector<std::string> header;
  ASSIGN_OR_RETURN(bool has_header, reader.Next(header));
  if (!has_header) {
    return absl::InvalidArgumentError("target histogram has no header");
  }
  auto column = [&](std::string_view name) -> std::optional<size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<size_t>(it - header.begin());
  };
  const std::optional<size_t> size_col = column("size");
  if (!size_col) {
    return absl::InvalidArgumentError("target histogram needs a 'size' column");
  }
  TargetHistogram target;
  double divisor = 1.0;
  std::optional<size_t> weight_col = column("frequency");
  if (weight_col) {
    target.kind = TargetHistogram::Kind::kFrequency;
  } else if ((weight_col = column("proportion"))) {
    target.kind = TargetHistogram::Kind::kProportion;
  } else if ((weight_col = column("percent"))) {
    target.kind = TargetHistogram::Kind::kProportion;
    divisor = 100.0;
  } else {
    return absl::InvalidArgumentError(
        "target histogram needs a 'frequency', 'proportion' or 'percent' "
        "column");
  }

  std::vector<std::string> fields;
  while (true) {
    ASSIGN_OR_RETURN(bool more, reader.Next(fields));
    if (!more) break;
    if (fields.size() != header.size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("ragged row on line ", reader.line()));
    }
    ASSIGN_OR_RETURN(double weight, ParseWeight(fields[*weight_col]));
    weight /= divisor;
    std::string_view size_text = fields[*size_col];
    if (size_text.ends_with('+')) {
      if (target.tail) {
        return absl::InvalidArgumentError("more than one tail bucket");
      }
      size_text.remove_suffix(1);
      ASSIGN_OR_RETURN(int64_t min_size, ParseCount(size_text));
      if (min_size < 1) {
        return absl::InvalidArgumentError("tail bucket must start at >= 1");
      }
      target.tail = TailBucket{min_size, weight,
                               std::max(tail_mean,
                                        static_cast<double>(min_size))};
      continue;
    }
    ASSIGN_OR_RETURN(int64_t size, ParseCount(size_text));
    if (size == 0) continue;
    if (!target.weights.emplace(size, weight).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("size ", size, " listed twice"));
    }
  }
  if (target.tail) {
    for (const auto& [size, weight] : target.weights) {
      if (size >= target.tail->min_size) {
        return absl::InvalidArgumentError(absl::StrCat(
            "size ", size, " overlaps the ", target.tail->min_size,
            "+ bucket"));
      }
    }
  }
  return target;
}

nlohmann::json TargetHistogramToJson(const TargetHistogram& target) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [size, weight] : target.weights) {
    rows.push_back({{"size", size}, {"weight", weight}});
  }
  nlohmann::json json = {
      {"kind", target.kind == TargetHistogram::Kind::kFrequency
                   ? "frequency"
                   : "proportion"},
      {"sizes", std::move(rows)},
  };
  if (target.tail) {
    json["tail"] = {{"min_size", target.tail->min_size},
                    {"weight", target.tail->weight},
                    {"mean", target.tail->mean}};
  }
  return json;
}

absl::StatusOr<ContingencyTable> GenerateFixture(const TableSchema& schema,
                                                 const TargetHistogram& target,
                                                 uint64_t seed) {
  const int64_t cells = schema.num_cells();
  PhiloxStream gen(seed, kFixtureStream, 0);
  Counts counts = Counts::Zero(cells);

  if (target.kind == TargetHistogram::Kind::kFrequency) {
    int64_t nonzero = 0;
    auto add = [&](double weight) -> absl::Status {
      if (weight != std::floor(weight)) {
        return absl::InvalidArgumentError(absl::StrCat(
            "frequency ", weight, " is not an integer"));
      }
      nonzero += static_cast<int64_t>(weight);
      return absl::OkStatus();
    };
    for (const auto& [size, weight] : target.weights) RETURN_IF_ERROR(add(weight));
    if (target.tail) RETURN_IF_ERROR(add(target.tail->weight));
    if (nonzero > cells) {
      return absl::InvalidArgumentError(absl::StrCat(
          "infeasible target: ", nonzero, " nonzero cells requested but the "
          "schema has only ", cells));
    }
    int64_t next = 0;
    for (const auto& [size, weight] : target.weights) {
      for (int64_t i = 0; i < static_cast<int64_t>(weight); ++i) {
        counts[next++] = size;
      }
    }
    if (target.tail) {
      for (int64_t i = 0; i < static_cast<int64_t>(target.tail->weight); ++i) {
        counts[next++] = DrawTail(*target.tail, gen);
      }
    }
    // Fisher-Yates: uniformly random placement of the sizes over cells.
    for (int64_t i = cells - 1; i > 0; --i) {
      const auto j = static_cast<int64_t>(
          UniformBelow(static_cast<uint64_t>(i) + 1, gen));
      std::swap(counts[i], counts[j]);
    }
  } else {
    std::vector<std::pair<double, int64_t>> cumulative;  // (upper, size)
    double total = 0.0;
    for (const auto& [size, weight] : target.weights) {
      total += weight;
      cumulative.emplace_back(total, size);
    }
    if (target.tail) {
      total += target.tail->weight;
      cumulative.emplace_back(total, -1);
    }
    if (total > 1.0 + 1e-9) {
      return absl::InvalidArgumentError(absl::StrCat(
          "infeasible target: proportions of nonzero sizes sum to ", total));
    }
    for (int64_t cell = 0; cell < cells; ++cell) {
      const double u = UniformOpen01(gen);
      auto it = std::upper_bound(
          cumulative.begin(), cumulative.end(), u,
          [](double value, const auto& entry) { return value < entry.first; });
      if (it == cumulative.end()) continue;  // zero cell
      counts[cell] = it->second >= 0 ? it->second : DrawTail(*target.tail, gen);
    }
  }
  return ContingencyTable::Create(schema, std::move(counts));
}

}  // namespace tabsynth
