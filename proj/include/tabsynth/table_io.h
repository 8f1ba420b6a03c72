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

#ifndef TABSYNTH_TABLE_IO_H_
#define TABSYNTH_TABLE_IO_H_

#include <filesystem>
#include <istream>
#include <ostream>

#include "absl/status/statusor.h"
#include "json.hpp"
#include "tabsynth/table.h"

namespace tabsynth {

// Schema JSON: {"variables": [{"name": ..., "categories": [...]}, ...]}
absl::StatusOr<TableSchema> SchemaFromJson(const nlohmann::json& json);
nlohmann::json SchemaToJson(const TableSchema& schema);
absl::StatusOr<TableSchema> LoadSchema(const std::filesystem::path& path);

// One row per individual; the header names the variables. With a schema,
// the header must contain every schema variable (other columns are ignored)
// and labels must belong to the schema. Without one, every column is a
// variable and categories are the observed labels in sorted order.
absl::StatusOr<ContingencyTable> IngestMicrodata(std::istream& in,
                                                 const TableSchema* schema);

// Header = schema variables + "count", any column order. Cells not listed
// are zero.
absl::StatusOr<ContingencyTable> IngestAggregated(std::istream& in,
                                                  const TableSchema& schema);
// The same without building a table, so totals past int64 are allowed.
absl::StatusOr<Counts> IngestAggregatedCounts(std::istream& in,
                                              const TableSchema& schema);

// Aggregated CSV in cell order; zero cells are omitted unless requested.
void WriteAggregated(std::ostream& out, const ContingencyTable& table,
                     bool include_zeros = false);
void WriteAggregatedCounts(std::ostream& out, const TableSchema& schema,
                           const Eigen::Ref<const Counts>& counts,
                           bool include_zeros = false);

// One row per individual, in cell order.
void WriteMicrodata(std::ostream& out, const ContingencyTable& table);

// size,frequency,proportion with exact sizes.
void WriteHistogram(std::ostream& out, const CellHistogram& histogram);
// Reads size,frequency (further columns ignored). Sizes must be exact
// integers.
absl::StatusOr<CellHistogram> ReadHistogram(std::istream& in);

absl::StatusOr<ContingencyTable> LoadAggregated(
    const std::filesystem::path& path, const TableSchema& schema);
absl::StatusOr<Counts> LoadAggregatedCounts(const std::filesystem::path& path,
                                            const TableSchema& schema);
absl::StatusOr<CellHistogram> LoadHistogram(const std::filesystem::path& path);

// Parses a non-negative decimal integer, rejecting signs, fractions and
// trailing text.
absl::StatusOr<int64_t> ParseCount(std::string_view text);

}  // namespace tabsynth

#endif  // TABSYNTH_TABLE_IO_H_
