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

#ifndef TABSYNTH_TABLE_H_
#define TABSYNTH_TABLE_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "absl/container/flat_hash_map.h"
#include "absl/status/statusor.h"

namespace tabsynth {

// Dense cell counts in canonical order.
using Counts = Eigen::Matrix<int64_t, Eigen::Dynamic, 1>;

struct Variable {
  std::string name;
  std::vector<std::string> categories;

  bool operator==(const Variable&) const = default;
};

// An ordered list of categorical variables. Cells are numbered row-major with
// the last variable varying fastest:
//
//   cell = sum_v category[v] * stride[v],  stride[last] = 1,
//   stride[v] = stride[v + 1] * |categories[v + 1]|.
class TableSchema {
 public:
  static absl::StatusOr<TableSchema> Create(std::vector<Variable> variables);

  const std::vector<Variable>& variables() const { return variables_; }
  const Variable& variable(size_t v) const { return variables_[v]; }
  size_t num_variables() const { return variables_.size(); }
  int64_t num_cells() const { return num_cells_; }
  int64_t stride(size_t v) const { return strides_[v]; }
  int32_t num_categories(size_t v) const {
    return static_cast<int32_t>(variables_[v].categories.size());
  }

  std::optional<size_t> VariableIndex(std::string_view name) const;
  std::optional<int32_t> CategoryIndex(size_t v, std::string_view label) const;

  // Requires one in-range category index per variable.
  int64_t CellIndex(std::span<const int32_t> categories) const;
  void CategoriesOf(int64_t cell, std::span<int32_t> out) const;
  std::vector<int32_t> CategoriesOf(int64_t cell) const;

  bool operator==(const TableSchema& other) const {
    return variables_ == other.variables_;
  }

 private:
  explicit TableSchema(std::vector<Variable> variables);

  std::vector<Variable> variables_;
  std::vector<int64_t> strides_;
  int64_t num_cells_ = 1;
  std::vector<absl::flat_hash_map<std::string, int32_t>> lookup_;
};

// Original (or synthetic) counts over the full cross-classification of a
// schema. Immutable once built.
class ContingencyTable {
 public:
  static absl::StatusOr<ContingencyTable> Create(TableSchema schema,
                                                 Counts counts);
  static ContingencyTable Zeros(TableSchema schema);

  const TableSchema& schema() const { return schema_; }
  const Counts& counts() const { return counts_; }
  int64_t count(int64_t cell) const { return counts_[cell]; }
  int64_t num_cells() const { return counts_.size(); }
  int64_t total() const { return total_; }

  // Calls fn(cell, count) for every cell with count > 0, in cell order.
  template <typename Fn>
  void ForEachNonzero(Fn&& fn) const {
    for (Eigen::Index i = 0; i < counts_.size(); ++i) {
      if (counts_[i] != 0) fn(static_cast<int64_t>(i), counts_[i]);
    }
  }

  bool operator==(const ContingencyTable& other) const {
    return schema_ == other.schema_ && counts_ == other.counts_;
  }

 private:
  ContingencyTable(TableSchema schema, Counts counts, int64_t total)
      : schema_(std::move(schema)), counts_(std::move(counts)), total_(total) {}

  TableSchema schema_;
  Counts counts_;
  int64_t total_;
};

// Sum of counts with overflow detection.
absl::StatusOr<int64_t> CheckedTotal(const Counts& counts);

// 64-bit FNV-1a over the schema and counts.
uint64_t Fingerprint(const ContingencyTable& table);

struct HistogramRow {
  std::string label;  // "j", or "cap+" for the bucket of sizes above cap
  int64_t min_size;
  int64_t frequency;
  double proportion;
};

// Frequencies of cell sizes. Exact for every size; Bucketed() gives the
// display form with a "cap+" bucket.
class CellHistogram {
 public:
  // The number of cells is the sum of the frequencies.
  static absl::StatusOr<CellHistogram> FromFrequencies(
      std::map<int64_t, int64_t> frequencies);

  int64_t num_cells() const { return num_cells_; }
  const std::map<int64_t, int64_t>& frequencies() const { return frequencies_; }
  int64_t frequency(int64_t size) const;
  double proportion(int64_t size) const;
  // The observed sizes: { j : proportion(j) > 0 }.
  std::vector<int64_t> support() const;
  std::vector<HistogramRow> Bucketed(int64_t cap) const;

 private:
  CellHistogram(std::map<int64_t, int64_t> frequencies, int64_t num_cells)
      : frequencies_(std::move(frequencies)), num_cells_(num_cells) {}

  std::map<int64_t, int64_t> frequencies_;
  int64_t num_cells_;
};

CellHistogram Histogram(const ContingencyTable& table);

// Sums counts over the variables not named. The result keeps the original
// schema order of the retained variables.
absl::StatusOr<ContingencyTable> Marginal(
    const ContingencyTable& table, std::span<const std::string> variables);

}  // namespace tabsynth

#endif  // TABSYNTH_TABLE_H_
