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

#include "tabsynth/table.h"

#include <utility>

#include "absl/container/flat_hash_set.h"
#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace tabsynth {
namespace {

constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr uint64_t kFnvPrime = 0x100000001b3ULL;

void FnvMix(uint64_t& hash, const void* data, size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= kFnvPrime;
  }
}

void FnvMix(uint64_t& hash, std::string_view s) {
  FnvMix(hash, s.data(), s.size());
  const char terminator = '\0';
  FnvMix(hash, &terminator, 1);
}

}  // namespace

TableSchema::TableSchema(std::vector<Variable> variables)
    : variables_(std::move(variables)) {}

absl::StatusOr<TableSchema> TableSchema::Create(
    std::vector<Variable> variables) {
  if (variables.empty()) {
    return absl::InvalidArgumentError("schema has no variables");
  }
  absl::flat_hash_set<std::string> names;
  for (const Variable& v : variables) {
    if (v.name.empty()) {
      return absl::InvalidArgumentError("variable with empty name");
    }
    if (!names.insert(v.name).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate variable name '", v.name, "'"));
    }
    if (v.categories.size() < 2) {
      return absl::InvalidArgumentError(absl::StrCat(
          "variable '", v.name, "' needs at least 2 categories, has ",
          v.categories.size()));
    }
    if (v.categories.size() > static_cast<size_t>(INT32_MAX)) {
      return absl::InvalidArgumentError(
          absl::StrCat("variable '", v.name, "' has too many categories"));
    }
  }

  TableSchema schema(std::move(variables));
  const size_t n = schema.variables_.size();
  schema.strides_.assign(n, 1);
  schema.lookup_.resize(n);
  int64_t cells = 1;
  for (size_t i = n; i-- > 0;) {
    const Variable& v = schema.variables_[i];
    schema.strides_[i] = cells;
    if (__builtin_mul_overflow(cells, static_cast<int64_t>(v.categories.size()),
                               &cells)) {
      return absl::InvalidArgumentError(
          "number of cells does not fit in a 64-bit integer");
    }
    auto& lookup = schema.lookup_[i];
    for (size_t c = 0; c < v.categories.size(); ++c) {
      if (!lookup.emplace(v.categories[c], static_cast<int32_t>(c)).second) {
        return absl::InvalidArgumentError(
            absl::StrCat("duplicate category '", v.categories[c],
                         "' in variable '", v.name, "'"));
      }
    }
  }
  schema.num_cells_ = cells;
  return schema;
}

std::optional<size_t> TableSchema::VariableIndex(std::string_view name) const {
  for (size_t v = 0; v < variables_.size(); ++v) {
    if (variables_[v].name == name) return v;
  }
  return std::nullopt;
}

std::optional<int32_t> TableSchema::CategoryIndex(
    size_t v, std::string_view label) const {
  auto it = lookup_[v].find(absl::string_view(label.data(), label.size()));
  if (it == lookup_[v].end()) return std::nullopt;
  return it->second;
}

int64_t TableSchema::CellIndex(std::span<const int32_t> categories) const {
  int64_t cell = 0;
  for (size_t v = 0; v < categories.size(); ++v) {
    cell += static_cast<int64_t>(categories[v]) * strides_[v];
  }
  return cell;
}

void TableSchema::CategoriesOf(int64_t cell, std::span<int32_t> out) const {
  for (size_t v = 0; v < variables_.size(); ++v) {
    out[v] = static_cast<int32_t>(cell / strides_[v]);
    cell %= strides_[v];
  }
}

std::vector<int32_t> TableSchema::CategoriesOf(int64_t cell) const {
  std::vector<int32_t> out(variables_.size());
  CategoriesOf(cell, out);
  return out;
}

absl::StatusOr<int64_t> CheckedTotal(const Counts& counts) {
  int64_t total = 0;
  for (Eigen::Index i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0) {
      return absl::InvalidArgumentError(
          absl::StrCat("negative count ", counts[i], " in cell ", i));
    }
    if (__builtin_add_overflow(total, counts[i], &total)) {
      return absl::OutOfRangeError("grand total overflows a 64-bit integer");
    }
  }
  return total;
}

absl::StatusOr<ContingencyTable> ContingencyTable::Create(TableSchema schema,
                                                          Counts counts) {
  if (counts.size() != schema.num_cells()) {
    return absl::InvalidArgumentError(
        absl::StrCat("schema has ", schema.num_cells(), " cells but ",
                     counts.size(), " counts were supplied"));
  }
  absl::StatusOr<int64_t> total = CheckedTotal(counts);
  if (!total.ok()) return total.status();
  return ContingencyTable(std::move(schema), std::move(counts), *total);
}

ContingencyTable ContingencyTable::Zeros(TableSchema schema) {
  Counts counts = Counts::Zero(schema.num_cells());
  return ContingencyTable(std::move(schema), std::move(counts), 0);
}

uint64_t Fingerprint(const ContingencyTable& table) {
  uint64_t hash = kFnvOffset;
  for (const Variable& v : table.schema().variables()) {
    FnvMix(hash, v.name);
    for (const std::string& c : v.categories) FnvMix(hash, c);
  }
  FnvMix(hash, table.counts().data(),
         static_cast<size_t>(table.counts().size()) * sizeof(int64_t));
  return hash;
}

absl::StatusOr<CellHistogram> CellHistogram::FromFrequencies(
    std::map<int64_t, int64_t> frequencies) {
  int64_t cells = 0;
  for (auto it = frequencies.begin(); it != frequencies.end();) {
    if (it->first < 0) {
      return absl::InvalidArgumentError(
          absl::StrCat("negative cell size ", it->first));
    }
    if (it->second < 0) {
      return absl::InvalidArgumentError(absl::StrCat(
          "negative frequency ", it->second, " for size ", it->first));
    }
    if (__builtin_add_overflow(cells, it->second, &cells)) {
      return absl::OutOfRangeError("histogram cell total overflows");
    }
    it = it->second == 0 ? frequencies.erase(it) : std::next(it);
  }
  if (cells == 0) return absl::InvalidArgumentError("histogram is empty");
  return CellHistogram(std::move(frequencies), cells);
}

int64_t CellHistogram::frequency(int64_t size) const {
  auto it = frequencies_.find(size);
  return it == frequencies_.end() ? 0 : it->second;
}

double CellHistogram::proportion(int64_t size) const {
  return static_cast<double>(frequency(size)) /
         static_cast<double>(num_cells_);
}

std::vector<int64_t> CellHistogram::support() const {
  std::vector<int64_t> sizes;
  sizes.reserve(frequencies_.size());
  for (const auto& [size, freq] : frequencies_) sizes.push_back(size);
  return sizes;
}

std::vector<HistogramRow> CellHistogram::Bucketed(int64_t cap) const {
  std::vector<HistogramRow> rows;
  for (int64_t j = 0; j <= cap; ++j) {
    const int64_t freq = frequency(j);
    rows.push_back({absl::StrCat(j), j, freq,
                    static_cast<double>(freq) / static_cast<double>(num_cells_)});
  }
  int64_t above = 0;
  for (auto it = frequencies_.upper_bound(cap); it != frequencies_.end();
       ++it) {
    above += it->second;
  }
  rows.push_back({absl::StrCat(cap + 1, "+"), cap + 1, above,
                  static_cast<double>(above) / static_cast<double>(num_cells_)});
  return rows;
}

CellHistogram Histogram(const ContingencyTable& table) {
  std::map<int64_t, int64_t> frequencies;
  const Counts& counts = table.counts();
  int64_t zeros = 0;
  for (Eigen::Index i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) {
      ++zeros;
    } else {
      ++frequencies[counts[i]];
    }
  }
  if (zeros > 0) frequencies[0] = zeros;
  // A schema always has at least two cells, so this cannot fail.
  return *CellHistogram::FromFrequencies(std::move(frequencies));
}

absl::StatusOr<ContingencyTable> Marginal(
    const ContingencyTable& table, std::span<const std::string> variables) {
  const TableSchema& schema = table.schema();
  if (variables.empty()) {
    return absl::InvalidArgumentError("marginal needs at least one variable");
  }
  std::vector<bool> keep(schema.num_variables(), false);
  for (const std::string& name : variables) {
    std::optional<size_t> v = schema.VariableIndex(name);
    if (!v) {
      return absl::NotFoundError(
          absl::StrCat("unknown variable '", name, "' in marginal"));
    }
    if (keep[*v]) {
      return absl::InvalidArgumentError(
          absl::StrCat("variable '", name, "' listed twice in marginal"));
    }
    keep[*v] = true;
  }
  std::vector<Variable> kept;
  for (size_t v = 0; v < schema.num_variables(); ++v) {
    if (keep[v]) kept.push_back(schema.variable(v));
  }
  absl::StatusOr<TableSchema> sub = TableSchema::Create(std::move(kept));
  if (!sub.ok()) return sub.status();

  // Stride of each source variable in the marginal's cell numbering.
  std::vector<int64_t> target_stride(schema.num_variables(), 0);
  for (size_t v = 0, t = 0; v < schema.num_variables(); ++v) {
    if (keep[v]) target_stride[v] = sub->stride(t++);
  }
  Counts counts = Counts::Zero(sub->num_cells());
  std::vector<int32_t> categories(schema.num_variables());
  table.ForEachNonzero([&](int64_t cell, int64_t count) {
    schema.CategoriesOf(cell, categories);
    int64_t target = 0;
    for (size_t v = 0; v < categories.size(); ++v) {
      target += categories[v] * target_stride[v];
    }
    counts[target] += count;
  });
  return ContingencyTable::Create(*std::move(sub), std::move(counts));
}

}  // namespace tabsynth
