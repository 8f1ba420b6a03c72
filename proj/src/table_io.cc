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

#include "tabsynth/table_io.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "absl/container/flat_hash_map.h"
#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "tabsynth/csv.h"
#include "tabsynth/status_macros.h"

namespace tabsynth {
namespace {

absl::Status RowError(int64_t row, int64_t line, absl::string_view what) {
  return absl::InvalidArgumentError(
      absl::StrCat("row ", row, " (line ", line, "): ", what));
}

absl::StatusOr<std::ifstream> OpenInput(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return absl::NotFoundError(
        absl::StrCat("cannot open '", path.string(), "'"));
  }
  return in;
}

}  // namespace

absl::StatusOr<int64_t> ParseCount(std::string_view text) {
  int64_t value = 0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (begin == end || *begin == '-' || *begin == '+') {
    return absl::InvalidArgumentError(
        absl::StrCat("'", std::string(text), "' is not a non-negative integer count"));
  }
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec == std::errc::result_out_of_range) {
    return absl::OutOfRangeError(
        absl::StrCat("count '", std::string(text), "' overflows a 64-bit integer"));
  }
  if (ec != std::errc() || ptr != end) {
    return absl::InvalidArgumentError(
        absl::StrCat("'", std::string(text), "' is not a non-negative integer count"));
  }
  return value;
}

absl::StatusOr<TableSchema> SchemaFromJson(const nlohmann::json& json) {
  if (!json.is_object() || !json.contains("variables") ||
      !json["variables"].is_array()) {
    return absl::InvalidArgumentError(
        "schema JSON must be an object with a 'variables' array");
  }
  std::vector<Variable> variables;
  for (const auto& v : json["variables"]) {
    if (!v.is_object() || !v.contains("name") || !v["name"].is_string() ||
        !v.contains("categories") || !v["categories"].is_array()) {
      return absl::InvalidArgumentError(
          "each schema variable needs a string 'name' and a 'categories' "
          "array");
    }
    Variable var{v["name"].get<std::string>(), {}};
    for (const auto& c : v["categories"]) {
      if (!c.is_string()) {
        return absl::InvalidArgumentError(absl::StrCat(
            "categories of '", var.name, "' must be strings"));
      }
      var.categories.push_back(c.get<std::string>());
    }
    variables.push_back(std::move(var));
  }
  return TableSchema::Create(std::move(variables));
}

nlohmann::json SchemaToJson(const TableSchema& schema) {
  nlohmann::json variables = nlohmann::json::array();
  for (const Variable& v : schema.variables()) {
    variables.push_back({{"name", v.name}, {"categories", v.categories}});
  }
  return {{"variables", std::move(variables)}};
}

absl::StatusOr<TableSchema> LoadSchema(const std::filesystem::path& path) {
  ASSIGN_OR_RETURN(std::ifstream in, OpenInput(path));
  nlohmann::json json = nlohmann::json::parse(in, nullptr, false);
  if (json.is_discarded()) {
    return absl::InvalidArgumentError(
        absl::StrCat("'", path.string(), "' is not valid JSON"));
  }
  return SchemaFromJson(json);
}

absl::StatusOr<ContingencyTable> IngestMicrodata(std::istream& in,
                                                 const TableSchema* schema) {
  CsvReader reader(in);
  std::vector<std::string> header;
  ASSIGN_OR_RETURN(bool has_header, reader.Next(header));
  if (!has_header) return absl::InvalidArgumentError("microdata has no header");

  if (schema != nullptr) {
    std::vector<size_t> column_of(schema->num_variables());
    for (size_t v = 0; v < schema->num_variables(); ++v) {
      auto it = std::find(header.begin(), header.end(),
                          schema->variable(v).name);
      if (it == header.end()) {
        return absl::InvalidArgumentError(absl::StrCat(
            "microdata header lacks variable '", schema->variable(v).name,
            "'"));
      }
      column_of[v] = static_cast<size_t>(it - header.begin());
    }
    Counts counts = Counts::Zero(schema->num_cells());
    std::vector<std::string> fields;
    std::vector<int32_t> categories(schema->num_variables());
    for (int64_t row = 1;; ++row) {
      ASSIGN_OR_RETURN(bool more, reader.Next(fields));
      if (!more) break;
      if (fields.size() != header.size()) {
        return RowError(row, reader.line(),
                        absl::StrCat("expected ", header.size(),
                                     " fields, found ", fields.size()));
      }
      for (size_t v = 0; v < schema->num_variables(); ++v) {
        const std::string& label = fields[column_of[v]];
        std::optional<int32_t> c = schema->CategoryIndex(v, label);
        if (!c) {
          return RowError(row, reader.line(),
                          absl::StrCat("unknown category '", label,
                                       "' in column '",
                                       schema->variable(v).name, "'"));
        }
        categories[v] = *c;
      }
      ++counts[schema->CellIndex(categories)];
    }
    return ContingencyTable::Create(*schema, std::move(counts));
  }

  // Inferred schema: intern labels, then renumber in sorted order.
  const size_t n = header.size();
  std::vector<absl::flat_hash_map<std::string, int32_t>> interned(n);
  std::vector<int32_t> ids;
  std::vector<std::string> fields;
  for (int64_t row = 1;; ++row) {
    ASSIGN_OR_RETURN(bool more, reader.Next(fields));
    if (!more) break;
    if (fields.size() != n) {
      return RowError(row, reader.line(),
                      absl::StrCat("expected ", n, " fields, found ",
                                   fields.size()));
    }
    for (size_t v = 0; v < n; ++v) {
      auto [it, inserted] = interned[v].try_emplace(
          fields[v], static_cast<int32_t>(interned[v].size()));
      ids.push_back(it->second);
    }
  }
  std::vector<Variable> variables(n);
  std::vector<std::vector<int32_t>> remap(n);
  for (size_t v = 0; v < n; ++v) {
    variables[v].name = header[v];
    std::vector<std::pair<std::string, int32_t>> labels(interned[v].begin(),
                                                        interned[v].end());
    std::sort(labels.begin(), labels.end());
    remap[v].resize(labels.size());
    for (size_t c = 0; c < labels.size(); ++c) {
      variables[v].categories.push_back(labels[c].first);
      remap[v][static_cast<size_t>(labels[c].second)] = static_cast<int32_t>(c);
    }
  }
  ASSIGN_OR_RETURN(TableSchema inferred, TableSchema::Create(std::move(variables)));
  Counts counts = Counts::Zero(inferred.num_cells());
  std::vector<int32_t> categories(n);
  for (size_t r = 0; r < ids.size() / n; ++r) {
    for (size_t v = 0; v < n; ++v) {
      categories[v] = remap[v][static_cast<size_t>(ids[r * n + v])];
    }
    ++counts[inferred.CellIndex(categories)];
  }
  return ContingencyTable::Create(std::move(inferred), std::move(counts));
}

absl::StatusOr<Counts> IngestAggregatedCounts(std::istream& in,
                                              const TableSchema& schema) {
  CsvReader reader(in);
  std::vector<std::string> header;
  ASSIGN_OR_RETURN(bool has_header, reader.Next(header));
  if (!has_header) {
    return absl::InvalidArgumentError("aggregated table has no header");
  }
  const size_t n = schema.num_variables();
  if (header.size() != n + 1) {
    return absl::InvalidArgumentError(absl::StrCat(
        "aggregated header must list the ", n,
        " schema variables plus 'count'; found ", header.size(), " columns"));
  }
  std::vector<size_t> column_of(n);
  std::optional<size_t> count_column;
  std::vector<bool> seen(n, false);
  for (size_t col = 0; col < header.size(); ++col) {
    if (header[col] == "count") {
      count_column = col;
      continue;
    }
    std::optional<size_t> v = schema.VariableIndex(header[col]);
    if (!v || seen[*v]) {
      return absl::InvalidArgumentError(absl::StrCat(
          "unexpected column '", header[col], "' in aggregated header"));
    }
    seen[*v] = true;
    column_of[*v] = col;
  }
  if (!count_column) {
    return absl::InvalidArgumentError("aggregated header lacks 'count'");
  }

  Counts counts = Counts::Zero(schema.num_cells());
  std::vector<bool> filled(static_cast<size_t>(schema.num_cells()), false);
  std::vector<std::string> fields;
  std::vector<int32_t> categories(n);
  for (int64_t row = 1;; ++row) {
    ASSIGN_OR_RETURN(bool more, reader.Next(fields));
    if (!more) break;
    if (fields.size() != header.size()) {
      return RowError(row, reader.line(),
                      absl::StrCat("expected ", header.size(),
                                   " fields, found ", fields.size()));
    }
    for (size_t v = 0; v < n; ++v) {
      const std::string& label = fields[column_of[v]];
      std::optional<int32_t> c = schema.CategoryIndex(v, label);
      if (!c) {
        return RowError(row, reader.line(),
                        absl::StrCat("unknown category '", label,
                                     "' in column '", schema.variable(v).name,
                                     "'"));
      }
      categories[v] = *c;
    }
    absl::StatusOr<int64_t> count = ParseCount(fields[*count_column]);
    if (!count.ok()) {
      return RowError(row, reader.line(), count.status().message());
    }
    const int64_t cell = schema.CellIndex(categories);
    if (filled[static_cast<size_t>(cell)]) {
      return RowError(row, reader.line(), "duplicate cell");
    }
    filled[static_cast<size_t>(cell)] = true;
    counts[cell] = *count;
  }
  return counts;
}

absl::StatusOr<ContingencyTable> IngestAggregated(std::istream& in,
                                                  const TableSchema& schema) {
  ASSIGN_OR_RETURN(Counts counts, IngestAggregatedCounts(in, schema));
  return ContingencyTable::Create(schema, std::move(counts));
}

void WriteAggregated(std::ostream& out, const ContingencyTable& table,
                     bool include_zeros) {
  WriteAggregatedCounts(out, table.schema(), table.counts(), include_zeros);
}

void WriteAggregatedCounts(std::ostream& out, const TableSchema& schema,
                           const Eigen::Ref<const Counts>& counts,
                           bool include_zeros) {
  std::vector<std::string> row;
  for (const Variable& v : schema.variables()) row.push_back(v.name);
  row.push_back("count");
  WriteCsvRow(out, row);
  std::vector<int32_t> categories(schema.num_variables());
  for (int64_t cell = 0; cell < counts.size(); ++cell) {
    const int64_t count = counts[cell];
    if (count == 0 && !include_zeros) continue;
    schema.CategoriesOf(cell, categories);
    row.clear();
    for (size_t v = 0; v < categories.size(); ++v) {
      row.push_back(schema.variable(v).categories[categories[v]]);
    }
    row.push_back(absl::StrCat(count));
    WriteCsvRow(out, row);
  }
}

void WriteMicrodata(std::ostream& out, const ContingencyTable& table) {
  const TableSchema& schema = table.schema();
  std::vector<std::string> row;
  for (const Variable& v : schema.variables()) row.push_back(v.name);
  WriteCsvRow(out, row);
  std::vector<int32_t> categories(schema.num_variables());
  std::string line;
  table.ForEachNonzero([&](int64_t cell, int64_t count) {
    schema.CategoriesOf(cell, categories);
    line.clear();
    for (size_t v = 0; v < categories.size(); ++v) {
      if (v > 0) line.push_back(',');
      line += CsvEscape(schema.variable(v).categories[categories[v]]);
    }
    line.push_back('\n');
    for (int64_t i = 0; i < count; ++i) out << line;
  });
}

void WriteHistogram(std::ostream& out, const CellHistogram& histogram) {
  out << "size,frequency,proportion\n";
  for (const auto& [size, freq] : histogram.frequencies()) {
    out << size << ',' << freq << ','
        << FormatDouble(histogram.proportion(size)) << '\n';
  }
}

absl::StatusOr<CellHistogram> ReadHistogram(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> header;
  ASSIGN_OR_RETURN(bool has_header, reader.Next(header));
  if (!has_header) return absl::InvalidArgumentError("histogram has no header");
  auto size_col = std::find(header.begin(), header.end(), "size");
  auto freq_col = std::find(header.begin(), header.end(), "frequency");
  if (size_col == header.end() || freq_col == header.end()) {
    return absl::InvalidArgumentError(
        "histogram header needs 'size' and 'frequency' columns");
  }
  const auto si = static_cast<size_t>(size_col - header.begin());
  const auto fi = static_cast<size_t>(freq_col - header.begin());
  std::map<int64_t, int64_t> frequencies;
  std::vector<std::string> fields;
  for (int64_t row = 1;; ++row) {
    ASSIGN_OR_RETURN(bool more, reader.Next(fields));
    if (!more) break;
    if (fields.size() != header.size()) {
      return RowError(row, reader.line(), "ragged row");
    }
    absl::StatusOr<int64_t> size = ParseCount(fields[si]);
    if (!size.ok()) return RowError(row, reader.line(), size.status().message());
    absl::StatusOr<int64_t> freq = ParseCount(fields[fi]);
    if (!freq.ok()) return RowError(row, reader.line(), freq.status().message());
    if (!frequencies.emplace(*size, *freq).second) {
      return RowError(row, reader.line(),
                      absl::StrCat("size ", *size, " listed twice"));
    }
  }
  return CellHistogram::FromFrequencies(std::move(frequencies));
}

absl::StatusOr<ContingencyTable> LoadAggregated(
    const std::filesystem::path& path, const TableSchema& schema) {
  ASSIGN_OR_RETURN(std::ifstream in, OpenInput(path));
  return IngestAggregated(in, schema);
}

absl::StatusOr<Counts> LoadAggregatedCounts(const std::filesystem::path& path,
                                            const TableSchema& schema) {
  ASSIGN_OR_RETURN(std::ifstream in, OpenInput(path));
  return IngestAggregatedCounts(in, schema);
}

absl::StatusOr<CellHistogram> LoadHistogram(const std::filesystem::path& path) {
  ASSIGN_OR_RETURN(std::ifstream in, OpenInput(path));
  return ReadHistogram(in);
}

}  // namespace tabsynth
