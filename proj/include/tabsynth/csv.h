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

#ifndef TABSYNTH_CSV_H_
#define TABSYNTH_CSV_H_

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"

namespace tabsynth {

// RFC 4180 reader: comma separated, double-quoted fields may contain commas,
// doubled quotes and line breaks. CRLF and a leading UTF-8 BOM are accepted;
// blank lines are skipped.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  // Reads the next record. Returns false at end of input.
  absl::StatusOr<bool> Next(std::vector<std::string>& fields);

  // Physical line on which the last record started (1-based).
  int64_t line() const { return record_line_; }

 private:
  std::istream& in_;
  int64_t line_ = 0;
  int64_t record_line_ = 0;
  std::string buffer_;
};

std::string CsvEscape(std::string_view field);

void WriteCsvRow(std::ostream& out, std::span<const std::string> fields);

// Shortest decimal string that round-trips to the same double.
std::string FormatDouble(double value);

}  // namespace tabsynth

#endif  // TABSYNTH_CSV_H_
