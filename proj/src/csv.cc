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

#include "tabsynth/csv.h"

#include <charconv>
#include <string>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace tabsynth {

absl::StatusOr<bool> CsvReader::Next(std::vector<std::string>& fields) {
  fields.clear();
  do {
    if (!std::getline(in_, buffer_)) return false;
    ++line_;
    if (line_ == 1 && buffer_.starts_with("\xEF\xBB\xBF")) buffer_.erase(0, 3);
    if (!buffer_.empty() && buffer_.back() == '\r') buffer_.pop_back();
  } while (buffer_.empty());
  record_line_ = line_;

  std::string field;
  bool quoted = false;
  bool field_was_quoted = false;
  size_t i = 0;
  while (true) {
    if (i == buffer_.size()) {
      if (!quoted) break;
      // Quoted field continues on the next physical line.
      field.push_back('\n');
      if (!std::getline(in_, buffer_)) {
        return absl::InvalidArgumentError(absl::StrCat(
            "unterminated quoted field starting on line ", record_line_));
      }
      ++line_;
      if (!buffer_.empty() && buffer_.back() == '\r') buffer_.pop_back();
      i = 0;
      continue;
    }
    const char c = buffer_[i++];
    if (quoted) {
      if (c != '"') {
        field.push_back(c);
      } else if (i < buffer_.size() && buffer_[i] == '"') {
        field.push_back('"');
        ++i;
      } else {
        quoted = false;
      }
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      field_was_quoted = false;
    } else if (c == '"' && field.empty() && !field_was_quoted) {
      quoted = true;
      field_was_quoted = true;
    } else if (field_was_quoted) {
      return absl::InvalidArgumentError(absl::StrCat(
          "unexpected character after closing quote on line ", line_));
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return true;
}

std::string CsvEscape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void WriteCsvRow(std::ostream& out, std::span<const std::string> fields) {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out << ',';
    out << CsvEscape(fields[i]);
  }
  out << '\n';
}

std::string FormatDouble(double value) {
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, end);
}

}  // namespace tabsynth
