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

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <gtest/gtest.h>

namespace tabsynth {
namespace {

TableSchema MakeSchema(std::vector<std::pair<std::string, int>> shape) {
  std::vector<Variable> vars;
  for (const auto& [name, n] : shape) {
    Variable v{name, {}};
    for (int c = 0; c < n; ++c) v.categories.push_back(name + std::to_string(c));
    vars.push_back(std::move(v));
  }
  return *TableSchema::Create(std::move(vars));
}

TEST(TableSchema, RejectsMalformedVariables) {
  EXPECT_FALSE(TableSchema::Create({}).ok());
  EXPECT_FALSE(TableSchema::Create({{"A", {"x"}}}).ok());
  EXPECT_FALSE(TableSchema::Create({{"", {"x", "y"}}}).ok());
  EXPECT_FALSE(TableSchema::Create({{"A", {"x", "x"}}}).ok());
  EXPECT_FALSE(
      TableSchema::Create({{"A", {"x", "y"}}, {"A", {"u", "v"}}}).ok());
}

TEST(TableSchema, RejectsCellCountOverflow) {
  Variable big{"V", {}};
  for (int c = 0; c < 1 << 16; ++c) big.categories.push_back(std::to_string(c));
  std::vector<Variable> vars;
  for (int i = 0; i < 4; ++i) {
    vars.push_back(big);
    vars.back().name += std::to_string(i);
  }
  EXPECT_FALSE(TableSchema::Create(vars).ok());
  vars.pop_back();
  ASSERT_TRUE(TableSchema::Create(vars).ok());
  EXPECT_EQ(TableSchema::Create(vars)->num_cells(), int64_t{1} << 48);
}

TEST(TableSchema, LastVariableVariesFastest) {
  TableSchema s = MakeSchema({{"A", 2}, {"B", 3}, {"C", 4}});
  EXPECT_EQ(s.num_cells(), 24);
  EXPECT_EQ(s.stride(0), 12);
  EXPECT_EQ(s.stride(1), 4);
  EXPECT_EQ(s.stride(2), 1);
  int64_t expected = 0;
  for (int32_t a = 0; a < 2; ++a) {
    for (int32_t b = 0; b < 3; ++b) {
      for (int32_t c = 0; c < 4; ++c) {
        std::vector<int32_t> cats = {a, b, c};
        EXPECT_EQ(s.CellIndex(cats), expected);
        EXPECT_EQ(s.CategoriesOf(expected), cats);
        ++expected;
      }
    }
  }
}

TEST(TableSchema, Lookups) {
  TableSchema s = MakeSchema({{"A", 2}, {"B", 3}});
  EXPECT_EQ(s.VariableIndex("B"), 1u);
  EXPECT_FALSE(s.VariableIndex("Z").has_value());
  EXPECT_EQ(s.CategoryIndex(1, "B2"), 2);
  EXPECT_FALSE(s.CategoryIndex(1, "A0").has_value());
}

TEST(ContingencyTable, ValidatesCounts) {
  TableSchema s = MakeSchema({{"A", 2}, {"B", 2}});
  EXPECT_FALSE(ContingencyTable::Create(s, Counts::Zero(3)).ok());
  Counts negative(4);
  negative << 1, -1, 0, 0;
  EXPECT_FALSE(ContingencyTable::Create(s, negative).ok());
  Counts overflow(4);
  overflow << std::numeric_limits<int64_t>::max(), 1, 0, 0;
  absl::StatusOr<ContingencyTable> t = ContingencyTable::Create(s, overflow);
  ASSERT_FALSE(t.ok());
  EXPECT_EQ(t.status().code(), absl::StatusCode::kOutOfRange);
  Counts ok(4);
  ok << 3, 0, 5, 2;
  t = ContingencyTable::Create(s, ok);
  ASSERT_TRUE(t.ok());
  EXPECT_EQ(t->total(), 10);
  std::vector<std::pair<int64_t, int64_t>> seen;
  t->ForEachNonzero([&](int64_t c, int64_t n) { seen.emplace_back(c, n); });
  EXPECT_EQ(seen, (std::vector<std::pair<int64_t, int64_t>>{
                      {0, 3}, {2, 5}, {3, 2}}));
}

TEST(Fingerprint, SensitiveToCountsAndLabels) {
  TableSchema s = MakeSchema({{"A", 2}, {"B", 2}});
  Counts c(4);
  c << 1, 2, 3, 4;
  ContingencyTable t = *ContingencyTable::Create(s, c);
  EXPECT_EQ(Fingerprint(t), Fingerprint(*ContingencyTable::Create(s, c)));
  Counts c2 = c;
  c2[3] = 5;
  EXPECT_NE(Fingerprint(t), Fingerprint(*ContingencyTable::Create(s, c2)));
  TableSchema renamed = *TableSchema::Create(
      {{"A", {"A0", "A1"}}, {"B", {"B0", "Bx"}}});
  EXPECT_NE(Fingerprint(t), Fingerprint(*ContingencyTable::Create(renamed, c)));
}

TEST(CellHistogram, CountsSizesIncludingZeros) {
  TableSchema s = MakeSchema({{"A", 3}, {"B", 3}});
  Counts c(9);
  c << 0, 1, 1, 2, 0, 0, 7, 1, 15;
  CellHistogram h = Histogram(*ContingencyTable::Create(s, c));
  EXPECT_EQ(h.num_cells(), 9);
  EXPECT_EQ(h.frequencies(),
            (std::map<int64_t, int64_t>{{0, 3}, {1, 3}, {2, 1}, {7, 1},
                                        {15, 1}}));
  EXPECT_DOUBLE_EQ(h.proportion(1), 3.0 / 9.0);
  EXPECT_EQ(h.frequency(4), 0);
  EXPECT_EQ(h.support(), (std::vector<int64_t>{0, 1, 2, 7, 15}));

  std::vector<HistogramRow> rows = h.Bucketed(5);
  ASSERT_EQ(rows.size(), 7u);
  EXPECT_EQ(rows[0].label, "0");
  EXPECT_EQ(rows[0].frequency, 3);
  EXPECT_EQ(rows[3].frequency, 0);
  EXPECT_EQ(rows[6].label, "6+");
  EXPECT_EQ(rows[6].min_size, 6);
  EXPECT_EQ(rows[6].frequency, 2);
  double sum = 0;
  for (const HistogramRow& r : rows) sum += r.proportion;
  EXPECT_NEAR(sum, 1.0, 1e-15);
}

TEST(CellHistogram, FromFrequenciesValidates) {
  EXPECT_FALSE(CellHistogram::FromFrequencies({}).ok());
  EXPECT_FALSE(CellHistogram::FromFrequencies({{-1, 2}}).ok());
  EXPECT_FALSE(CellHistogram::FromFrequencies({{1, -2}}).ok());
  EXPECT_FALSE(CellHistogram::FromFrequencies({{0, 0}}).ok());
  absl::StatusOr<CellHistogram> h =
      CellHistogram::FromFrequencies({{0, 5}, {3, 0}, {4, 5}});
  ASSERT_TRUE(h.ok());
  EXPECT_EQ(h->support(), (std::vector<int64_t>{0, 4}));
  EXPECT_EQ(h->num_cells(), 10);
}

// Brute-force oracle: walk every cell and accumulate by the kept categories.
TEST(Marginal, MatchesBruteForceSum) {
  TableSchema s = MakeSchema({{"A", 3}, {"B", 4}, {"C", 2}, {"D", 5}});
  Counts c(s.num_cells());
  for (int64_t i = 0; i < c.size(); ++i) c[i] = (i * 7919) % 13;
  ContingencyTable t = *ContingencyTable::Create(s, c);

  std::vector<std::string> keep = {"D", "B"};  // order in the request is ignored
  absl::StatusOr<ContingencyTable> m = Marginal(t, keep);
  ASSERT_TRUE(m.ok()) << m.status();
  ASSERT_EQ(m->schema().num_variables(), 2u);
  EXPECT_EQ(m->schema().variable(0).name, "B");
  EXPECT_EQ(m->schema().variable(1).name, "D");
  EXPECT_EQ(m->total(), t.total());
  std::map<std::pair<int, int>, int64_t> oracle;
  for (int64_t i = 0; i < c.size(); ++i) {
    std::vector<int32_t> cats = s.CategoriesOf(i);
    oracle[{cats[1], cats[3]}] += c[i];
  }
  for (const auto& [key, value] : oracle) {
    std::vector<int32_t> cats = {key.first, key.second};
    EXPECT_EQ(m->count(m->schema().CellIndex(cats)), value);
  }
}

TEST(Marginal, TwoByTwoRowSums) {
  TableSchema s = MakeSchema({{"R", 2}, {"C", 2}});
  Counts c(4);
  c << 1, 2, 3, 4;
  ContingencyTable t = *ContingencyTable::Create(s, c);
  std::vector<std::string> rows = {"R"};
  ContingencyTable m = *Marginal(t, rows);
  EXPECT_EQ(m.counts(), (Counts(2) << 3, 7).finished());
  std::vector<std::string> all = {"C", "R"};
  EXPECT_EQ(*Marginal(t, all), t);
}

TEST(Marginal, Commutes) {
  TableSchema s = MakeSchema({{"A", 3}, {"B", 2}, {"C", 4}});
  Counts c(s.num_cells());
  for (int64_t i = 0; i < c.size(); ++i) c[i] = (i * 31) % 7;
  ContingencyTable t = *ContingencyTable::Create(s, c);
  std::vector<std::string> ab = {"A", "C"};
  std::vector<std::string> a = {"C"};
  EXPECT_EQ(*Marginal(*Marginal(t, ab), a), *Marginal(t, a));
}

TEST(CellHistogram, SpecExample) {
  TableSchema s = MakeSchema({{"A", 2}, {"B", 2}});
  Counts c(4);
  c << 0, 0, 1, 2;
  CellHistogram h = Histogram(*ContingencyTable::Create(s, c));
  EXPECT_DOUBLE_EQ(h.proportion(0), 0.5);
  EXPECT_DOUBLE_EQ(h.proportion(1), 0.25);
  EXPECT_DOUBLE_EQ(h.proportion(2), 0.25);
}

TEST(Marginal, RejectsBadRequests) {
  TableSchema s = MakeSchema({{"A", 2}, {"B", 2}});
  ContingencyTable t = ContingencyTable::Zeros(s);
  std::vector<std::string> none;
  EXPECT_FALSE(Marginal(t, none).ok());
  std::vector<std::string> unknown = {"Z"};
  EXPECT_EQ(Marginal(t, unknown).status().code(), absl::StatusCode::kNotFound);
  std::vector<std::string> twice = {"A", "A"};
  EXPECT_FALSE(Marginal(t, twice).ok());
}

}  // namespace
}  // namespace tabsynth
