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

#include "tabsynth/synthesis.h"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <boost/math/distributions/negative_binomial.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

namespace tabsynth {
namespace {

// A rows x cols table with every cell set to `value`.
ContingencyTable Constant(int rows, int cols, int64_t value) {
  Variable a{"A", {}}, b{"B", {}};
  for (int i = 0; i < rows; ++i) a.categories.push_back(std::to_string(i));
  for (int j = 0; j < cols; ++j) b.categories.push_back(std::to_string(j));
  TableSchema s = *TableSchema::Create({a, b});
  return *ContingencyTable::Create(s, Counts::Constant(s.num_cells(), value));
}

ContingencyTable Mixed(int rows, int cols) {
  ContingencyTable t = Constant(rows, cols, 0);
  Counts c(t.num_cells());
  for (int64_t i = 0; i < c.size(); ++i) {
    c[i] = i % 3 == 0 ? 0 : (i * 37) % 23;
  }
  return *ContingencyTable::Create(t.schema(), c);
}

MechanismConfig Config(Family family, double sigma, std::optional<double> nu,
                       ZeroPolicy policy, int m, uint64_t seed) {
  MechanismConfig c;
  c.family = family;
  c.sigma = sigma;
  c.nu = nu;
  c.zero_policy = policy;
  c.m = m;
  c.master_seed = seed;
  return c;
}

// Discretized GAF moments from the regularized incomplete gamma function.
struct Moments {
  double mean, variance;
};
Moments GafOracle(double mu, double sigma, double nu) {
  const double a = std::pow(sigma, -2) * std::pow(mu, 2 - nu);
  const double s = sigma * sigma * std::pow(mu, nu - 1);
  auto cdf = [&](double x) {
    return x <= 0 ? 0.0 : boost::math::gamma_p(a, x / s);
  };
  double m1 = 0, m2 = 0;
  const double sd = sigma * std::pow(mu, nu / 2);
  for (int y = 0; y < mu + 60 * sd + 50; ++y) {
    const double p = cdf(y + 0.5) - cdf(y - 0.5);
    m1 += y * p;
    m2 += double(y) * y * p;
  }
  return {m1, m2 - m1 * m1};
}

struct Sample {
  double mean, variance, mean_se, variance_se;
};
Sample Summarize(const ReplicateMatrix& x) {
  const double n = static_cast<double>(x.size());
  const Eigen::ArrayXd v = x.reshaped().cast<double>().array();
  const double mean = v.mean();
  const Eigen::ArrayXd d = v - mean;
  const double m2 = d.square().sum() / n;
  const double m4 = d.square().square().sum() / n;
  return {mean, m2 * n / (n - 1), std::sqrt(m2 / n),
          std::sqrt((m4 - m2 * m2) / n)};
}

TEST(ZeroPolicy, ParseAndPrint) {
  EXPECT_EQ(*ParseZeroPolicy("keep"), ZeroPolicy::KeepZero());
  EXPECT_EQ(*ParseZeroPolicy("alpha=0.01"), ZeroPolicy::Pseudocount(0.01));
  EXPECT_EQ(*ParseZeroPolicy("bernoulli=0.005"), ZeroPolicy::Bernoulli(0.005));
  for (const char* bad : {"", "alpha=0", "alpha=-1", "alpha=x", "bernoulli=1.5",
                          "bernoulli=-0.1", "drop"}) {
    EXPECT_FALSE(ParseZeroPolicy(bad).ok()) << bad;
  }
  for (ZeroPolicy p : {ZeroPolicy::KeepZero(), ZeroPolicy::Pseudocount(0.25),
                       ZeroPolicy::Bernoulli(0)}) {
    EXPECT_EQ(*ParseZeroPolicy(ZeroPolicyToString(p)), p);
  }
}

TEST(MechanismConfig, Validation) {
  EXPECT_TRUE(Config(Family::kGaf, 2, -0.5, {}, 1, 0).Validate().ok());
  EXPECT_FALSE(Config(Family::kGaf, 2, std::nullopt, {}, 1, 0).Validate().ok());
  EXPECT_FALSE(Config(Family::kNbi, 0, std::nullopt, {}, 1, 0).Validate().ok());
  EXPECT_FALSE(Config(Family::kPoisson, 1, std::nullopt, {}, 0, 0).Validate().ok());
  EXPECT_TRUE(Config(Family::kPoisson, 1, std::nullopt, {}, 1, 0).Validate().ok());
}

TEST(MechanismConfig, JsonRoundTrip) {
  MechanismConfig c = Config(Family::kGaf, 0.5, -0.25,
                             ZeroPolicy::Bernoulli(0.125), 7, 1ULL << 63);
  MechanismConfig back = *MechanismConfigFromJson(MechanismConfigToJson(c));
  EXPECT_EQ(back.family, c.family);
  EXPECT_EQ(back.sigma, c.sigma);
  EXPECT_EQ(back.nu, c.nu);
  EXPECT_EQ(back.zero_policy, c.zero_policy);
  EXPECT_EQ(back.m, c.m);
  EXPECT_EQ(back.master_seed, c.master_seed);
  EXPECT_FALSE(MechanismConfigFromJson(nlohmann::json::object()).ok());
}

TEST(Synthesize, PoissonOfZeroTableKeepsZeros) {
  SyntheticEnsemble e = *Synthesize(
      Constant(10, 10, 0), Config(Family::kPoisson, 1, {}, {}, 5, 1));
  EXPECT_EQ(e.replicates.rows(), 100);
  EXPECT_EQ(e.m(), 5);
  EXPECT_TRUE((e.replicates.array() == 0).all());
}

TEST(Synthesize, KeepZeroPreservesZeroPattern) {
  ContingencyTable t = Mixed(40, 50);
  for (Family f : {Family::kPoisson, Family::kNbi, Family::kGaf}) {
    SyntheticEnsemble e =
        *Synthesize(t, Config(f, 1.0, -0.5, ZeroPolicy::KeepZero(), 4, 3));
    for (int64_t i = 0; i < t.num_cells(); ++i) {
      if (t.count(i) == 0) {
        EXPECT_TRUE((e.replicates.row(i).array() == 0).all());
      }
    }
    EXPECT_TRUE((e.replicates.array() >= 0).all());
    EXPECT_EQ(e.stats.zero_cells_drawn, 0);
  }
}

TEST(Synthesize, DeterministicAcrossThreadCounts) {
  ContingencyTable t = Mixed(300, 400);  // spans several work chunks
  MechanismConfig c =
      Config(Family::kGaf, 2, -0.5, ZeroPolicy::Pseudocount(0.01), 3, 77);
  SyntheticEnsemble one = *Synthesize(t, c, {.threads = 1});
  SyntheticEnsemble eight = *Synthesize(t, c, {.threads = 8});
  EXPECT_EQ(one.replicates, eight.replicates);
  EXPECT_EQ(one.stats, eight.stats);
  EXPECT_EQ(Fingerprint(one.replicates), Fingerprint(eight.replicates));
  EXPECT_EQ(one.original_fingerprint, Fingerprint(t));

  MechanismConfig other = c;
  other.master_seed = 78;
  EXPECT_NE(Synthesize(t, other)->replicates, one.replicates);
}

TEST(Synthesize, ReplicateIsPureFunctionOfIndex) {
  ContingencyTable t = Mixed(30, 30);
  MechanismConfig c =
      Config(Family::kNbi, 0.5, {}, ZeroPolicy::Bernoulli(0.3), 5, 11);
  SyntheticEnsemble e = *Synthesize(t, c);
  for (int r = 0; r < c.m; ++r) {
    SynthesisStats stats;
    Counts column = *SynthesizeReplicate(t, c, r, &stats, {.threads = 2});
    EXPECT_EQ(column, e.replicates.col(r)) << r;
  }
  MechanismConfig fewer = c;
  fewer.m = 2;
  EXPECT_EQ(Synthesize(t, fewer)->replicates, e.replicates.leftCols(2));
  EXPECT_FALSE(SynthesizeReplicate(t, c, 5).ok());
  EXPECT_FALSE(SynthesizeReplicate(t, c, -1).ok());
}

// 1e5 draws at one count per family: the mean is f (Poisson, NBI) or the
// discretized GAF mean.
TEST(Synthesize, MeansMatchOracle) {
  for (int64_t f : {1, 5, 10, 20, 50}) {
    ContingencyTable t = Constant(100, 100, f);
    for (Family family : {Family::kPoisson, Family::kNbi, Family::kGaf}) {
      SyntheticEnsemble e =
          *Synthesize(t, Config(family, 1.0, -0.5, {}, 10, 100 + f));
      Sample s = Summarize(e.replicates);
      const double expected =
          family == Family::kGaf ? GafOracle(f, 1.0, -0.5).mean : f;
      EXPECT_NEAR(s.mean, expected, 3 * s.mean_se)
          << FamilyName(family) << " f=" << f;
    }
  }
}

TEST(Synthesize, GafIsBiasedOnlyThroughRounding) {
  // Rounding the continuous draw shifts the mean at f=1 by ~4%.
  EXPECT_NEAR(GafOracle(1, 2, -0.5).mean, 0.96134, 1e-5);
  EXPECT_NEAR(GafOracle(50, 2, -0.5).mean, 50, 1e-5);
}

TEST(Synthesize, NoiseAtFifty) {
  ContingencyTable t = Constant(100, 100, 50);
  SyntheticEnsemble gaf = *Synthesize(t, Config(Family::kGaf, 2, -0.5, {}, 10, 5));
  SyntheticEnsemble nbi = *Synthesize(t, Config(Family::kNbi, 0.5, {}, {}, 10, 5));
  Sample g = Summarize(gaf.replicates);
  Sample n = Summarize(nbi.replicates);
  EXPECT_NEAR(g.variance, GafOracle(50, 2, -0.5).variance, 3 * g.variance_se);
  EXPECT_NEAR(n.variance, 50 + 0.5 * 2500, 3 * n.variance_se);
  EXPECT_GT(n.variance / g.variance, 1000);
}

TEST(Synthesize, NbiPseudocountConversionRate) {
  const double sigma = 0.5, alpha = 0.01;
  ContingencyTable t = Constant(500, 400, 0);
  SyntheticEnsemble e = *Synthesize(
      t, Config(Family::kNbi, sigma, {}, ZeroPolicy::Pseudocount(alpha), 2, 9));
  boost::math::negative_binomial_distribution<double> nb(
      1 / sigma, 1 / (1 + sigma * alpha));
  const double p = 1 - boost::math::pdf(nb, 0);
  const double n = static_cast<double>(e.replicates.size());
  const double rate = (e.replicates.array() > 0).cast<double>().sum() / n;
  EXPECT_NEAR(rate, p, 3 * std::sqrt(p * (1 - p) / n));
  EXPECT_NEAR(p, 0.01, 0.001);  // "roughly 1 in 100"
  EXPECT_EQ(e.stats.zero_cells_drawn, e.replicates.size());
  EXPECT_EQ(e.stats.zero_cells_converted, (e.replicates.array() > 0).count());
  EXPECT_EQ(e.stats.zero_cells_to_one, (e.replicates.array() == 1).count());
  EXPECT_EQ(e.stats.max_draw_from_zero, e.replicates.maxCoeff());
}

TEST(Synthesize, BernoulliConvertsAtRateP) {
  const double p = 0.005;
  ContingencyTable t = Constant(500, 400, 0);
  SyntheticEnsemble e = *Synthesize(
      t, Config(Family::kGaf, 2, -0.5, ZeroPolicy::Bernoulli(p), 2, 13));
  const double n = static_cast<double>(e.replicates.size());
  EXPECT_EQ(e.replicates.maxCoeff(), 1);
  const double rate = static_cast<double>(e.replicates.sum()) / n;
  EXPECT_NEAR(rate, p, 3 * std::sqrt(p * (1 - p) / n));
}

TEST(Synthesize, MarginalsUnbiased) {
  ContingencyTable t = Mixed(4, 25);
  const int m = 2000;
  SyntheticEnsemble e =
      *Synthesize(t, Config(Family::kNbi, 0.2, {}, {}, m, 21));
  for (int row = 0; row < 4; ++row) {
    double original = 0, variance = 0;
    Eigen::ArrayXd totals = Eigen::ArrayXd::Zero(m);
    for (int col = 0; col < 25; ++col) {
      const int64_t cell = row * 25 + col;
      const double f = static_cast<double>(t.count(cell));
      original += f;
      variance += f + 0.2 * f * f;
      totals += e.replicates.row(cell).cast<double>().transpose().array();
    }
    EXPECT_NEAR(totals.mean(), original, 3 * std::sqrt(variance / m)) << row;
  }
}

TEST(Synthesize, ClampsAstronomicalDraws) {
  // An exponential draw with mean 4e18 exceeds 2^63 with probability ~0.1.
  ContingencyTable t = Constant(10, 10, 0);
  Counts counts = Counts::Zero(100);
  counts[0] = 4'000'000'000'000'000'000;
  absl::StatusOr<ContingencyTable> one =
      ContingencyTable::Create(t.schema(), counts);
  ASSERT_TRUE(one.ok());
  SyntheticEnsemble e =
      *Synthesize(*one, Config(Family::kGaf, 4e18, 0.0, {}, 200, 3));
  EXPECT_GT(e.stats.clamped_draws, 0);
  EXPECT_EQ(e.stats.clamped_draws, (e.replicates.row(0).array() == kMaxCount).count());
  EXPECT_NEAR(static_cast<double>(e.stats.clamped_draws) / 200,
              std::exp(-9223372036854775808.0 / 4e18), 0.07);
}

}  // namespace
}  // namespace tabsynth
