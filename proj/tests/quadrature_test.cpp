// Copyright 2026 The gspbias Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gspbias/quadrature.hpp"

#include <cmath>
#include <random>
#include <vector>

#include <boost/math/distributions/beta.hpp>
#include <gtest/gtest.h>

#include "gspbias/error.hpp"
#include "gspbias/random.hpp"
#include "gspbias/sim.hpp"

namespace gspbias {
namespace {

using Dists = std::vector<ScoreDistribution>;

ErrorCode CodeOf(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kInvalidArgument;
}

Dists Repeat(const ScoreDistribution& d, int m) { return Dists(static_cast<std::size_t>(m), d); }

ScoreDistribution SampleEmpirical() {
  const std::vector<double> counts{1, 3, 6, 4, 2, 1};
  return ScoreDistribution::Empirical({0.0, 0.01, 0.02, 0.03, 0.05, 0.07, 0.1}, counts);
}

// Poisson-binomial DP over competitors: P(exactly j competitors beat s).
std::vector<double> PoissonBinomial(const Dists& d, int candidate, double s) {
  std::vector<double> p{1.0};
  for (int j = 0; j < static_cast<int>(d.size()); ++j) {
    if (j == candidate) continue;
    const double q = 1.0 - d[static_cast<std::size_t>(j)].Cdf(s);
    std::vector<double> next(p.size() + 1, 0.0);
    for (std::size_t a = 0; a < p.size(); ++a) {
      next[a] += p[a] * (1.0 - q);
      next[a + 1] += p[a] * q;
    }
    p = next;
  }
  return p;
}

TEST(RankProb, Examples) {
  const Dists one{ScoreDistribution::Uniform(0, 1)};
  for (double s : {0.0, 0.3, 1.0}) EXPECT_EQ(RankProbGivenScore(one, 0, 1, s), 1.0);
  const Dists two = Repeat(ScoreDistribution::Uniform(0, 1), 2);
  EXPECT_NEAR(RankProbGivenScore(two, 0, 1, 0.7), 0.7, 1e-15);
  const Dists three = Repeat(ScoreDistribution::Uniform(0, 1), 3);
  EXPECT_NEAR(RankProbGivenScore(three, 0, 2, 0.5), 0.5, 1e-15);
}

TEST(RankProb, MatchesMonteCarloRankFrequency) {
  // Candidate fixed at s = 0.5 against two Uniform(0, 1) competitors.
  CounterRng rng(StreamKey(11, {0}));
  const int draws = 1'000'000;
  int rank2 = 0;
  for (int t = 0; t < draws; ++t) {
    const int above = (rng.Uniform() > 0.5) + (rng.Uniform() > 0.5);
    rank2 += above == 1;
  }
  const double freq = rank2 / static_cast<double>(draws);
  EXPECT_NEAR(freq, 0.5, 4 * std::sqrt(0.25 / draws));
}

TEST(RankProb, SubsetEnumerationMatchesPoissonBinomialDp) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 60; ++rep) {
    const int m = 1 + rep % 7;
    Dists d;
    for (int j = 0; j < m; ++j) {
      switch ((rep + j) % 3) {
        case 0: {
          const double lo = 0.5 * u(gen);
          d.push_back(ScoreDistribution::Uniform(lo, lo + 0.1 + u(gen)));
          break;
        }
        case 1: d.push_back(ScoreDistribution::ScaledBeta(1 + 5 * u(gen), 1 + 40 * u(gen), 0.5 + u(gen))); break;
        default: d.push_back(SampleEmpirical()); break;
      }
    }
    const int cand = rep % m;
    Eigen::ArrayXd grid = Eigen::ArrayXd::LinSpaced(50, 0.0, 1.6);
    const Eigen::ArrayXXd table = RankProbTable(d, cand, grid);
    for (Eigen::Index g = 0; g < grid.size(); ++g) {
      const auto dp = PoissonBinomial(d, cand, grid(g));
      for (int k = 1; k <= m; ++k) {
        ASSERT_NEAR(table(g, k - 1), dp[static_cast<std::size_t>(k - 1)], 1e-13);
        ASSERT_NEAR(RankProbGivenScore(d, cand, k, grid(g)), table(g, k - 1), 1e-15);
      }
    }
  }
}

TEST(RankProb, NormalizesOnFineGrid) {
  const Dists d{ScoreDistribution::Uniform(0, 1), ScoreDistribution::ScaledBeta(2, 38, 1),
                ScoreDistribution::ScaledBeta(3, 5, 0.8), SampleEmpirical(),
                ScoreDistribution::Uniform(0.2, 0.4), ScoreDistribution::Uniform(0, 0.05)};
  const Eigen::ArrayXd grid = Eigen::ArrayXd::LinSpaced(1000, 0.0, 1.0);
  for (int cand = 0; cand < 6; ++cand) {
    const Eigen::ArrayXXd table = RankProbTable(d, cand, grid);
    EXPECT_LT((table.rowwise().sum() - 1.0).abs().maxCoeff(), 1e-9);
    EXPECT_GE(table.minCoeff(), 0.0);
    EXPECT_LE(table.maxCoeff(), 1.0 + 1e-12);
  }
}

TEST(RankProb, Errors) {
  const Dists d = Repeat(ScoreDistribution::Uniform(0, 1), 13);
  EXPECT_EQ(CodeOf([&] { RankProbGivenScore(d, 0, 1, 0.5); }), ErrorCode::kCombinatorialLimit);
  EXPECT_EQ(CodeOf([&] { ConditionalScoreMean(d, 0, 1); }), ErrorCode::kCombinatorialLimit);
  const Dists two = Repeat(ScoreDistribution::Uniform(0, 1), 2);
  EXPECT_EQ(CodeOf([&] { RankProbGivenScore(two, 2, 1, 0.5); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([&] { RankProbGivenScore(two, 0, 3, 0.5); }), ErrorCode::kInvalidArgument);
}

TEST(Distributions, DensitiesIntegrateToOne) {
  for (const ScoreDistribution& d :
       {ScoreDistribution::Uniform(0.2, 0.9), ScoreDistribution::ScaledBeta(2, 38, 1),
        ScoreDistribution::ScaledBeta(250, 4750, 1), ScoreDistribution::ScaledBeta(1, 1, 3),
        SampleEmpirical()}) {
    const QuadratureGrid g = MakeQuadratureGrid(d);
    EXPECT_NEAR((d.Pdf(g.nodes) * g.weights).sum(), 1.0, 1e-9) << d.Describe();
    EXPECT_NEAR((g.nodes * d.Pdf(g.nodes) * g.weights).sum(), d.Mean(), 1e-9) << d.Describe();
    const Eigen::ArrayXd cdf = d.Cdf(g.nodes);
    EXPECT_TRUE(((cdf.tail(cdf.size() - 1) - cdf.head(cdf.size() - 1)) >= 0.0).all());
    EXPECT_EQ(d.Cdf(d.SupportLow() - 1.0), 0.0);
    EXPECT_EQ(d.Cdf(d.SupportHigh() + 1.0), 1.0);
  }
}

TEST(Distributions, EmpiricalCdfIsLinearInsideBins) {
  const ScoreDistribution d = SampleEmpirical();  // weights 1,3,6,4,2,1 over 17
  EXPECT_NEAR(d.Cdf(0.01), 1.0 / 17.0, 1e-15);
  EXPECT_NEAR(d.Cdf(0.015), 2.5 / 17.0, 1e-15);
  EXPECT_NEAR(d.Cdf(0.04), 12.0 / 17.0, 1e-15);
  EXPECT_NEAR(d.Pdf(0.04), 4.0 / 17.0 / 0.02, 1e-12);
}

TEST(Distributions, SamplingMatchesMoments) {
  for (const ScoreDistribution& d :
       {ScoreDistribution::Uniform(0.2, 0.9), ScoreDistribution::ScaledBeta(2, 38, 1.5),
        SampleEmpirical()}) {
    CounterRng rng(StreamKey(5, {1}));
    const int n = 200000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = d.Sample(rng);
      ASSERT_GE(x, d.SupportLow());
      ASSERT_LE(x, d.SupportHigh());
      sum += x;
    }
    EXPECT_NEAR(sum / n, d.Mean(), 4 * std::sqrt(d.Variance() / n)) << d.Describe();
  }
}

TEST(Distributions, RejectsInvalidParameters) {
  EXPECT_EQ(CodeOf([] { ScoreDistribution::Uniform(1, 1); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { ScoreDistribution::Uniform(-1, 1); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { ScoreDistribution::ScaledBeta(0.5, 2, 1); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { ScoreDistribution::ScaledBeta(2, 2, 0); }), ErrorCode::kInvalidArgument);
  const std::vector<double> counts{1, 2};
  EXPECT_EQ(CodeOf([&] { ScoreDistribution::Empirical({0, 1}, counts); }),
            ErrorCode::kGridMismatch);
}

TEST(ConditionalMean, UniformPairOrderStatistics) {
  const Dists d = Repeat(ScoreDistribution::Uniform(0, 1), 2);
  EXPECT_NEAR(ConditionalScoreMean(d, 0, 1), 2.0 / 3.0, 1e-4);
  EXPECT_NEAR(ConditionalScoreMean(d, 0, 2), 1.0 / 3.0, 1e-4);
  EXPECT_NEAR(ConditionalScoreMean(d, 1, 1), 2.0 / 3.0, 1e-9);
}

TEST(ConditionalMean, UniformOrderStatisticsClosedForm) {
  for (int m : {3, 4, 6}) {
    const Dists d = Repeat(ScoreDistribution::Uniform(0, 1), m);
    const auto moments = ConditionalScoreMoments(d, 0);
    for (int k = 1; k <= m; ++k) {
      EXPECT_NEAR(moments[static_cast<std::size_t>(k - 1)].probability, 1.0 / m, 1e-9);
      EXPECT_NEAR(*moments[static_cast<std::size_t>(k - 1)].conditional_mean,
                  static_cast<double>(m - k + 1) / (m + 1), 1e-9);
    }
  }
}

TEST(ConditionalMean, IidBetaMatchesOrderStatisticIntegral) {
  // Independent oracle: E of the k-th largest of m iid Beta(2, 38) by a
  // midpoint rule on Boost's density and CDF.
  const int m = 4;
  const boost::math::beta_distribution<double> beta(2.0, 38.0);
  const Dists d = Repeat(ScoreDistribution::ScaledBeta(2, 38, 1), m);
  const auto moments = ConditionalScoreMoments(d, 0);
  for (int k = 1; k <= m; ++k) {
    const double coef = m * std::tgamma(m) / (std::tgamma(k) * std::tgamma(m - k + 1)) / m;
    const int n = 400000;
    double mass = 0.0;
    double first = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = (i + 0.5) / n;
      const double F = boost::math::cdf(beta, x);
      const double w = coef * std::pow(F, m - k) * std::pow(1 - F, k - 1) *
                       boost::math::pdf(beta, x) / n;
      mass += w;
      first += x * w;
    }
    const RankMoments& rm = moments[static_cast<std::size_t>(k - 1)];
    EXPECT_NEAR(rm.probability, mass, 1e-7);
    EXPECT_NEAR(*rm.conditional_mean, first / mass, 1e-7);
  }
  for (int k = 1; k < m; ++k) {
    EXPECT_GE(*moments[static_cast<std::size_t>(k - 1)].conditional_mean,
              *moments[static_cast<std::size_t>(k)].conditional_mean);
  }
}

TEST(ConditionalMean, DisjointSupportsAreUnbiased) {
  const Dists d{ScoreDistribution::Uniform(0, 0.4), ScoreDistribution::Uniform(0.6, 1.0)};
  EXPECT_NEAR(ConditionalScoreMean(d, 0, 2), 0.2, 1e-9);
  EXPECT_NEAR(ConditionalScoreMean(d, 1, 1), 0.8, 1e-9);
  EXPECT_EQ(CodeOf([&] { ConditionalScoreMean(d, 0, 1); }), ErrorCode::kRankUnreachable);
  EXPECT_EQ(CodeOf([&] { CheckPhiPsi(d, 0); }), ErrorCode::kRankUnreachable);
}

Dists RandomConfig(std::mt19937_64& gen, int m) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dists d;
  for (int j = 0; j < m; ++j) {
    switch (static_cast<int>(3 * u(gen))) {
      case 0: {
        const double lo = 0.1 * u(gen);
        d.push_back(ScoreDistribution::Uniform(lo, lo + 0.02 + 0.1 * u(gen)));
        break;
      }
      case 1: d.push_back(ScoreDistribution::ScaledBeta(1 + 4 * u(gen), 10 + 40 * u(gen), 0.5 + u(gen))); break;
      default: d.push_back(SampleEmpirical()); break;
    }
  }
  return d;
}

TEST(ConditionalMean, OrderingAndMarginalsOnRandomConfigs) {
  std::mt19937_64 gen(23);
  for (int rep = 0; rep < 8; ++rep) {
    const int m = 2 + rep % 5;
    const Dists d = RandomConfig(gen, m);
    for (int cand = 0; cand < m; cand += 3) {
      const auto moments = ConditionalScoreMoments(d, cand);
      double total = 0.0;
      for (const RankMoments& rm : moments) total += rm.probability;
      ASSERT_NEAR(total, 1.0, 1e-6);
      for (int k = 1; k < m; ++k) {
        const auto& a = moments[static_cast<std::size_t>(k - 1)].conditional_mean;
        const auto& b = moments[static_cast<std::size_t>(k)].conditional_mean;
        if (a && b) {
          ASSERT_GE(*a, *b - 1e-6) << "rep " << rep << " k " << k;
        }
      }
    }
  }
}

TEST(ConditionalMean, AgreesWithMonteCarlo) {
  const Dists d{ScoreDistribution::ScaledBeta(2, 38, 1), ScoreDistribution::ScaledBeta(3, 47, 1),
                ScoreDistribution::Uniform(0.02, 0.08), SampleEmpirical()};
  const ScoreMonteCarlo mc = RunScoreMonteCarlo(d, 400000, 77, 0, 1);
  for (int cand = 0; cand < 4; ++cand) {
    const auto moments = ConditionalScoreMoments(d, cand);
    for (int k = 1; k <= 4; ++k) {
      const RankAccumulator& acc = mc.cells[static_cast<std::size_t>(cand)][static_cast<std::size_t>(k - 1)];
      const RankMoments& rm = moments[static_cast<std::size_t>(k - 1)];
      ASSERT_TRUE(rm.conditional_mean);
      ASSERT_GT(acc.count, 1000);
      EXPECT_NEAR(acc.Mean(), *rm.conditional_mean, 4 * *acc.StandardError());
      const double p = rm.probability;
      EXPECT_NEAR(acc.count / 400000.0, p, 4 * std::sqrt(p * (1 - p) / 400000.0));
    }
  }
}

TEST(PhiPsi, ZeroIntegralAndMonotone) {
  const std::vector<Dists> configs{
      Repeat(ScoreDistribution::Uniform(0, 1), 2),
      {ScoreDistribution::Uniform(0, 1), ScoreDistribution::Uniform(0.2, 0.8),
       ScoreDistribution::Uniform(0.5, 1.5)},
      Repeat(ScoreDistribution::ScaledBeta(2, 38, 1), 4),
      {ScoreDistribution::ScaledBeta(2, 38, 1), SampleEmpirical(),
       ScoreDistribution::Uniform(0, 0.1)}};
  for (const Dists& d : configs) {
    for (int cand = 0; cand < static_cast<int>(d.size()); ++cand) {
      const PhiPsiCheck c = CheckPhiPsi(d, cand);
      EXPECT_NEAR(c.zero_integral, 0.0, 1e-6);
      EXPECT_GE(c.weighted_integral, -1e-6);
      EXPECT_TRUE(c.phi_monotone);
      EXPECT_TRUE(c.psi_monotone);
    }
  }
  const Dists iid = Repeat(ScoreDistribution::Uniform(0, 1), 2);
  EXPECT_NEAR(CheckPhiPsi(iid, 0).alpha, 1.0, 1e-9);
  const Dists single{ScoreDistribution::Uniform(0, 1)};
  EXPECT_EQ(CodeOf([&] { CheckPhiPsi(single, 0); }), ErrorCode::kRankUnreachable);
}

std::vector<double> Edges(double lo, double hi, int bins) {
  std::vector<double> e(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) e[static_cast<std::size_t>(b)] = lo + (hi - lo) * b / bins;
  return e;
}

DensityGrid Gaussian(const std::vector<double>& edges, double mean, double sd) {
  DensityGrid g{edges, {}};
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
    const double x = 0.5 * (edges[b] + edges[b + 1]);
    g.values.push_back(std::exp(-0.5 * std::pow((x - mean) / sd, 2)) / (sd * std::sqrt(2 * M_PI)));
  }
  return g;
}

TEST(Splittable, IdenticalGrids) {
  const auto edges = Edges(0, 0.1, 50);
  const DensityGrid f = Gaussian(edges, 0.05, 0.01);
  const SplitVerdict v = CheckSplittable(f, f, 0.0);
  EXPECT_TRUE(v.splittable);
  EXPECT_EQ(v.bin, 0u);
}

TEST(Splittable, EqualVarianceGaussiansCrossAtMidpoint) {
  const auto edges = Edges(0.0, 0.1, 200);
  const double width = 0.1 / 200;
  const DensityGrid f = Gaussian(edges, 0.05, 0.005);
  const DensityGrid g = Gaussian(edges, 0.045, 0.005);
  const SplitVerdict v = CheckSplittable(f, g, 0.0);
  ASSERT_TRUE(v.splittable);
  EXPECT_NEAR(v.location, 0.0475, width);
  // Swapping the roles fails: the higher density sits on the wrong side.
  EXPECT_FALSE(CheckSplittable(g, f, 0.0).splittable);
}

TEST(Splittable, ThreeCrossingsAreNotSplittable) {
  const auto edges = Edges(0.0, 1.0, 100);
  DensityGrid f = Gaussian(edges, 0.25, 0.08);
  const DensityGrid f2 = Gaussian(edges, 0.75, 0.08);
  for (std::size_t b = 0; b < f.values.size(); ++b) f.values[b] = 0.5 * (f.values[b] + f2.values[b]);
  const DensityGrid g = Gaussian(edges, 0.5, 0.2);
  int sign_changes = 0;
  for (std::size_t b = 1; b < f.values.size(); ++b) {
    sign_changes += (f.values[b] > g.values[b]) != (f.values[b - 1] > g.values[b - 1]);
  }
  ASSERT_GE(sign_changes, 3);
  EXPECT_FALSE(CheckSplittable(f, g, 0.0).splittable);
}

TEST(Splittable, ToleranceAbsorbsNoise) {
  const auto edges = Edges(0.0, 1.0, 4);
  const DensityGrid f{edges, {0.9, 1.02, 1.1, 1.2}};
  const DensityGrid g{edges, {1.0, 0.98, 1.05, 0.8}};
  // Bin 1 has f > g before bin 2's f > g: splittable at 1 with zero tolerance.
  EXPECT_EQ(CheckSplittable(f, g, 0.0).bin, 1u);
  const DensityGrid h{edges, {0.9, 1.02, 0.99, 1.2}};
  EXPECT_FALSE(CheckSplittable(h, g, 0.0).splittable);
  EXPECT_TRUE(CheckSplittable(h, g, 0.1).splittable);
}

TEST(Splittable, GridMismatch) {
  const DensityGrid f{Edges(0, 1, 4), {1, 1, 1, 1}};
  const DensityGrid g{Edges(0, 1, 5), {1, 1, 1, 1, 1}};
  EXPECT_EQ(CodeOf([&] { CheckSplittable(f, g, 0.0); }), ErrorCode::kGridMismatch);
  const std::vector<double> tol(3, 0.0);
  EXPECT_EQ(CodeOf([&] { CheckSplittable(f, f, tol); }), ErrorCode::kGridMismatch);
}

TEST(ConditionalDensity, NormalizedAndSplittableForAdjacentRanks) {
  const Dists d = Repeat(ScoreDistribution::ScaledBeta(2, 38, 1), 3);
  const auto edges = Edges(0.0, 0.4, 4000);
  for (int k = 1; k <= 3; ++k) {
    const DensityGrid g = ConditionalDensityGrid(d, 0, k, edges);
    double mass = 0.0;
    for (double v : g.values) mass += v * 1e-4;
    EXPECT_NEAR(mass, 1.0, 1e-5);
  }
  for (int k = 1; k < 3; ++k) {
    EXPECT_TRUE(CheckSplittable(ConditionalDensityGrid(d, 0, k, edges),
                                ConditionalDensityGrid(d, 0, k + 1, edges), 0.0)
                    .splittable);
  }
}

}  // namespace
}  // namespace gspbias
