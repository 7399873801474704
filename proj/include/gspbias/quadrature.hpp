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

#ifndef GSPBIAS_QUADRATURE_HPP_
#define GSPBIAS_QUADRATURE_HPP_

// Conditional rank probabilities and conditional score moments for
// mutually independent, non-negative ranking scores.
//
// For candidate i with score s, a competitor j outranks i with probability
// 1 - F_j(s). Rank k therefore has probability
//
//   P(r_i = k | s) = sum_{|E| = k-1} prod_{l in E} (1 - F_l(s)) prod_{j not in E} F_j(s)
//
// over subsets E of the competitors. Conditional means follow by
// integrating s * p_i(s) * P(r_i = k | s) with composite Simpson on a fixed
// grid spanning the candidate's support.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "gspbias/random.hpp"

namespace gspbias {

struct UniformScore {
  double low = 0.0;
  double high = 1.0;
  friend bool operator==(const UniformScore&, const UniformScore&) = default;
};

// scale * Beta(alpha, beta); alpha, beta >= 1 keeps the density bounded.
struct ScaledBetaScore {
  double alpha = 1.0;
  double beta = 1.0;
  double scale = 1.0;
  friend bool operator==(const ScaledBetaScore&, const ScaledBetaScore&) = default;
};

// Piecewise-constant density over contiguous bins; weights sum to one.
struct EmpiricalScore {
  std::vector<double> edges;
  std::vector<double> weights;
  friend bool operator==(const EmpiricalScore&, const EmpiricalScore&) = default;
};

class ScoreDistribution {
 public:
  using Kind = std::variant<UniformScore, ScaledBetaScore, EmpiricalScore>;

  static ScoreDistribution Uniform(double low, double high);
  static ScoreDistribution ScaledBeta(double alpha, double beta, double scale);
  // Counts per bin; edges.size() == counts.size() + 1.
  static ScoreDistribution Empirical(std::vector<double> edges,
                                     std::span<const double> counts);

  double Pdf(double s) const;
  double Cdf(double s) const;
  Eigen::ArrayXd Pdf(const Eigen::ArrayXd& s) const;
  Eigen::ArrayXd Cdf(const Eigen::ArrayXd& s) const;

  double SupportLow() const;
  double SupportHigh() const;
  double Mean() const;
  double Variance() const;
  // Points where the density may jump, including both support ends.
  std::vector<double> Breakpoints() const;

  double Sample(CounterRng& rng) const;

  const Kind& kind() const { return kind_; }
  std::string Describe() const;

  friend bool operator==(const ScoreDistribution&, const ScoreDistribution&) = default;

 private:
  explicit ScoreDistribution(Kind kind) : kind_(std::move(kind)) {}
  Kind kind_;
};

inline constexpr int kMaxExactParticipants = 12;
inline constexpr int kSimpsonIntervals = 1 << 17;
inline constexpr double kUnreachableRankProbability = 1e-12;

// P(r_i = k | s_i = s); `candidate` is 0-based, `rank` 1-based. Throws
// kCombinatorialLimit for more than kMaxExactParticipants scores and
// kInvalidArgument for out-of-range indices.
double RankProbGivenScore(std::span<const ScoreDistribution> dists, int candidate,
                          int rank, double s);

// Same quantity for every rank at every point of `grid`: column k - 1 holds
// rank k.
Eigen::ArrayXXd RankProbTable(std::span<const ScoreDistribution> dists, int candidate,
                              const Eigen::ArrayXd& grid);

// Simpson nodes and weights over the candidate's support, split at density
// breakpoints so every segment is smooth.
struct QuadratureGrid {
  Eigen::ArrayXd nodes;
  Eigen::ArrayXd weights;
};
QuadratureGrid MakeQuadratureGrid(const ScoreDistribution& dist,
                                  int intervals = kSimpsonIntervals);

struct RankMoments {
  int rank = 0;
  double probability = 0.0;              // P(r_i = k)
  std::optional<double> conditional_mean;  // empty when the rank is unreachable
};

// P(r_i = k) and E[S_i | r_i = k] for k = 1..m.
std::vector<RankMoments> ConditionalScoreMoments(std::span<const ScoreDistribution> dists,
                                                 int candidate);

// E[S_i | r_i = k]. Throws kRankUnreachable when P(r_i = k) < 1e-12.
double ConditionalScoreMean(std::span<const ScoreDistribution> dists, int candidate,
                            int rank);

// Rank-1 versus rank-2 decomposition with
//   phi(s) = prod F_j + a * sum_l F_l prod_{j != l} F_j,
//   psi(s) = a * sum_l prod_{j != l} F_j,  a = P(r=1) / P(r=2),
// so that phi - psi = P(r=1|s) - a P(r=2|s).
struct PhiPsiCheck {
  double alpha = 0.0;
  double zero_integral = 0.0;     // int p(s) [phi - psi] ds, zero in theory
  double weighted_integral = 0.0;  // int s p(s) [phi - psi] ds, >= 0 in theory
  bool phi_monotone = false;
  bool psi_monotone = false;
};
// Throws kRankUnreachable when rank 1 or rank 2 has negligible probability.
PhiPsiCheck CheckPhiPsi(std::span<const ScoreDistribution> dists, int candidate);

// Values sampled on shared bins: values[b] belongs to [edges[b], edges[b+1]).
struct DensityGrid {
  std::vector<double> edges;
  std::vector<double> values;
};

struct SplitVerdict {
  bool splittable = false;
  std::size_t bin = 0;     // first bin of the f >= g side
  double location = 0.0;   // left edge of that bin
};

// Smallest bin v with f <= g + tol on every bin below v and f >= g - tol on
// every bin from v on. Throws kGridMismatch when the grids differ.
SplitVerdict CheckSplittable(const DensityGrid& f, const DensityGrid& g, double tolerance);
SplitVerdict CheckSplittable(const DensityGrid& f, const DensityGrid& g,
                             std::span<const double> tolerance_per_bin);

// p_i(s) P(r_i = k | s) / P(r_i = k) evaluated at bin centres.
DensityGrid ConditionalDensityGrid(std::span<const ScoreDistribution> dists, int candidate,
                                   int rank, std::span<const double> edges);
// Same, with P(r_i = k) supplied by the caller.
DensityGrid ConditionalDensityGrid(std::span<const ScoreDistribution> dists, int candidate,
                                   int rank, std::span<const double> edges,
                                   double rank_probability);

}  // namespace gspbias

#endif  // GSPBIAS_QUADRATURE_HPP_
