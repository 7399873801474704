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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include <boost/math/special_functions/beta.hpp>

#include "gspbias/error.hpp"

namespace gspbias {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::size_t BinOf(const EmpiricalScore& e, double s) {
  auto it = std::upper_bound(e.edges.begin(), e.edges.end(), s);
  return static_cast<std::size_t>(it - e.edges.begin()) - 1;
}

void CheckCandidate(std::span<const ScoreDistribution> dists, int candidate) {
  const int m = static_cast<int>(dists.size());
  if (m == 0) throw Error(ErrorCode::kInvalidArgument, "no score distributions");
  if (m > kMaxExactParticipants) {
    throw Error(ErrorCode::kCombinatorialLimit,
                std::to_string(m) + " scores exceed the exact enumeration limit of " +
                    std::to_string(kMaxExactParticipants));
  }
  if (candidate < 0 || candidate >= m) {
    throw Error(ErrorCode::kInvalidArgument, "candidate index out of range");
  }
}

// Depth-first walk over competitor subsets. `partial` holds the product of
// the factors chosen so far; `beaten_by` counts competitors placed above.
void EnumerateSubsets(const std::vector<const Eigen::ArrayXd*>& cdfs, std::size_t next,
                      int beaten_by, const Eigen::ArrayXd& partial,
                      Eigen::ArrayXXd& table) {
  if (next == cdfs.size()) {
    table.col(beaten_by) += partial;
    return;
  }
  const Eigen::ArrayXd& f = *cdfs[next];
  EnumerateSubsets(cdfs, next + 1, beaten_by, partial * f, table);
  EnumerateSubsets(cdfs, next + 1, beaten_by + 1, partial * (1.0 - f), table);
}

// Competitor CDFs on the grid; identical distributions share one array.
std::vector<Eigen::ArrayXd> CompetitorCdfs(std::span<const ScoreDistribution> dists,
                                           int candidate, const Eigen::ArrayXd& grid,
                                           std::vector<const Eigen::ArrayXd*>& refs) {
  std::vector<Eigen::ArrayXd> unique;
  std::vector<const ScoreDistribution*> owners;
  unique.reserve(dists.size());
  std::vector<std::size_t> slot;
  for (std::size_t j = 0; j < dists.size(); ++j) {
    if (static_cast<int>(j) == candidate) continue;
    auto it = std::find_if(owners.begin(), owners.end(),
                           [&](const ScoreDistribution* d) { return *d == dists[j]; });
    if (it == owners.end()) {
      owners.push_back(&dists[j]);
      unique.push_back(dists[j].Cdf(grid));
      slot.push_back(unique.size() - 1);
    } else {
      slot.push_back(static_cast<std::size_t>(it - owners.begin()));
    }
  }
  refs.clear();
  for (std::size_t s : slot) refs.push_back(&unique[s]);
  return unique;
}

}  // namespace

ScoreDistribution ScoreDistribution::Uniform(double low, double high) {
  if (!(low >= 0.0) || !(high > low) || !std::isfinite(high)) {
    throw Error(ErrorCode::kInvalidArgument, "uniform score needs 0 <= low < high");
  }
  return ScoreDistribution(UniformScore{low, high});
}

ScoreDistribution ScoreDistribution::ScaledBeta(double alpha, double beta, double scale) {
  if (!(alpha >= 1.0) || !(beta >= 1.0) || !(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::kInvalidArgument,
                "scaled beta score needs alpha >= 1, beta >= 1, scale > 0");
  }
  return ScoreDistribution(ScaledBetaScore{alpha, beta, scale});
}

ScoreDistribution ScoreDistribution::Empirical(std::vector<double> edges,
                                               std::span<const double> counts) {
  if (edges.size() < 2 || edges.size() != counts.size() + 1) {
    throw Error(ErrorCode::kGridMismatch, "need one more edge than counts");
  }
  if (!(edges.front() >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "empirical scores must be non-negative");
  }
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
    if (!(edges[b + 1] > edges[b])) {
      throw Error(ErrorCode::kGridMismatch, "edges must be strictly increasing");
    }
  }
  double total = 0.0;
  for (double c : counts) {
    if (!(c >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "negative count");
    total += c;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::kNoData, "empty histogram");
  std::vector<double> weights(counts.begin(), counts.end());
  for (double& w : weights) w /= total;
  return ScoreDistribution(EmpiricalScore{std::move(edges), std::move(weights)});
}

double ScoreDistribution::Pdf(double s) const {
  return std::visit(
      Overloaded{
          [s](const UniformScore& u) {
            return (s >= u.low && s <= u.high) ? 1.0 / (u.high - u.low) : 0.0;
          },
          [s](const ScaledBetaScore& b) {
            const double x = s / b.scale;
            if (x < 0.0 || x > 1.0) return 0.0;
            return boost::math::ibeta_derivative(b.alpha, b.beta, x) / b.scale;
          },
          [s](const EmpiricalScore& e) {
            if (s < e.edges.front() || s >= e.edges.back()) return 0.0;
            const std::size_t bin = BinOf(e, s);
            return e.weights[bin] / (e.edges[bin + 1] - e.edges[bin]);
          },
      },
      kind_);
}

double ScoreDistribution::Cdf(double s) const {
  return std::visit(
      Overloaded{
          [s](const UniformScore& u) {
            return std::clamp((s - u.low) / (u.high - u.low), 0.0, 1.0);
          },
          [s](const ScaledBetaScore& b) {
            const double x = s / b.scale;
            if (x <= 0.0) return 0.0;
            if (x >= 1.0) return 1.0;
            return boost::math::ibeta(b.alpha, b.beta, x);
          },
          [s](const EmpiricalScore& e) {
            if (s <= e.edges.front()) return 0.0;
            if (s >= e.edges.back()) return 1.0;
            // Trapezoid accumulation of a piecewise-constant density is exact:
            // linear inside each bin.
            const std::size_t bin = BinOf(e, s);
            double below = 0.0;
            for (std::size_t b = 0; b < bin; ++b) below += e.weights[b];
            const double frac = (s - e.edges[bin]) / (e.edges[bin + 1] - e.edges[bin]);
            return std::min(1.0, below + frac * e.weights[bin]);
          },
      },
      kind_);
}

Eigen::ArrayXd ScoreDistribution::Pdf(const Eigen::ArrayXd& s) const {
  return s.unaryExpr([this](double x) { return Pdf(x); });
}

Eigen::ArrayXd ScoreDistribution::Cdf(const Eigen::ArrayXd& s) const {
  if (const auto* e = std::get_if<EmpiricalScore>(&kind_)) {
    // Cumulative weights once instead of per point.
    std::vector<double> cum(e->weights.size() + 1, 0.0);
    std::partial_sum(e->weights.begin(), e->weights.end(), cum.begin() + 1);
    return s.unaryExpr([&](double x) {
      if (x <= e->edges.front()) return 0.0;
      if (x >= e->edges.back()) return 1.0;
      const std::size_t bin = BinOf(*e, x);
      const double frac = (x - e->edges[bin]) / (e->edges[bin + 1] - e->edges[bin]);
      return std::min(1.0, cum[bin] + frac * e->weights[bin]);
    });
  }
  return s.unaryExpr([this](double x) { return Cdf(x); });
}

double ScoreDistribution::SupportLow() const {
  return std::visit(Overloaded{
                        [](const UniformScore& u) { return u.low; },
                        [](const ScaledBetaScore&) { return 0.0; },
                        [](const EmpiricalScore& e) { return e.edges.front(); },
                    },
                    kind_);
}

double ScoreDistribution::SupportHigh() const {
  return std::visit(Overloaded{
                        [](const UniformScore& u) { return u.high; },
                        [](const ScaledBetaScore& b) { return b.scale; },
                        [](const EmpiricalScore& e) { return e.edges.back(); },
                    },
                    kind_);
}

double ScoreDistribution::Mean() const {
  return std::visit(Overloaded{
                        [](const UniformScore& u) { return 0.5 * (u.low + u.high); },
                        [](const ScaledBetaScore& b) {
                          return b.scale * b.alpha / (b.alpha + b.beta);
                        },
                        [](const EmpiricalScore& e) {
                          double m = 0.0;
                          for (std::size_t b = 0; b < e.weights.size(); ++b) {
                            m += e.weights[b] * 0.5 * (e.edges[b] + e.edges[b + 1]);
                          }
                          return m;
                        },
                    },
                    kind_);
}

double ScoreDistribution::Variance() const {
  return std::visit(
      Overloaded{
          [](const UniformScore& u) {
            const double w = u.high - u.low;
            return w * w / 12.0;
          },
          [](const ScaledBetaScore& b) {
            const double n = b.alpha + b.beta;
            return b.scale * b.scale * b.alpha * b.beta / (n * n * (n + 1.0));
          },
          [this](const EmpiricalScore& e) {
            const double mean = Mean();
            double v = 0.0;
            for (std::size_t b = 0; b < e.weights.size(); ++b) {
              const double lo = e.edges[b] - mean;
              const double hi = e.edges[b + 1] - mean;
              // Second moment of a uniform bin about the mean.
              v += e.weights[b] * (lo * lo + lo * hi + hi * hi) / 3.0;
            }
            return v;
          },
      },
      kind_);
}

std::vector<double> ScoreDistribution::Breakpoints() const {
  if (const auto* e = std::get_if<EmpiricalScore>(&kind_)) return e->edges;
  return {SupportLow(), SupportHigh()};
}

double ScoreDistribution::Sample(CounterRng& rng) const {
  return std::visit(
      Overloaded{
          [&rng](const UniformScore& u) { return u.low + (u.high - u.low) * rng.Uniform(); },
          [&rng](const ScaledBetaScore& b) {
            std::gamma_distribution<double> ga(b.alpha, 1.0);
            std::gamma_distribution<double> gb(b.beta, 1.0);
            const double x = ga(rng);
            const double y = gb(rng);
            return b.scale * x / (x + y);
          },
          [&rng](const EmpiricalScore& e) {
            const double u = rng.Uniform();
            const double v = rng.Uniform();
            double acc = 0.0;
            std::size_t bin = e.weights.size() - 1;
            for (std::size_t b = 0; b < e.weights.size(); ++b) {
              acc += e.weights[b];
              if (u < acc) {
                bin = b;
                break;
              }
            }
            return e.edges[bin] + v * (e.edges[bin + 1] - e.edges[bin]);
          },
      },
      kind_);
}

std::string ScoreDistribution::Describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(Overloaded{
                 [&os](const UniformScore& u) {
                   os << "uniform(" << u.low << ", " << u.high << ")";
                 },
                 [&os](const ScaledBetaScore& b) {
                   os << "scaled_beta(" << b.alpha << ", " << b.beta << ", " << b.scale << ")";
                 },
                 [&os](const EmpiricalScore& e) {
                   os << "empirical(" << e.weights.size() << " bins on [" << e.edges.front()
                      << ", " << e.edges.back() << "])";
                 },
             },
             kind_);
  return os.str();
}

Eigen::ArrayXXd RankProbTable(std::span<const ScoreDistribution> dists, int candidate,
                              const Eigen::ArrayXd& grid) {
  CheckCandidate(dists, candidate);
  const auto m = static_cast<Eigen::Index>(dists.size());
  std::vector<const Eigen::ArrayXd*> refs;
  const std::vector<Eigen::ArrayXd> storage = CompetitorCdfs(dists, candidate, grid, refs);
  Eigen::ArrayXXd table = Eigen::ArrayXXd::Zero(grid.size(), m);
  EnumerateSubsets(refs, 0, 0, Eigen::ArrayXd::Ones(grid.size()), table);
  return table;
}

double RankProbGivenScore(std::span<const ScoreDistribution> dists, int candidate, int rank,
                          double s) {
  CheckCandidate(dists, candidate);
  if (rank < 1 || rank > static_cast<int>(dists.size())) {
    throw Error(ErrorCode::kInvalidArgument, "rank out of range");
  }
  Eigen::ArrayXd grid(1);
  grid << s;
  return RankProbTable(dists, candidate, grid)(0, rank - 1);
}

QuadratureGrid MakeQuadratureGrid(const ScoreDistribution& dist, int intervals) {
  const double lo = dist.SupportLow();
  const double hi = dist.SupportHigh();
  std::vector<double> breaks = dist.Breakpoints();
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  const double total = hi - lo;

  std::vector<double> nodes;
  std::vector<double> weights;
  for (std::size_t seg = 0; seg + 1 < breaks.size(); ++seg) {
    const double a = breaks[seg];
    const double b = breaks[seg + 1];
    const double share = static_cast<double>(intervals) * (b - a) / total;
    const long n = std::max<long>(2, 2 * std::lround(share / 2.0));
    const double h = (b - a) / static_cast<double>(n);
    // End nodes sit a hair inside the segment so a density that jumps at a
    // breakpoint is read from the correct side.
    const double nudge = 1e-10 * (b - a);
    for (long q = 0; q <= n; ++q) {
      double x = a + h * static_cast<double>(q);
      if (q == 0) x = a + nudge;
      if (q == n) x = b - nudge;
      const double w = (q == 0 || q == n) ? 1.0 : (q % 2 == 1 ? 4.0 : 2.0);
      nodes.push_back(x);
      weights.push_back(w * h / 3.0);
    }
  }
  QuadratureGrid grid;
  grid.nodes = Eigen::Map<const Eigen::ArrayXd>(nodes.data(), static_cast<Eigen::Index>(nodes.size()));
  grid.weights =
      Eigen::Map<const Eigen::ArrayXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  return grid;
}

std::vector<RankMoments> ConditionalScoreMoments(std::span<const ScoreDistribution> dists,
                                                 int candidate) {
  CheckCandidate(dists, candidate);
  const QuadratureGrid grid = MakeQuadratureGrid(dists[candidate]);
  const Eigen::ArrayXd density = dists[candidate].Pdf(grid.nodes) * grid.weights;
  const Eigen::ArrayXXd table = RankProbTable(dists, candidate, grid.nodes);
  std::vector<RankMoments> out;
  for (Eigen::Index k = 0; k < table.cols(); ++k) {
    RankMoments rm;
    rm.rank = static_cast<int>(k + 1);
    rm.probability = (density * table.col(k)).sum();
    if (rm.probability >= kUnreachableRankProbability) {
      rm.conditional_mean = (grid.nodes * density * table.col(k)).sum() / rm.probability;
    }
    out.push_back(rm);
  }
  return out;
}

double ConditionalScoreMean(std::span<const ScoreDistribution> dists, int candidate,
                            int rank) {
  CheckCandidate(dists, candidate);
  if (rank < 1 || rank > static_cast<int>(dists.size())) {
    throw Error(ErrorCode::kInvalidArgument, "rank out of range");
  }
  const RankMoments rm = ConditionalScoreMoments(dists, candidate)[rank - 1];
  if (!rm.conditional_mean) {
    throw Error(ErrorCode::kRankUnreachable,
                "P(rank " + std::to_string(rank) + ") is below 1e-12");
  }
  return *rm.conditional_mean;
}

PhiPsiCheck CheckPhiPsi(std::span<const ScoreDistribution> dists, int candidate) {
  CheckCandidate(dists, candidate);
  if (dists.size() < 2) {
    throw Error(ErrorCode::kRankUnreachable, "rank 2 needs at least two scores");
  }
  const QuadratureGrid grid = MakeQuadratureGrid(dists[candidate]);
  const Eigen::ArrayXd density = dists[candidate].Pdf(grid.nodes) * grid.weights;
  const Eigen::ArrayXXd table = RankProbTable(dists, candidate, grid.nodes);
  const double p1 = (density * table.col(0)).sum();
  const double p2 = (density * table.col(1)).sum();
  if (p1 < kUnreachableRankProbability || p2 < kUnreachableRankProbability) {
    throw Error(ErrorCode::kRankUnreachable, "rank 1 or 2 unreachable");
  }
  std::vector<const Eigen::ArrayXd*> cdfs;
  const std::vector<Eigen::ArrayXd> storage = CompetitorCdfs(dists, candidate, grid.nodes, cdfs);
  const Eigen::Index n = grid.nodes.size();

  PhiPsiCheck check;
  check.alpha = p1 / p2;
  Eigen::ArrayXd all = Eigen::ArrayXd::Ones(n);
  for (const Eigen::ArrayXd* f : cdfs) all *= *f;
  Eigen::ArrayXd phi = all;
  Eigen::ArrayXd psi = Eigen::ArrayXd::Zero(n);
  for (std::size_t l = 0; l < cdfs.size(); ++l) {
    Eigen::ArrayXd others = Eigen::ArrayXd::Ones(n);
    for (std::size_t j = 0; j < cdfs.size(); ++j) {
      if (j != l) others *= *cdfs[j];
    }
    phi += check.alpha * (*cdfs[l]) * others;
    psi += check.alpha * others;
  }
  const Eigen::ArrayXd diff = phi - psi;
  check.zero_integral = (density * diff).sum();
  check.weighted_integral = (grid.nodes * density * diff).sum();
  constexpr double kSlack = 1e-12;
  check.phi_monotone = ((phi.tail(n - 1) - phi.head(n - 1)) >= -kSlack).all();
  check.psi_monotone = ((psi.tail(n - 1) - psi.head(n - 1)) >= -kSlack).all();
  return check;
}

namespace {

void CheckSameGrid(const DensityGrid& f, const DensityGrid& g) {
  if (f.edges != g.edges) throw Error(ErrorCode::kGridMismatch, "bin edges differ");
  if (f.edges.size() < 2 || f.values.size() + 1 != f.edges.size() ||
      g.values.size() + 1 != g.edges.size()) {
    throw Error(ErrorCode::kGridMismatch, "values do not match bin count");
  }
}

}  // namespace

SplitVerdict CheckSplittable(const DensityGrid& f, const DensityGrid& g,
                             std::span<const double> tolerance_per_bin) {
  CheckSameGrid(f, g);
  const std::size_t bins = f.values.size();
  if (tolerance_per_bin.size() != bins) {
    throw Error(ErrorCode::kGridMismatch, "tolerance vector does not match bin count");
  }
  // suffix_ok[v]: f >= g - tol on every bin >= v.
  std::vector<bool> suffix_ok(bins + 1, true);
  for (std::size_t b = bins; b-- > 0;) {
    suffix_ok[b] = suffix_ok[b + 1] && f.values[b] >= g.values[b] - tolerance_per_bin[b];
  }
  bool prefix_ok = true;
  for (std::size_t v = 0; v <= bins; ++v) {
    if (!prefix_ok) break;
    if (suffix_ok[v]) {
      const double location = v < bins ? f.edges[v] : f.edges.back();
      return SplitVerdict{true, v, location};
    }
    prefix_ok = f.values[v] <= g.values[v] + tolerance_per_bin[v];
  }
  return SplitVerdict{};
}

SplitVerdict CheckSplittable(const DensityGrid& f, const DensityGrid& g, double tolerance) {
  CheckSameGrid(f, g);
  const std::vector<double> tol(f.values.size(), tolerance);
  return CheckSplittable(f, g, tol);
}

DensityGrid ConditionalDensityGrid(std::span<const ScoreDistribution> dists, int candidate,
                                   int rank, std::span<const double> edges) {
  CheckCandidate(dists, candidate);
  const std::vector<RankMoments> moments = ConditionalScoreMoments(dists, candidate);
  if (rank < 1 || rank > static_cast<int>(moments.size())) {
    throw Error(ErrorCode::kInvalidArgument, "rank out of range");
  }
  return ConditionalDensityGrid(dists, candidate, rank, edges, moments[rank - 1].probability);
}

DensityGrid ConditionalDensityGrid(std::span<const ScoreDistribution> dists, int candidate,
                                   int rank, std::span<const double> edges,
                                   double rank_probability) {
  CheckCandidate(dists, candidate);
  if (edges.size() < 2) throw Error(ErrorCode::kGridMismatch, "need at least one bin");
  if (rank < 1 || rank > static_cast<int>(dists.size())) {
    throw Error(ErrorCode::kInvalidArgument, "rank out of range");
  }
  if (rank_probability < kUnreachableRankProbability) {
    throw Error(ErrorCode::kRankUnreachable, "rank unreachable");
  }
  Eigen::ArrayXd centres(static_cast<Eigen::Index>(edges.size() - 1));
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
    centres(static_cast<Eigen::Index>(b)) = 0.5 * (edges[b] + edges[b + 1]);
  }
  const Eigen::ArrayXXd table = RankProbTable(dists, candidate, centres);
  const Eigen::ArrayXd values =
      dists[candidate].Pdf(centres) * table.col(rank - 1) / rank_probability;
  DensityGrid grid;
  grid.edges.assign(edges.begin(), edges.end());
  grid.values.assign(values.data(), values.data() + values.size());
  return grid;
}

}  // namespace gspbias
