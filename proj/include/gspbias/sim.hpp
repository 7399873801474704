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

#ifndef GSPBIAS_SIM_HPP_
#define GSPBIAS_SIM_HPP_

// Monte Carlo drivers. Every random draw comes from a CounterRng keyed by
// the master seed and the logical position of the draw (trial index, or
// day and access), so results do not depend on the worker count.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gspbias/auction.hpp"
#include "gspbias/estimators.hpp"
#include "gspbias/quadrature.hpp"

namespace gspbias {

// One Table-1 style setting: m ads, c_i ~ Bin(CTR_i, n_i), estimate c_i / n_i.
struct CpcStudyConfig {
  std::string name;
  std::vector<double> ctrs;
  std::vector<double> bids;                 // empty means unit bids
  std::vector<std::int64_t> impressions;    // one entry shared by all ads, or one per ad
  std::int64_t trials = 20000;
  std::uint64_t seed = 0;

  double Bid(std::size_t ad) const { return bids.empty() ? 1.0 : bids[ad]; }
  std::int64_t Impressions(std::size_t ad) const {
    return impressions.size() == 1 ? impressions[0] : impressions[ad];
  }
  void Validate() const;
};

// Ads of a study are numbered 1..m in config order; per-ad vectors use
// 0-based positions.
struct TrialResult {
  std::int64_t index = 0;
  std::vector<double> estimates;
  std::vector<AdId> ranking;
  std::vector<int> ranks;  // 1-based rank realized by each ad
  AdId winner = 0;
  double cpc = 0.0;  // 0 for degenerate trials
  double winner_score = 0.0;
  double runner_up_score = 0.0;
  bool degenerate = false;  // winner's estimate is zero, price undefined

  double ScoreOf(std::size_t ad, const CpcStudyConfig& config) const {
    return config.Bid(ad) * estimates[ad];
  }
};

std::vector<TrialResult> RunCpcStudy(const CpcStudyConfig& config, int threads = 1);

// Scores (bid x estimate) of `ad` (0-based) over the trials where it realized
// `rank`. Throws kRankUnreachable when no trial qualifies.
std::vector<double> ConditionalRankSamples(std::span<const TrialResult> trials,
                                           const CpcStudyConfig& config, std::size_t ad,
                                           int rank);

// Monte Carlo over independent score draws, accumulating S_i given r_i = k.
struct RankAccumulator {
  std::int64_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
  std::vector<std::int64_t> histogram;

  double Mean() const { return sum / static_cast<double>(count); }
  // Standard error of the mean; empty below two samples.
  std::optional<double> StandardError() const;
};

struct ScoreMonteCarlo {
  std::int64_t trials = 0;
  // cells[i][k - 1]
  std::vector<std::vector<RankAccumulator>> cells;
  // histogram edges per candidate
  std::vector<std::vector<double>> edges;
};

inline constexpr std::int64_t kMonteCarloChunk = 8192;

// `histogram_edges` may be empty (no histograms) or hold one edge vector per
// candidate. `stream` separates configurations sharing a seed.
ScoreMonteCarlo RunScoreMonteCarlo(std::span<const ScoreDistribution> dists,
                                   std::int64_t trials, std::uint64_t seed,
                                   std::uint64_t stream, int threads,
                                   std::vector<std::vector<double>> histogram_edges = {});

// ---------------------------------------------------------------------------
// Two-bucket A/B traffic simulation.

enum class EstimatorKind { kNaive, kPooled, kOracle };
enum class Bucket { kA, kB };

std::string_view EstimatorName(EstimatorKind kind);
char BucketLetter(Bucket bucket);

struct Context {
  int site = 0;
  int pos = 0;
  double multiplier = 1.0;  // true CTR in context = base CTR x multiplier
};

struct AbConfig {
  std::vector<Ad> ads;  // true_ctr is the base CTR
  std::vector<Context> contexts;
  int days = 28;
  int window_days = CountWindow::kDefaultLength;
  int burn_in_days = 14;
  std::int64_t traffic_per_day = 20000;  // accesses per bucket per day
  double epsilon = 0.1;
  double cold_start_ctr = 0.05;
  std::uint64_t seed = 0;
  std::array<EstimatorKind, 2> estimators{EstimatorKind::kNaive, EstimatorKind::kPooled};

  double TrueCtr(std::size_t ad, std::size_t context) const;
  void Validate() const;
};

struct ImpressionRecord {
  int day = 0;
  Bucket bucket = Bucket::kA;
  int site = 0;
  int pos = 0;
  AdId ad_id = 0;
  SelectionMode mode = SelectionMode::kGreedy;
  double pred_ctr = 0.0;
  double bid = 0.0;
  double cpc = 0.0;  // 0 for random-mode displays
  int click = 0;
};

// Sequential simulation of one bucket. Both buckets read the same per-access
// random streams (common random numbers), so identical estimators produce
// identical logs.
std::vector<ImpressionRecord> RunAbBucket(const AbConfig& config, Bucket bucket);

struct AbResult {
  std::vector<ImpressionRecord> bucket_a;
  std::vector<ImpressionRecord> bucket_b;
};

// Runs both buckets, concurrently when threads > 1.
AbResult RunAbExperiment(const AbConfig& config, int threads = 1);

// Records with day >= burn_in_days.
std::vector<ImpressionRecord> EvaluationWindow(std::span<const ImpressionRecord> records,
                                               int burn_in_days);

}  // namespace gspbias

#endif  // GSPBIAS_SIM_HPP_
