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

#ifndef GSPBIAS_METRICS_HPP_
#define GSPBIAS_METRICS_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gspbias/quadrature.hpp"
#include "gspbias/sim.hpp"

namespace gspbias {

// How the rank-k estimate is normalized by a true CTR.
enum class BiasAttribution {
  // Divide each trial's rank-k estimate by the true CTR of the ad holding
  // rank k in that trial, then average.
  kPerTrial,
  // Average the rank-k estimate and divide by the true CTR of one fixed ad.
  kFixedAd,
};

struct BiasFactor {
  int rank = 0;
  double factor = 0.0;
  std::optional<double> se;
  std::int64_t samples = 0;
};

inline constexpr std::int64_t kMinBiasSamples = 100;

// Selection bias b_(k) of the rank-k ordered estimate. Throws
// kRankUnreachable with fewer than kMinBiasSamples trials.
BiasFactor SelectionBias(std::span<const TrialResult> trials, const CpcStudyConfig& config,
                         int rank, BiasAttribution attribution = BiasAttribution::kPerTrial,
                         std::size_t fixed_ad = 0);

// b_(k) - b_(k+1) under per-trial attribution with a paired standard error.
struct BiasGap {
  double gap = 0.0;
  std::optional<double> se;
};
BiasGap SelectionBiasGap(std::span<const TrialResult> trials, const CpcStudyConfig& config,
                         int rank);

struct CpcSummary {
  double expected_cpc = 0.0;      // GSP price under the true CTRs
  double mean_observed_cpc = 0.0;  // per-trial mean over non-degenerate trials
  std::optional<double> mean_observed_se;
  double ratio = 0.0;  // mean_observed_cpc / expected_cpc
  // Bid_(2) E[CTR_(2)] / E[CTR_(1)] computed from sample means, with a
  // delta-method standard error.
  double ratio_of_means = 0.0;
  std::optional<double> ratio_of_means_se;
  std::int64_t used_trials = 0;
  std::int64_t degenerate_trials = 0;
};

CpcSummary SummarizeCpc(std::span<const TrialResult> trials, const CpcStudyConfig& config);

// Ratio of summed predictions to summed clicks over one impression set.
struct Calibration {
  double value = 0.0;
  double se = 0.0;
  std::int64_t records = 0;
  std::int64_t clicks = 0;
};

struct CalibrationReport {
  Calibration greedy;  // I_1
  Calibration random;  // I_rand
  double c_relative = 0.0;
  double c_relative_se = 0.0;
  Calibration greedy_bid_weighted;
  Calibration random_bid_weighted;
  double c_relative_bid_weighted = 0.0;
  double c_relative_bid_weighted_se = 0.0;
};

// Calibration_1 / Calibration_rand over greedy (I_1) and random (I_rand)
// records, plain and bid-weighted. Throws kUndefinedCalibration when either
// set has no clicks.
CalibrationReport CRelative(std::span<const ImpressionRecord> records);

struct RelativeTotals {
  double rtv = 0.0;
  double rtc = 0.0;
};

// Clicked bid and clicked cost of bucket B over bucket A, greedy records
// only. Throws kUndefinedRatio on a zero denominator.
RelativeTotals RtvRtc(std::span<const ImpressionRecord> bucket_a,
                      std::span<const ImpressionRecord> bucket_b);

// Bin b covers [edges[b], edges[b+1]) with edges[b] = (origin + b) * width.
struct Histogram {
  double width = 0.0;
  std::int64_t origin = 0;
  std::vector<double> edges;
  std::vector<std::int64_t> counts;
  std::int64_t total = 0;

  DensityGrid Density() const;
  // Per-bin standard error of Density() under Poisson counts.
  std::vector<double> DensityStandardError() const;
  double MassBelow(double threshold) const;
};

// Bins from floor(min / width) to the bin holding max. Throws
// kInvalidArgument for empty samples or a non-positive width.
Histogram BuildHistogram(std::span<const double> samples, double width);

// Histograms of several sample sets over one shared edge vector.
std::vector<Histogram> BuildSharedHistograms(std::span<const std::vector<double>> sample_sets,
                                             double width);

// sum_b min(p_b, q_b) of two normalized histograms on identical edges.
double HistogramOverlap(const Histogram& a, const Histogram& b);

struct SkewnessTest {
  double skewness = 0.0;
  double se = 0.0;
  double z = 0.0;
};

// Sample skewness with its normal-theory standard error.
SkewnessTest TestSkewness(std::span<const double> samples);

}  // namespace gspbias

#endif  // GSPBIAS_METRICS_HPP_
