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

#include "gspbias/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gspbias/error.hpp"

namespace gspbias {
namespace {

struct Moments {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void Add(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  std::optional<double> StandardError() const {
    if (n < 2) return std::nullopt;
    return std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  }
};

double TrueCtrOrThrow(const CpcStudyConfig& config, std::size_t ad) {
  const double ctr = config.ctrs.at(ad);
  if (!(ctr > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "bias factor undefined for ad " + std::to_string(ad + 1) + " with zero CTR");
  }
  return ctr;
}

std::size_t AdAtRank(const TrialResult& t, int rank) {
  if (rank < 1 || rank > static_cast<int>(t.ranking.size())) {
    throw Error(ErrorCode::kRankUnreachable, "rank " + std::to_string(rank) + " out of range");
  }
  return static_cast<std::size_t>(t.ranking[static_cast<std::size_t>(rank - 1)] - 1);
}

Calibration Calibrate(std::span<const ImpressionRecord> records, SelectionMode mode,
                      bool bid_weighted) {
  Calibration c;
  double pred_sum = 0.0;
  double click_sum = 0.0;
  for (const ImpressionRecord& r : records) {
    if (r.mode != mode) continue;
    const double w = bid_weighted ? r.bid : 1.0;
    ++c.records;
    c.clicks += r.click;
    pred_sum += w * r.pred_ctr;
    click_sum += w * r.click;
  }
  if (c.clicks == 0 || !(click_sum > 0.0)) {
    throw Error(ErrorCode::kUndefinedCalibration,
                std::string(mode == SelectionMode::kGreedy ? "I_1" : "I_rand") +
                    " has no clicks");
  }
  c.value = pred_sum / click_sum;
  // Linearized ratio variance: sum (p - R c)^2 / (sum c)^2.
  double resid = 0.0;
  for (const ImpressionRecord& r : records) {
    if (r.mode != mode) continue;
    const double w = bid_weighted ? r.bid : 1.0;
    const double e = w * r.pred_ctr - c.value * w * r.click;
    resid += e * e;
  }
  c.se = std::sqrt(resid) / click_sum;
  return c;
}

double RelativeSe(double ratio, const Calibration& num, const Calibration& den) {
  const double a = num.se / num.value;
  const double b = den.se / den.value;
  return ratio * std::sqrt(a * a + b * b);
}

}  // namespace

BiasFactor SelectionBias(std::span<const TrialResult> trials, const CpcStudyConfig& config,
                         int rank, BiasAttribution attribution, std::size_t fixed_ad) {
  if (static_cast<std::int64_t>(trials.size()) < kMinBiasSamples) {
    throw Error(ErrorCode::kRankUnreachable,
                "need at least " + std::to_string(kMinBiasSamples) + " trials for rank " +
                    std::to_string(rank));
  }
  Moments mo;
  for (const TrialResult& t : trials) {
    const std::size_t ad = AdAtRank(t, rank);
    const double estimate = t.estimates[ad];
    if (attribution == BiasAttribution::kPerTrial) {
      mo.Add(estimate / TrueCtrOrThrow(config, ad));
    } else {
      mo.Add(estimate);
    }
  }
  BiasFactor out;
  out.rank = rank;
  out.samples = mo.n;
  out.factor = mo.mean;
  out.se = mo.StandardError();
  if (attribution == BiasAttribution::kFixedAd) {
    const double ctr = TrueCtrOrThrow(config, fixed_ad);
    out.factor /= ctr;
    if (out.se) *out.se /= ctr;
  }
  return out;
}

BiasGap SelectionBiasGap(std::span<const TrialResult> trials, const CpcStudyConfig& config,
                         int rank) {
  if (static_cast<std::int64_t>(trials.size()) < kMinBiasSamples) {
    throw Error(ErrorCode::kRankUnreachable, "too few trials for a bias gap");
  }
  Moments mo;
  for (const TrialResult& t : trials) {
    const std::size_t hi = AdAtRank(t, rank);
    const std::size_t lo = AdAtRank(t, rank + 1);
    mo.Add(t.estimates[hi] / TrueCtrOrThrow(config, hi) -
           t.estimates[lo] / TrueCtrOrThrow(config, lo));
  }
  return BiasGap{mo.mean, mo.StandardError()};
}

CpcSummary SummarizeCpc(std::span<const TrialResult> trials, const CpcStudyConfig& config) {
  CpcSummary out;
  std::vector<ScoredAd> truth;
  for (std::size_t i = 0; i < config.ctrs.size(); ++i) {
    truth.push_back(ScoredAd::Make(static_cast<AdId>(i + 1), config.Bid(i), config.ctrs[i]));
  }
  out.expected_cpc = RunAuction(truth).cpc;

  Moments cpc;
  Moments num;  // runner-up score
  Moments den;  // winner estimate
  std::vector<std::pair<double, double>> pairs;
  for (const TrialResult& t : trials) {
    if (t.degenerate) {
      ++out.degenerate_trials;
      continue;
    }
    cpc.Add(t.cpc);
    const double winner_estimate = t.estimates[static_cast<std::size_t>(t.winner - 1)];
    num.Add(t.runner_up_score);
    den.Add(winner_estimate);
    pairs.emplace_back(t.runner_up_score, winner_estimate);
  }
  out.used_trials = cpc.n;
  if (cpc.n == 0) {
    out.mean_observed_cpc = std::numeric_limits<double>::quiet_NaN();
    out.ratio = out.ratio_of_means = out.mean_observed_cpc;
    return out;
  }
  out.mean_observed_cpc = cpc.mean;
  out.mean_observed_se = cpc.StandardError();
  out.ratio = out.expected_cpc > 0.0 ? cpc.mean / out.expected_cpc
                                     : std::numeric_limits<double>::quiet_NaN();
  out.ratio_of_means = num.mean / den.mean;
  if (cpc.n >= 2) {
    double resid = 0.0;
    for (const auto& [x, y] : pairs) {
      const double e = x - out.ratio_of_means * y;
      resid += e * e;
    }
    const double n = static_cast<double>(cpc.n);
    out.ratio_of_means_se = std::sqrt(resid / (n - 1.0) / n) / den.mean;
  }
  return out;
}

CalibrationReport CRelative(std::span<const ImpressionRecord> records) {
  CalibrationReport rep;
  rep.greedy = Calibrate(records, SelectionMode::kGreedy, false);
  rep.random = Calibrate(records, SelectionMode::kRandom, false);
  rep.c_relative = rep.greedy.value / rep.random.value;
  rep.c_relative_se = RelativeSe(rep.c_relative, rep.greedy, rep.random);
  rep.greedy_bid_weighted = Calibrate(records, SelectionMode::kGreedy, true);
  rep.random_bid_weighted = Calibrate(records, SelectionMode::kRandom, true);
  rep.c_relative_bid_weighted = rep.greedy_bid_weighted.value / rep.random_bid_weighted.value;
  rep.c_relative_bid_weighted_se =
      RelativeSe(rep.c_relative_bid_weighted, rep.greedy_bid_weighted, rep.random_bid_weighted);
  return rep;
}

RelativeTotals RtvRtc(std::span<const ImpressionRecord> bucket_a,
                      std::span<const ImpressionRecord> bucket_b) {
  auto totals = [](std::span<const ImpressionRecord> records) {
    double value = 0.0;
    double cost = 0.0;
    for (const ImpressionRecord& r : records) {
      if (r.mode != SelectionMode::kGreedy || r.click == 0) continue;
      value += r.bid;
      cost += r.cpc;
    }
    return std::pair{value, cost};
  };
  const auto [value_a, cost_a] = totals(bucket_a);
  const auto [value_b, cost_b] = totals(bucket_b);
  if (!(value_a > 0.0)) throw Error(ErrorCode::kUndefinedRatio, "bucket A has no clicked value");
  if (!(cost_a > 0.0)) throw Error(ErrorCode::kUndefinedRatio, "bucket A has no clicked cost");
  return RelativeTotals{value_b / value_a, cost_b / cost_a};
}

DensityGrid Histogram::Density() const {
  DensityGrid grid;
  grid.edges = edges;
  grid.values.resize(counts.size());
  const double norm = static_cast<double>(total) * width;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    grid.values[b] = static_cast<double>(counts[b]) / norm;
  }
  return grid;
}

std::vector<double> Histogram::DensityStandardError() const {
  std::vector<double> se(counts.size());
  const double norm = static_cast<double>(total) * width;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    se[b] = std::sqrt(static_cast<double>(counts[b])) / norm;
  }
  return se;
}

double Histogram::MassBelow(double threshold) const {
  std::int64_t below = 0;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    if (edges[b + 1] <= threshold) below += counts[b];
  }
  return static_cast<double>(below) / static_cast<double>(total);
}

namespace {

// Samples within 1e-9 bin widths below an edge count as on the edge, so
// lattice values such as c / n are not split by rounding.
std::int64_t BinIndex(double x, double width) {
  const double q = x / width;
  auto idx = static_cast<std::int64_t>(std::floor(q));
  if (q - static_cast<double>(idx) > 1.0 - 1e-9) ++idx;
  return idx;
}

void CheckHistogramInput(std::span<const double> samples, double width) {
  if (samples.empty()) throw Error(ErrorCode::kInvalidArgument, "no samples");
  if (!(width > 0.0) || !std::isfinite(width)) {
    throw Error(ErrorCode::kInvalidArgument, "bin width must be positive");
  }
  for (double x : samples) {
    if (!std::isfinite(x)) throw Error(ErrorCode::kInvalidArgument, "non-finite sample");
  }
}

Histogram EmptyHistogram(std::int64_t first, std::int64_t last, double width) {
  Histogram h;
  h.width = width;
  h.origin = first;
  for (std::int64_t i = first; i <= last + 1; ++i) h.edges.push_back(static_cast<double>(i) * width);
  h.counts.assign(static_cast<std::size_t>(last - first + 1), 0);
  return h;
}

void Fill(Histogram& h, std::span<const double> samples) {
  for (double x : samples) {
    ++h.counts[static_cast<std::size_t>(BinIndex(x, h.width) - h.origin)];
    ++h.total;
  }
}

}  // namespace

Histogram BuildHistogram(std::span<const double> samples, double width) {
  CheckHistogramInput(samples, width);
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  Histogram h = EmptyHistogram(BinIndex(*lo, width), BinIndex(*hi, width), width);
  Fill(h, samples);
  return h;
}

std::vector<Histogram> BuildSharedHistograms(std::span<const std::vector<double>> sample_sets,
                                             double width) {
  if (sample_sets.empty()) throw Error(ErrorCode::kInvalidArgument, "no sample sets");
  std::int64_t first = std::numeric_limits<std::int64_t>::max();
  std::int64_t last = std::numeric_limits<std::int64_t>::min();
  for (const auto& s : sample_sets) {
    CheckHistogramInput(s, width);
    const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
    first = std::min(first, BinIndex(*lo, width));
    last = std::max(last, BinIndex(*hi, width));
  }
  std::vector<Histogram> out;
  for (const auto& s : sample_sets) {
    out.push_back(EmptyHistogram(first, last, width));
    Fill(out.back(), s);
  }
  return out;
}

double HistogramOverlap(const Histogram& a, const Histogram& b) {
  if (a.edges != b.edges) throw Error(ErrorCode::kGridMismatch, "histogram edges differ");
  double overlap = 0.0;
  for (std::size_t i = 0; i < a.counts.size(); ++i) {
    overlap += std::min(static_cast<double>(a.counts[i]) / static_cast<double>(a.total),
                        static_cast<double>(b.counts[i]) / static_cast<double>(b.total));
  }
  return overlap;
}

SkewnessTest TestSkewness(std::span<const double> samples) {
  const auto n = static_cast<double>(samples.size());
  if (samples.size() < 3) throw Error(ErrorCode::kInvalidArgument, "need at least 3 samples");
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= n;
  double m2 = 0.0;
  double m3 = 0.0;
  for (double x : samples) {
    const double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  SkewnessTest out;
  out.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
  out.se = std::sqrt(6.0 * n * (n - 1.0) / ((n - 2.0) * (n + 1.0) * (n + 3.0)));
  out.z = out.skewness / out.se;
  return out;
}

}  // namespace gspbias
