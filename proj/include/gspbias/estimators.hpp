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

#ifndef GSPBIAS_ESTIMATORS_HPP_
#define GSPBIAS_ESTIMATORS_HPP_

#include <cstdint>
#include <deque>
#include <map>
#include <span>
#include <vector>

#include "gspbias/auction.hpp"
#include "gspbias/random.hpp"

namespace gspbias {

// clicks / impressions. Throws kNoData when impressions == 0 and
// kInvalidArgument when clicks is outside [0, impressions].
double BinomialEstimate(std::int64_t clicks, std::int64_t impressions);

struct Counts {
  std::int64_t clicks = 0;
  std::int64_t impressions = 0;

  Counts& operator+=(const Counts& o) {
    clicks += o.clicks;
    impressions += o.impressions;
    return *this;
  }
  friend bool operator==(const Counts&, const Counts&) = default;
};

struct CountKey {
  AdId ad = 0;
  int site = 0;
  int pos = 0;

  friend auto operator<=>(const CountKey&, const CountKey&) = default;
};

// Click/impression counts over the most recent `length` days, i.e. days in
// (current_day - length, current_day]. Totals are maintained incrementally;
// expired days are subtracted when the window advances.
class CountWindow {
 public:
  static constexpr int kDefaultLength = 14;

  explicit CountWindow(int length_days = kDefaultLength);

  int length() const { return length_; }
  int current_day() const { return current_day_; }

  // Moves the window forward to `day` (never backwards), evicting old days.
  void AdvanceTo(int day);

  // Records one impression at the current day.
  void Record(const CountKey& key, bool clicked);
  void Add(const CountKey& key, const Counts& counts);

  // Zero counts for keys never seen inside the window.
  Counts Totals(const CountKey& key) const;
  const std::map<CountKey, Counts>& AllTotals() const { return totals_; }

 private:
  int length_;
  int current_day_ = 0;
  std::deque<std::map<CountKey, Counts>> days_;  // back() is current_day_
  std::map<CountKey, Counts> totals_;
};

// Windowed per-(ad, site, pos) click-through proportion. Throws kNoData when
// the key has no impressions inside the window.
double NaiveContextualEstimate(const CountWindow& window, const CountKey& key);

// Beta prior pseudo-counts shared by every ad of a pool.
struct PoolHyperParams {
  double alpha = 1.0;
  double beta = 19.0;

  double PriorMean() const { return alpha / (alpha + beta); }
};

inline constexpr PoolHyperParams kFallbackPool{1.0, 19.0};

struct PoolFit {
  PoolHyperParams params;
  bool degenerate = false;  // true when the fallback was used
};

// Method-of-moments beta-binomial fit on per-ad proportions c/n. Entries
// with n == 0 are ignored. With unequal n the binomial noise term uses the
// mean of 1/n. Falls back to kFallbackPool when fewer than two ads carry
// data, the mean is 0 or 1, or the between-ad variance does not exceed the
// binomial noise. Throws kNoData when no entry has impressions.
PoolFit FitPool(std::span<const Counts> per_ad);

// (c + alpha) / (n + alpha + beta); the prior mean when n == 0.
double PooledEstimate(const Counts& counts, const PoolHyperParams& hyper);

enum class SelectionMode { kGreedy, kRandom };

struct SelectionPolicy {
  double epsilon = 0.0;
};

struct Selection {
  AdId winner_id = 0;
  SelectionMode mode = SelectionMode::kGreedy;
};

// Epsilon-greedy choice. Always consumes exactly two draws from `rng`: the
// first decides exploration (u < epsilon), the second picks the uniform
// winner. Greedy mode returns RankAds(scored).front().
Selection SelectAd(const SelectionPolicy& policy, std::span<const ScoredAd> scored,
                   CounterRng& rng);

}  // namespace gspbias

#endif  // GSPBIAS_ESTIMATORS_HPP_
