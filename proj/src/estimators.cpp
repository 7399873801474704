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

#include "gspbias/estimators.hpp"

#include <algorithm>
#include <string>

#include "gspbias/error.hpp"

namespace gspbias {

double BinomialEstimate(std::int64_t clicks, std::int64_t impressions) {
  if (impressions == 0) throw Error(ErrorCode::kNoData, "zero impressions");
  if (impressions < 0 || clicks < 0 || clicks > impressions) {
    throw Error(ErrorCode::kInvalidArgument,
                "clicks " + std::to_string(clicks) + " of " +
                    std::to_string(impressions) + " impressions");
  }
  return static_cast<double>(clicks) / static_cast<double>(impressions);
}

CountWindow::CountWindow(int length_days) : length_(length_days) {
  if (length_days < 1) {
    throw Error(ErrorCode::kInvalidArgument, "window length must be >= 1 day");
  }
  days_.emplace_back();
}

void CountWindow::AdvanceTo(int day) {
  if (day < current_day_) {
    throw Error(ErrorCode::kInvalidArgument, "window cannot move backwards");
  }
  while (current_day_ < day) {
    ++current_day_;
    days_.emplace_back();
    if (static_cast<int>(days_.size()) > length_) {
      for (const auto& [key, counts] : days_.front()) {
        auto it = totals_.find(key);
        it->second.clicks -= counts.clicks;
        it->second.impressions -= counts.impressions;
        if (it->second.impressions == 0) totals_.erase(it);
      }
      days_.pop_front();
    }
  }
}

void CountWindow::Record(const CountKey& key, bool clicked) {
  Add(key, Counts{clicked ? 1 : 0, 1});
}

void CountWindow::Add(const CountKey& key, const Counts& counts) {
  if (counts.clicks < 0 || counts.clicks > counts.impressions) {
    throw Error(ErrorCode::kInvalidArgument, "counts need 0 <= clicks <= impressions");
  }
  if (counts.impressions == 0) return;
  days_.back()[key] += counts;
  totals_[key] += counts;
}

Counts CountWindow::Totals(const CountKey& key) const {
  auto it = totals_.find(key);
  return it == totals_.end() ? Counts{} : it->second;
}

double NaiveContextualEstimate(const CountWindow& window, const CountKey& key) {
  const Counts c = window.Totals(key);
  return BinomialEstimate(c.clicks, c.impressions);
}

PoolFit FitPool(std::span<const Counts> per_ad) {
  std::vector<double> props;
  double inv_n_sum = 0.0;
  for (const Counts& c : per_ad) {
    if (c.impressions <= 0) continue;
    props.push_back(BinomialEstimate(c.clicks, c.impressions));
    inv_n_sum += 1.0 / static_cast<double>(c.impressions);
  }
  if (props.empty()) throw Error(ErrorCode::kNoData, "no ad has impressions");
  const PoolFit fallback{kFallbackPool, true};
  if (props.size() < 2) return fallback;

  const double k = static_cast<double>(props.size());
  double mean = 0.0;
  for (double p : props) mean += p;
  mean /= k;
  double var = 0.0;
  for (double p : props) var += (p - mean) * (p - mean);
  var /= k - 1.0;
  const double mean_inv_n = inv_n_sum / k;
  const double bernoulli_var = mean * (1.0 - mean);
  if (!(bernoulli_var > 0.0) || mean_inv_n >= 1.0) return fallback;

  // Var(c/n) = mu (1 - mu) [rho + (1 - rho) / n], rho = 1 / (alpha + beta + 1).
  const double rho = (var / bernoulli_var - mean_inv_n) / (1.0 - mean_inv_n);
  if (!(rho > 0.0) || !(rho < 1.0)) return fallback;
  const double size = 1.0 / rho - 1.0;
  return PoolFit{PoolHyperParams{mean * size, (1.0 - mean) * size}, false};
}

double PooledEstimate(const Counts& counts, const PoolHyperParams& hyper) {
  if (counts.clicks < 0 || counts.clicks > counts.impressions) {
    throw Error(ErrorCode::kInvalidArgument, "counts need 0 <= clicks <= impressions");
  }
  return (static_cast<double>(counts.clicks) + hyper.alpha) /
         (static_cast<double>(counts.impressions) + hyper.alpha + hyper.beta);
}

Selection SelectAd(const SelectionPolicy& policy, std::span<const ScoredAd> scored,
                   CounterRng& rng) {
  if (scored.empty()) throw Error(ErrorCode::kEmptyAuction, "no participants");
  const double explore = rng.Uniform();
  const double pick = rng.Uniform();
  if (explore < policy.epsilon) {
    const auto m = scored.size();
    const auto index = std::min(static_cast<std::size_t>(pick * static_cast<double>(m)), m - 1);
    return Selection{scored[index].ad_id, SelectionMode::kRandom};
  }
  return Selection{RankAds(scored).front(), SelectionMode::kGreedy};
}

}  // namespace gspbias
