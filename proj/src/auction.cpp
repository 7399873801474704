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

#include "gspbias/auction.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gspbias/error.hpp"

namespace gspbias {
namespace {

const ScoredAd& FindAd(std::span<const ScoredAd> scored, AdId id) {
  auto it = std::find_if(scored.begin(), scored.end(),
                         [id](const ScoredAd& a) { return a.ad_id == id; });
  if (it == scored.end()) {
    throw Error(ErrorCode::kInvalidArgument,
                "ranking names unknown ad id " + std::to_string(id));
  }
  return *it;
}

}  // namespace

std::vector<AdId> RankAds(std::span<const ScoredAd> scored) {
  if (scored.empty()) throw Error(ErrorCode::kEmptyAuction, "no participants");
  for (const ScoredAd& ad : scored) {
    if (!std::isfinite(ad.score) || ad.score < 0.0) {
      throw Error(ErrorCode::kInvalidScore,
                  "ad " + std::to_string(ad.ad_id) + " has score " +
                      std::to_string(ad.score));
    }
  }
  std::vector<const ScoredAd*> order;
  order.reserve(scored.size());
  for (const ScoredAd& ad : scored) order.push_back(&ad);
  std::sort(order.begin(), order.end(), [](const ScoredAd* a, const ScoredAd* b) {
    if (a->score != b->score) return a->score > b->score;
    return a->ad_id < b->ad_id;
  });
  std::vector<AdId> ranking;
  ranking.reserve(order.size());
  for (const ScoredAd* ad : order) ranking.push_back(ad->ad_id);
  return ranking;
}

double GspPrice(std::span<const AdId> ranking, std::span<const ScoredAd> scored) {
  if (ranking.empty()) throw Error(ErrorCode::kEmptyAuction, "empty ranking");
  if (ranking.size() == 1) return 0.0;
  const ScoredAd& winner = FindAd(scored, ranking[0]);
  const ScoredAd& runner_up = FindAd(scored, ranking[1]);
  if (!(winner.estimated_ctr > 0.0)) {
    throw Error(ErrorCode::kDegeneratePrice,
                "winner " + std::to_string(winner.ad_id) + " has zero estimated CTR");
  }
  // runner_up.score <= winner.score, so the quotient never exceeds the
  // winner's bid in exact arithmetic; clamp the last-ulp excess.
  return std::min(runner_up.score / winner.estimated_ctr, winner.bid);
}

AuctionOutcome RunAuction(std::span<const ScoredAd> scored) {
  AuctionOutcome out;
  out.ranking = RankAds(scored);
  out.winner_id = out.ranking.front();
  out.winner_score = FindAd(scored, out.winner_id).score;
  if (out.ranking.size() > 1) {
    out.runner_up_score = FindAd(scored, out.ranking[1]).score;
  }
  out.cpc = GspPrice(out.ranking, scored);
  return out;
}

SelectionEvent BuildSelectionEvent(std::span<const Ad> ads, int candidate) {
  const int m = static_cast<int>(ads.size());
  if (m < 2) throw Error(ErrorCode::kEmptyAuction, "selection event needs m >= 2");
  if (candidate < 0 || candidate >= m) {
    throw Error(ErrorCode::kInvalidArgument,
                "candidate index " + std::to_string(candidate) + " out of range");
  }
  SelectionEvent event;
  event.candidate_index = candidate;
  event.candidate_id = ads[candidate].id;
  event.matrix = Eigen::MatrixXd::Zero(m - 1, m);
  event.matrix.col(0).setConstant(ads[candidate].bid);
  int row = 0;
  for (int j = 0; j < m; ++j) {
    if (j == candidate) continue;
    event.matrix(row, row + 1) = -ads[j].bid;
    event.competitor_ids.push_back(ads[j].id);
    ++row;
  }
  return event;
}

Eigen::VectorXd SelectionEvent::Arrange(
    const Eigen::Ref<const Eigen::VectorXd>& estimates) const {
  const Eigen::Index m = matrix.cols();
  if (estimates.size() != m) {
    throw Error(ErrorCode::kInvalidArgument, "estimate vector has wrong length");
  }
  Eigen::VectorXd y(m);
  y(0) = estimates(candidate_index);
  Eigen::Index col = 1;
  for (Eigen::Index j = 0; j < m; ++j) {
    if (j != candidate_index) y(col++) = estimates(j);
  }
  return y;
}

bool SelectionEvent::Admits(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  const Eigen::VectorXd margins = matrix * y;
  for (Eigen::Index r = 0; r < margins.size(); ++r) {
    if (margins(r) < 0.0) return false;
    if (margins(r) == 0.0 && competitor_ids[r] < candidate_id) return false;
  }
  return true;
}

}  // namespace gspbias
