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

#ifndef GSPBIAS_AUCTION_HPP_
#define GSPBIAS_AUCTION_HPP_

// Single-slot generalized second-price auction: ranking by bid x CTR,
// second-price cost per click, and the linear description of the event
// "candidate i wins".

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace gspbias {

using AdId = std::int64_t;

struct Ad {
  AdId id = 0;
  double bid = 0.0;
  double true_ctr = 0.0;
};

// An ad together with the CTR estimate used to rank it. The score is fixed
// at construction; use ScoredAd::Make so that score == bid * estimated_ctr.
struct ScoredAd {
  AdId ad_id = 0;
  double bid = 0.0;
  double estimated_ctr = 0.0;
  double score = 0.0;

  static ScoredAd Make(AdId id, double bid, double estimated_ctr) {
    return ScoredAd{id, bid, estimated_ctr, bid * estimated_ctr};
  }
};

struct AuctionOutcome {
  std::vector<AdId> ranking;
  AdId winner_id = 0;
  double cpc = 0.0;
  double winner_score = 0.0;
  double runner_up_score = 0.0;  // 0 for a single participant
};

// Ad ids ordered by non-increasing score; equal scores go to the smaller id.
// Throws kEmptyAuction on an empty list and kInvalidScore on a negative,
// infinite or NaN score.
std::vector<AdId> RankAds(std::span<const ScoredAd> scored);

// Second-price CPC of the top-ranked ad: runner-up score divided by the
// winner's estimated CTR. Zero for a single participant. Throws
// kDegeneratePrice when the winner's estimated CTR is zero and there is a
// runner-up.
double GspPrice(std::span<const AdId> ranking, std::span<const ScoredAd> scored);

// RankAds followed by GspPrice.
AuctionOutcome RunAuction(std::span<const ScoredAd> scored);

// Rows of `matrix` encode bid_i * y_0 - bid_{j_r} * y_{r+1} >= 0, one per
// competitor j_r, with the candidate in column 0 and competitors in their
// input order afterwards.
struct SelectionEvent {
  Eigen::MatrixXd matrix;
  int candidate_index = 0;
  AdId candidate_id = 0;
  std::vector<AdId> competitor_ids;  // competitor_ids[r] owns column r + 1

  // Rearranges per-ad estimates (input order) into the column order above.
  Eigen::VectorXd Arrange(const Eigen::Ref<const Eigen::VectorXd>& estimates) const;

  // True when A y >= 0 and every zero row is won on the id tie-break.
  bool Admits(const Eigen::Ref<const Eigen::VectorXd>& y) const;
};

// Throws kEmptyAuction for fewer than two ads and kInvalidArgument for an
// out-of-range candidate.
SelectionEvent BuildSelectionEvent(std::span<const Ad> ads, int candidate);

}  // namespace gspbias

#endif  // GSPBIAS_AUCTION_HPP_
