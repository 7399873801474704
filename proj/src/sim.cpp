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

#include "gspbias/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "gspbias/error.hpp"
#include "gspbias/parallel.hpp"
#include "gspbias/random.hpp"

namespace gspbias {
namespace {

// Stream domains keep the study, oracle and A/B draws apart for one seed.
constexpr std::uint64_t kCpcDomain = 1;
constexpr std::uint64_t kScoreDomain = 2;
constexpr std::uint64_t kAbDomain = 3;

std::int64_t DrawBinomial(std::int64_t n, double p, CounterRng& rng) {
  if (p <= 0.0) return 0;
  if (p >= 1.0) return n;
  std::binomial_distribution<std::int64_t> dist(n, p);
  return dist(rng);
}

void Merge(RankAccumulator& into, const RankAccumulator& from) {
  into.count += from.count;
  into.sum += from.sum;
  into.sum_sq += from.sum_sq;
  if (into.histogram.size() < from.histogram.size()) {
    into.histogram.resize(from.histogram.size(), 0);
  }
  for (std::size_t b = 0; b < from.histogram.size(); ++b) into.histogram[b] += from.histogram[b];
}

}  // namespace

void CpcStudyConfig::Validate() const {
  if (ctrs.empty()) throw Error(ErrorCode::kEmptyAuction, "setting '" + name + "' has no ads");
  if (trials < 1) throw Error(ErrorCode::kInvalidArgument, "trials must be >= 1");
  if (!bids.empty() && bids.size() != ctrs.size()) {
    throw Error(ErrorCode::kInvalidArgument, "bids and ctrs differ in length");
  }
  if (impressions.size() != 1 && impressions.size() != ctrs.size()) {
    throw Error(ErrorCode::kInvalidArgument, "impressions needs one entry or one per ad");
  }
  for (double c : ctrs) {
    if (!(c >= 0.0 && c <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "CTR outside [0,1]");
  }
  for (double b : bids) {
    if (!(b >= 0.0) || !std::isfinite(b)) throw Error(ErrorCode::kInvalidArgument, "bad bid");
  }
  for (std::int64_t n : impressions) {
    if (n < 1) throw Error(ErrorCode::kInvalidArgument, "impressions must be >= 1");
  }
}

std::vector<TrialResult> RunCpcStudy(const CpcStudyConfig& config, int threads) {
  config.Validate();
  const std::size_t m = config.ctrs.size();
  std::vector<TrialResult> trials(static_cast<std::size_t>(config.trials));
  const std::int64_t chunks = (config.trials + kMonteCarloChunk - 1) / kMonteCarloChunk;

  ParallelFor(chunks, threads, [&](std::int64_t chunk) {
    const std::int64_t begin = chunk * kMonteCarloChunk;
    const std::int64_t end = std::min(config.trials, begin + kMonteCarloChunk);
    std::vector<ScoredAd> scored(m);
    for (std::int64_t t = begin; t < end; ++t) {
      CounterRng rng(StreamKey(config.seed, {kCpcDomain, static_cast<std::uint64_t>(t)}));
      TrialResult& r = trials[static_cast<std::size_t>(t)];
      r.index = t;
      r.estimates.resize(m);
      for (std::size_t i = 0; i < m; ++i) {
        const std::int64_t n = config.Impressions(i);
        const std::int64_t clicks = DrawBinomial(n, config.ctrs[i], rng);
        r.estimates[i] = BinomialEstimate(clicks, n);
        scored[i] = ScoredAd::Make(static_cast<AdId>(i + 1), config.Bid(i), r.estimates[i]);
      }
      r.ranking = RankAds(scored);
      r.ranks.assign(m, 0);
      for (std::size_t pos = 0; pos < m; ++pos) {
        r.ranks[static_cast<std::size_t>(r.ranking[pos] - 1)] = static_cast<int>(pos + 1);
      }
      r.winner = r.ranking.front();
      r.winner_score = scored[static_cast<std::size_t>(r.winner - 1)].score;
      if (m > 1) r.runner_up_score = scored[static_cast<std::size_t>(r.ranking[1] - 1)].score;
      try {
        r.cpc = GspPrice(r.ranking, scored);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDegeneratePrice) throw;
        r.cpc = 0.0;
        r.degenerate = true;
      }
    }
  });
  return trials;
}

std::vector<double> ConditionalRankSamples(std::span<const TrialResult> trials,
                                           const CpcStudyConfig& config, std::size_t ad,
                                           int rank) {
  if (trials.empty()) throw Error(ErrorCode::kRankUnreachable, "no trials");
  std::vector<double> out;
  for (const TrialResult& t : trials) {
    if (ad >= t.ranks.size()) throw Error(ErrorCode::kInvalidArgument, "ad out of range");
    if (t.ranks[ad] == rank) out.push_back(t.ScoreOf(ad, config));
  }
  if (out.empty()) {
    throw Error(ErrorCode::kRankUnreachable,
                "ad " + std::to_string(ad + 1) + " never realized rank " + std::to_string(rank));
  }
  return out;
}

std::optional<double> RankAccumulator::StandardError() const {
  if (count < 2) return std::nullopt;
  const double n = static_cast<double>(count);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return std::sqrt(var / n);
}

ScoreMonteCarlo RunScoreMonteCarlo(std::span<const ScoreDistribution> dists,
                                   std::int64_t trials, std::uint64_t seed,
                                   std::uint64_t stream, int threads,
                                   std::vector<std::vector<double>> histogram_edges) {
  const std::size_t m = dists.size();
  if (m == 0) throw Error(ErrorCode::kEmptyAuction, "no score distributions");
  if (trials < 1) throw Error(ErrorCode::kInvalidArgument, "trials must be >= 1");
  if (!histogram_edges.empty() && histogram_edges.size() != m) {
    throw Error(ErrorCode::kGridMismatch, "need one edge vector per candidate");
  }
  const bool with_hist = !histogram_edges.empty();
  using Cells = std::vector<std::vector<RankAccumulator>>;
  auto empty_cells = [&] {
    Cells cells(m, std::vector<RankAccumulator>(m));
    if (with_hist) {
      for (std::size_t i = 0; i < m; ++i) {
        for (auto& acc : cells[i]) acc.histogram.assign(histogram_edges[i].size() - 1, 0);
      }
    }
    return cells;
  };

  const std::int64_t chunks = (trials + kMonteCarloChunk - 1) / kMonteCarloChunk;
  std::vector<Cells> partial(static_cast<std::size_t>(chunks));
  ParallelFor(chunks, threads, [&](std::int64_t chunk) {
    Cells cells = empty_cells();
    std::vector<double> scores(m);
    std::vector<std::size_t> order(m);
    const std::int64_t begin = chunk * kMonteCarloChunk;
    const std::int64_t end = std::min(trials, begin + kMonteCarloChunk);
    for (std::int64_t t = begin; t < end; ++t) {
      CounterRng rng(StreamKey(seed, {kScoreDomain, stream, static_cast<std::uint64_t>(t)}));
      for (std::size_t i = 0; i < m; ++i) scores[i] = dists[i].Sample(rng);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
      });
      for (std::size_t pos = 0; pos < m; ++pos) {
        const std::size_t i = order[pos];
        RankAccumulator& acc = cells[i][pos];
        const double s = scores[i];
        ++acc.count;
        acc.sum += s;
        acc.sum_sq += s * s;
        if (with_hist) {
          const auto& edges = histogram_edges[i];
          if (s >= edges.front() && s < edges.back()) {
            const auto bin = std::upper_bound(edges.begin(), edges.end(), s) - edges.begin() - 1;
            ++acc.histogram[static_cast<std::size_t>(bin)];
          }
        }
      }
    }
    partial[static_cast<std::size_t>(chunk)] = std::move(cells);
  });

  ScoreMonteCarlo out;
  out.trials = trials;
  out.cells = empty_cells();
  out.edges = std::move(histogram_edges);
  for (const Cells& cells : partial) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t k = 0; k < m; ++k) Merge(out.cells[i][k], cells[i][k]);
    }
  }
  return out;
}

std::string_view EstimatorName(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kNaive: return "naive";
    case EstimatorKind::kPooled: return "pooled";
    case EstimatorKind::kOracle: return "oracle";
  }
  return "unknown";
}

char BucketLetter(Bucket bucket) { return bucket == Bucket::kA ? 'A' : 'B'; }

double AbConfig::TrueCtr(std::size_t ad, std::size_t context) const {
  return std::min(1.0, ads[ad].true_ctr * contexts[context].multiplier);
}

void AbConfig::Validate() const {
  if (ads.empty()) throw Error(ErrorCode::kEmptyAuction, "no ads configured");
  if (contexts.empty()) throw Error(ErrorCode::kInvalidArgument, "no contexts configured");
  if (days < 1) throw Error(ErrorCode::kInvalidArgument, "days must be >= 1");
  if (window_days < 1) throw Error(ErrorCode::kInvalidArgument, "window_days must be >= 1");
  if (burn_in_days < 0 || burn_in_days >= days) {
    throw Error(ErrorCode::kInvalidArgument, "burn_in_days must lie in [0, days)");
  }
  if (traffic_per_day < 1) throw Error(ErrorCode::kInvalidArgument, "traffic_per_day must be >= 1");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon outside [0,1]");
  }
  if (!(cold_start_ctr >= 0.0 && cold_start_ctr <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "cold_start_ctr outside [0,1]");
  }
  for (std::size_t i = 0; i < ads.size(); ++i) {
    const Ad& ad = ads[i];
    if (!(ad.bid >= 0.0) || !std::isfinite(ad.bid)) {
      throw Error(ErrorCode::kInvalidArgument, "bad bid for ad " + std::to_string(ad.id));
    }
    if (!(ad.true_ctr >= 0.0 && ad.true_ctr <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "CTR outside [0,1] for ad " + std::to_string(ad.id));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (ads[j].id == ad.id) throw Error(ErrorCode::kInvalidArgument, "duplicate ad id");
    }
  }
  for (const Context& c : contexts) {
    if (!(c.multiplier >= 0.0) || !std::isfinite(c.multiplier)) {
      throw Error(ErrorCode::kInvalidArgument, "bad context multiplier");
    }
  }
}

std::vector<ImpressionRecord> RunAbBucket(const AbConfig& config, Bucket bucket) {
  config.Validate();
  const EstimatorKind kind = config.estimators[bucket == Bucket::kA ? 0 : 1];
  const std::size_t m = config.ads.size();
  const SelectionPolicy policy{config.epsilon};
  CountWindow window(config.window_days);
  std::vector<PoolHyperParams> pools(config.contexts.size(), kFallbackPool);
  std::vector<ImpressionRecord> records;
  records.reserve(static_cast<std::size_t>(config.days * config.traffic_per_day));
  std::vector<ScoredAd> scored(m);
  std::vector<Counts> per_ad(m);

  for (int day = 0; day < config.days; ++day) {
    window.AdvanceTo(day);
    if (kind == EstimatorKind::kPooled) {
      // Hyperparameters are refit once per day from the window, per context.
      for (std::size_t c = 0; c < config.contexts.size(); ++c) {
        for (std::size_t i = 0; i < m; ++i) {
          per_ad[i] = window.Totals(
              CountKey{config.ads[i].id, config.contexts[c].site, config.contexts[c].pos});
        }
        try {
          pools[c] = FitPool(per_ad).params;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kNoData) throw;
          pools[c] = kFallbackPool;
        }
      }
    }
    for (std::int64_t access = 0; access < config.traffic_per_day; ++access) {
      // Four draws per access: context, explore flag, uniform pick, click.
      CounterRng rng(StreamKey(config.seed, {kAbDomain, static_cast<std::uint64_t>(day),
                                             static_cast<std::uint64_t>(access)}));
      const auto nctx = config.contexts.size();
      const std::size_t ctx =
          std::min(static_cast<std::size_t>(rng.Uniform() * static_cast<double>(nctx)), nctx - 1);
      const Context& context = config.contexts[ctx];
      for (std::size_t i = 0; i < m; ++i) {
        const Ad& ad = config.ads[i];
        const CountKey key{ad.id, context.site, context.pos};
        double pred = 0.0;
        switch (kind) {
          case EstimatorKind::kNaive: {
            const Counts c = window.Totals(key);
            pred = c.impressions > 0 ? BinomialEstimate(c.clicks, c.impressions)
                                     : config.cold_start_ctr;
            break;
          }
          case EstimatorKind::kPooled:
            pred = PooledEstimate(window.Totals(key), pools[ctx]);
            break;
          case EstimatorKind::kOracle:
            pred = config.TrueCtr(i, ctx);
            break;
        }
        scored[i] = ScoredAd::Make(ad.id, ad.bid, pred);
      }
      const Selection sel = SelectAd(policy, scored, rng);
      std::size_t winner = 0;
      while (config.ads[winner].id != sel.winner_id) ++winner;
      const bool clicked = rng.Uniform() < config.TrueCtr(winner, ctx);

      ImpressionRecord rec;
      rec.day = day;
      rec.bucket = bucket;
      rec.site = context.site;
      rec.pos = context.pos;
      rec.ad_id = sel.winner_id;
      rec.mode = sel.mode;
      rec.pred_ctr = scored[winner].estimated_ctr;
      rec.bid = config.ads[winner].bid;
      rec.click = clicked ? 1 : 0;
      if (sel.mode == SelectionMode::kGreedy && m > 1) {
        const std::vector<AdId> ranking = RankAds(scored);
        try {
          rec.cpc = GspPrice(ranking, scored);
        } catch (const Error& e) {
          // Every score is zero: nothing to charge.
          if (e.code() != ErrorCode::kDegeneratePrice) throw;
          rec.cpc = 0.0;
        }
      }
      records.push_back(rec);
      window.Record(CountKey{sel.winner_id, context.site, context.pos}, clicked);
    }
  }
  return records;
}

AbResult RunAbExperiment(const AbConfig& config, int threads) {
  config.Validate();
  AbResult result;
  ParallelFor(2, threads, [&](std::int64_t b) {
    if (b == 0) {
      result.bucket_a = RunAbBucket(config, Bucket::kA);
    } else {
      result.bucket_b = RunAbBucket(config, Bucket::kB);
    }
  });
  return result;
}

std::vector<ImpressionRecord> EvaluationWindow(std::span<const ImpressionRecord> records,
                                               int burn_in_days) {
  std::vector<ImpressionRecord> out;
  for (const ImpressionRecord& r : records) {
    if (r.day >= burn_in_days) out.push_back(r);
  }
  return out;
}

}  // namespace gspbias
