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

#include "gspbias/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "gspbias/config.hpp"
#include "gspbias/error.hpp"
#include "gspbias/io.hpp"
#include "gspbias/metrics.hpp"
#include "gspbias/parallel.hpp"
#include "gspbias/quadrature.hpp"
#include "gspbias/random.hpp"
#include "gspbias/sim.hpp"

namespace gspbias {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::uint64_t kSettingDomain = 7;

constexpr double kInequalityTolerance = 1e-6;
constexpr double kMonteCarloSigmas = 4.0;
constexpr double kPhiPsiTolerance = 1e-6;
constexpr double kHistogramSigmas = 3.0;
constexpr std::int64_t kMinMonteCarloSamples = 30;

std::ostream& Log(const CommandOptions& options) {
  return options.log != nullptr ? *options.log : std::cerr;
}

// Output directory plus the ordered list of files written into it.
class OutputSet {
 public:
  OutputSet(fs::path dir, OutputFormat format) : dir_(std::move(dir)), format_(format) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) {
      throw IoError("cannot create output directory " + dir_.string());
    }
  }

  fs::path Add(const std::string& name) {
    files_.push_back(name);
    return dir_ / name;
  }

  bool csv() const { return format_ != OutputFormat::kJson; }
  bool json() const { return format_ != OutputFormat::kCsv; }
  const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path dir_;
  OutputFormat format_;
  std::vector<std::string> files_;
};

std::string FormatName(OutputFormat format) {
  switch (format) {
    case OutputFormat::kCsv: return "csv";
    case OutputFormat::kJson: return "json";
    case OutputFormat::kBoth: return "both";
  }
  return "csv";
}

struct LoadedConfig {
  std::string text;
  fs::path base_dir;
  std::string source;
};

LoadedConfig LoadConfig(const CommandOptions& options, const std::string& fallback) {
  if (!options.config) return {fallback, fs::current_path(), "<built-in>"};
  return {ReadTextFile(*options.config), options.config->parent_path(),
          options.config->string()};
}

void WriteManifest(OutputSet& out, const std::string& command, const LoadedConfig& loaded,
                   json config, std::uint64_t seed, OutputFormat format,
                   std::chrono::steady_clock::time_point start) {
  const fs::path path = out.Add("manifest.json");
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  config["seed"] = seed;
  WriteJson(path, json{{"command", command},
                       {"tool_version", kToolVersion},
                       {"seed", seed},
                       {"config_source", loaded.source},
                       {"config", config},
                       {"format", FormatName(format)},
                       {"outputs", out.files()},
                       {"wall_clock_seconds", seconds}});
}

template <class Body>
int Guarded(const CommandOptions& options, const char* command, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    Log(options) << "gspbias " << command << ": invalid configuration: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const IoError& e) {
    Log(options) << "gspbias " << command << ": " << e.what() << "\n";
    return kExitIoError;
  } catch (const fs::filesystem_error& e) {
    Log(options) << "gspbias " << command << ": " << e.what() << "\n";
    return kExitIoError;
  } catch (const Error& e) {
    Log(options) << "gspbias " << command << ": invalid configuration: " << e.what() << "\n";
    return kExitConfigError;
  }
}

void EmitHistogram(OutputSet& out, const std::string& stem, const Histogram& histogram) {
  if (out.csv()) WriteHistogramCsv(out.Add(stem + ".csv"), histogram);
  if (out.json()) WriteJson(out.Add(stem + ".json"), HistogramJson(histogram));
}

json Unavailable(const std::string& reason) { return json{{"unavailable", reason}}; }

json MeanWithSe(std::span<const double> xs) {
  if (xs.empty()) return Unavailable("no samples");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  std::optional<double> se;
  if (xs.size() >= 2) {
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double n = static_cast<double>(xs.size());
    se = std::sqrt(ss / (n - 1.0) / n);
  }
  return json{{"mean", mean}, {"se", OptionalJson(se)}, {"samples", xs.size()}};
}

json SplitJson(const SplitVerdict& v) {
  json j{{"splittable", v.splittable}};
  if (v.splittable) {
    j["bin"] = v.bin;
    j["location"] = v.location;
  }
  return j;
}

// Adjacent ordered-statistic histograms, compared bin by bin with a
// per-bin band of kHistogramSigmas Poisson standard errors.
json HistogramSplits(const std::vector<Histogram>& hists) {
  json out = json::array();
  for (std::size_t k = 0; k + 1 < hists.size(); ++k) {
    const DensityGrid f = hists[k].Density();
    const DensityGrid g = hists[k + 1].Density();
    const auto sf = hists[k].DensityStandardError();
    const auto sg = hists[k + 1].DensityStandardError();
    std::vector<double> tol(sf.size());
    for (std::size_t b = 0; b < tol.size(); ++b) {
      tol[b] = kHistogramSigmas * std::hypot(sf[b], sg[b]);
    }
    json j = SplitJson(CheckSplittable(f, g, tol));
    j["ranks"] = {k + 1, k + 2};
    out.push_back(j);
  }
  return out;
}

json CpcSettingReport(const CpcStudyConfig& study, std::span<const TrialResult> trials,
                      const CpcSummary& summary, const std::vector<double>& cpcs,
                      const std::optional<Histogram>& cpc_hist,
                      const std::vector<std::vector<double>>& ordered,
                      const std::vector<Histogram>& ordered_hists) {
  const std::size_t m = study.ctrs.size();
  json report{{"setting", study.name},
              {"ads", m},
              {"ctrs", study.ctrs},
              {"impressions", study.impressions},
              {"trials", study.trials},
              {"degenerate_trials", summary.degenerate_trials},
              {"used_trials", summary.used_trials},
              {"expected_cpc", summary.expected_cpc},
              {"mean_observed_cpc", summary.mean_observed_cpc},
              {"mean_observed_cpc_se", OptionalJson(summary.mean_observed_se)},
              {"ratio", summary.ratio},
              {"ratio_of_means", summary.ratio_of_means},
              {"ratio_of_means_se", OptionalJson(summary.ratio_of_means_se)}};

  json shape;
  if (cpc_hist) {
    const double below = cpc_hist->MassBelow(1.0);
    shape["mass_below_1"] = below;
    shape["mass_at_or_above_1"] = 1.0 - below;
  }
  if (cpcs.size() >= 3) {
    const SkewnessTest sk = TestSkewness(cpcs);
    shape["skewness"] = sk.skewness;
    shape["skewness_se"] = sk.se;
    shape["skewness_z"] = sk.z;
  } else {
    shape["skewness"] = Unavailable("fewer than 3 non-degenerate trials");
  }
  report["cpc_distribution"] = shape;

  json ranks = json::array();
  for (std::size_t k = 1; k <= m; ++k) {
    json r{{"rank", k}, {"ordered_score", MeanWithSe(ordered[k - 1])}};
    try {
      const BiasFactor b = SelectionBias(trials, study, static_cast<int>(k));
      r["bias_factor"] = {{"value", b.factor}, {"se", OptionalJson(b.se)}, {"samples", b.samples}};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kRankUnreachable) throw;
      r["bias_factor"] = Unavailable(e.what());
    }
    try {
      const BiasFactor b =
          SelectionBias(trials, study, static_cast<int>(k), BiasAttribution::kFixedAd, 0);
      r["bias_factor_fixed_ad"] = {
          {"value", b.factor}, {"se", OptionalJson(b.se)}, {"ad", 1}, {"samples", b.samples}};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kRankUnreachable) throw;
      r["bias_factor_fixed_ad"] = Unavailable(e.what());
    }
    if (k < m) {
      try {
        const BiasGap gap = SelectionBiasGap(trials, study, static_cast<int>(k));
        r["gap_to_next"] = {{"value", gap.gap}, {"se", OptionalJson(gap.se)}};
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kRankUnreachable) throw;
        r["gap_to_next"] = Unavailable(e.what());
      }
    }
    ranks.push_back(r);
  }
  report["ranks"] = ranks;

  json conditional = json::array();
  for (std::size_t ad = 0; ad < m; ++ad) {
    for (std::size_t k = 1; k <= m; ++k) {
      json c{{"ad", ad + 1}, {"rank", k}};
      try {
        const auto xs = ConditionalRankSamples(trials, study, ad, static_cast<int>(k));
        c["score"] = MeanWithSe(xs);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kRankUnreachable) throw;
        c["score"] = Unavailable(e.what());
      }
      conditional.push_back(c);
    }
  }
  report["conditional_scores"] = conditional;
  report["ordered_score_splittability"] = HistogramSplits(ordered_hists);
  return report;
}

int SimulateCpc(const CommandOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const LoadedConfig loaded = LoadConfig(options, DefaultCpcConfigText());
  CpcRunConfig config = ParseCpcConfig(loaded.text);
  if (options.trials) {
    if (*options.trials < 1) throw ConfigError("--trials", "must be >= 1");
    config.trials = *options.trials;
  }
  const std::uint64_t seed = ResolveSeed(options.seed, config.seed);
  const int threads = ResolveThreads(options.threads);
  OutputSet out(options.out_dir, options.format);

  std::vector<Table2Row> rows;
  json settings = json::array();
  for (std::size_t s = 0; s < config.settings.size(); ++s) {
    CpcStudyConfig study = config.settings[s];
    study.trials = config.trials;
    study.seed = StreamKey(seed, {kSettingDomain, s});
    const std::vector<TrialResult> trials = RunCpcStudy(study, threads);
    const CpcSummary summary = SummarizeCpc(trials, study);
    rows.push_back({"(" + study.name + ")", summary.expected_cpc, summary.mean_observed_cpc,
                    summary.ratio});

    std::vector<double> cpcs;
    for (const TrialResult& t : trials) {
      if (!t.degenerate) cpcs.push_back(t.cpc);
    }
    std::optional<Histogram> cpc_hist;
    if (!cpcs.empty()) {
      cpc_hist = BuildHistogram(cpcs, config.cpc_bin_width);
      EmitHistogram(out, "cpc_hist_" + study.name, *cpc_hist);
    }

    const std::size_t m = study.ctrs.size();
    std::vector<std::vector<double>> ordered(m);
    for (const TrialResult& t : trials) {
      for (std::size_t k = 0; k < m; ++k) {
        ordered[k].push_back(t.ScoreOf(static_cast<std::size_t>(t.ranking[k] - 1), study));
      }
    }
    const std::vector<Histogram> ordered_hists =
        BuildSharedHistograms(ordered, config.score_bin_width);
    for (std::size_t k = 0; k < m; ++k) {
      EmitHistogram(out, "ordstat_hist_" + study.name + "_rank" + std::to_string(k + 1),
                    ordered_hists[k]);
    }

    if (config.emit_trial_logs) {
      if (out.csv()) WriteTrialsCsv(out.Add("trials_" + study.name + ".csv"), trials);
      if (out.json()) WriteTrialsJsonl(out.Add("trials_" + study.name + ".jsonl"), trials);
    }
    settings.push_back(
        CpcSettingReport(study, trials, summary, cpcs, cpc_hist, ordered, ordered_hists));
  }

  if (out.csv()) WriteTable2Csv(out.Add("table2.csv"), rows);
  if (out.json()) WriteJson(out.Add("table2.json"), Table2Json(rows));
  WriteJson(out.Add("bias_report.json"),
            json{{"seed", seed}, {"trials", config.trials}, {"settings", settings}});
  WriteManifest(out, "simulate-cpc", loaded, ToJson(config), seed, options.format, start);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct Tally {
  int passed = 0;
  int failed = 0;
  int skipped = 0;

  json Record(bool pass) {
    pass ? ++passed : ++failed;
    return pass ? "pass" : "fail";
  }
  json Skip() {
    ++skipped;
    return "skipped";
  }
};

std::vector<double> HistogramRange(const ScoreDistribution& dist, int bins) {
  const double sd = std::sqrt(dist.Variance());
  const double lo = std::max(dist.SupportLow(), dist.Mean() - 6.0 * sd);
  const double hi = std::min(dist.SupportHigh(), dist.Mean() + 6.0 * sd);
  std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) {
    edges[static_cast<std::size_t>(b)] = lo + (hi - lo) * b / bins;
  }
  edges.back() = hi;
  return edges;
}

DensityGrid MonteCarloDensity(const RankAccumulator& acc, const std::vector<double>& edges,
                              std::vector<double>& se) {
  DensityGrid grid{edges, std::vector<double>(acc.histogram.size())};
  se.assign(acc.histogram.size(), 0.0);
  for (std::size_t b = 0; b < acc.histogram.size(); ++b) {
    const double scale = static_cast<double>(acc.count) * (edges[b + 1] - edges[b]);
    grid.values[b] = static_cast<double>(acc.histogram[b]) / scale;
    se[b] = std::sqrt(static_cast<double>(acc.histogram[b])) / scale;
  }
  return grid;
}

json CandidateReport(std::span<const ScoreDistribution> dists, int i, const ScoreMonteCarlo& mc,
                     Tally& tally) {
  const int m = static_cast<int>(dists.size());
  const auto moments = ConditionalScoreMoments(dists, i);
  const auto& cells = mc.cells[static_cast<std::size_t>(i)];
  const auto& edges = mc.edges[static_cast<std::size_t>(i)];

  json ranks = json::array();
  for (int k = 1; k <= m; ++k) {
    const RankMoments& rm = moments[static_cast<std::size_t>(k - 1)];
    const RankAccumulator& acc = cells[static_cast<std::size_t>(k - 1)];
    json r{{"rank", k},
           {"probability", rm.probability},
           {"quadrature_mean", OptionalJson(rm.conditional_mean)},
           {"mc_samples", acc.count}};
    const auto se = acc.StandardError();
    r["mc_mean"] = acc.count > 0 ? json(acc.Mean()) : json(nullptr);
    r["mc_se"] = OptionalJson(se);
    if (rm.conditional_mean && acc.count >= kMinMonteCarloSamples && se && *se > 0.0) {
      const double z = (acc.Mean() - *rm.conditional_mean) / *se;
      r["mc_z"] = z;
      r["mc_agreement"] = tally.Record(std::abs(z) <= kMonteCarloSigmas);
    } else {
      r["mc_agreement"] = tally.Skip();
    }
    ranks.push_back(r);
  }

  json inequalities = json::array();
  json splits = json::array();
  for (int k = 1; k < m; ++k) {
    const auto& a = moments[static_cast<std::size_t>(k - 1)].conditional_mean;
    const auto& b = moments[static_cast<std::size_t>(k)].conditional_mean;
    json ineq{{"ranks", {k, k + 1}}};
    json split{{"ranks", {k, k + 1}}};
    if (a && b) {
      ineq["difference"] = *a - *b;
      ineq["verdict"] = tally.Record(*a - *b >= -kInequalityTolerance);

      const DensityGrid f = ConditionalDensityGrid(
          dists, i, k, edges, moments[static_cast<std::size_t>(k - 1)].probability);
      const DensityGrid g = ConditionalDensityGrid(
          dists, i, k + 1, edges, moments[static_cast<std::size_t>(k)].probability);
      double peak = 0.0;
      for (double v : f.values) peak = std::max(peak, v);
      for (double v : g.values) peak = std::max(peak, v);
      const SplitVerdict v = CheckSplittable(f, g, 1e-9 * peak);
      split["quadrature"] = SplitJson(v);
      split["verdict"] = tally.Record(v.splittable);

      const RankAccumulator& ca = cells[static_cast<std::size_t>(k - 1)];
      const RankAccumulator& cb = cells[static_cast<std::size_t>(k)];
      if (ca.count >= kMinMonteCarloSamples && cb.count >= kMinMonteCarloSamples) {
        std::vector<double> sf;
        std::vector<double> sg;
        const DensityGrid mf = MonteCarloDensity(ca, edges, sf);
        const DensityGrid mg = MonteCarloDensity(cb, edges, sg);
        std::vector<double> tol(sf.size());
        for (std::size_t bin = 0; bin < tol.size(); ++bin) {
          tol[bin] = kHistogramSigmas * std::hypot(sf[bin], sg[bin]);
        }
        split["monte_carlo"] = SplitJson(CheckSplittable(mf, mg, tol));
      }
    } else {
      ineq["verdict"] = tally.Skip();
      split["verdict"] = tally.Skip();
    }
    inequalities.push_back(ineq);
    splits.push_back(split);
  }

  json report{{"candidate", i + 1},
              {"score", dists[static_cast<std::size_t>(i)].Describe()},
              {"ranks", ranks},
              {"inequalities", inequalities},
              {"splittability", splits},
              {"histogram_edges", edges}};
  if (m >= 2) {
    try {
      const PhiPsiCheck pp = CheckPhiPsi(dists, i);
      const bool pass = std::abs(pp.zero_integral) <= kPhiPsiTolerance &&
                        pp.weighted_integral >= -kPhiPsiTolerance && pp.phi_monotone &&
                        pp.psi_monotone;
      report["phi_psi"] = {{"alpha", pp.alpha},
                           {"zero_integral", pp.zero_integral},
                           {"weighted_integral", pp.weighted_integral},
                           {"phi_monotone", pp.phi_monotone},
                           {"psi_monotone", pp.psi_monotone},
                           {"verdict", tally.Record(pass)}};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kRankUnreachable) throw;
      report["phi_psi"] = {{"verdict", tally.Skip()}, {"reason", e.what()}};
    }
  }
  return report;
}

int VerifyTheorems(const CommandOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const LoadedConfig loaded = LoadConfig(options, DefaultTheoremConfigText());
  TheoremRunConfig config = ParseTheoremConfig(loaded.text, loaded.base_dir);
  if (options.trials) {
    if (*options.trials < 1) throw ConfigError("--trials", "must be >= 1");
    config.mc_trials = *options.trials;
  }
  const std::uint64_t seed = ResolveSeed(options.seed, config.seed);
  const int threads = ResolveThreads(options.threads);
  OutputSet out(options.out_dir, options.format);

  Tally total;
  json cases = json::array();
  std::vector<ScoreMonteCarlo> runs;
  runs.reserve(config.cases.size());
  for (std::size_t c = 0; c < config.cases.size(); ++c) {
    const TheoremCase& tc = config.cases[c];
    std::vector<std::vector<double>> edges;
    for (const ScoreDistribution& d : tc.scores) {
      edges.push_back(HistogramRange(d, config.histogram_bins));
    }
    runs.push_back(RunScoreMonteCarlo(tc.scores, config.mc_trials, seed, c, threads, edges));
    // Candidates are independent; results are merged in candidate order.
    const auto m = static_cast<std::int64_t>(tc.scores.size());
    std::vector<json> reports(static_cast<std::size_t>(m));
    std::vector<Tally> tallies(static_cast<std::size_t>(m));
    ParallelFor(m, threads, [&](std::int64_t i) {
      const auto slot = static_cast<std::size_t>(i);
      reports[slot] =
          CandidateReport(tc.scores, static_cast<int>(i), runs.back(), tallies[slot]);
    });
    Tally tally;
    json candidates = json::array();
    for (std::size_t i = 0; i < reports.size(); ++i) {
      candidates.push_back(std::move(reports[i]));
      tally.passed += tallies[i].passed;
      tally.failed += tallies[i].failed;
      tally.skipped += tallies[i].skipped;
    }
    std::vector<std::string> described;
    for (const ScoreDistribution& d : tc.scores) described.push_back(d.Describe());
    std::string status = "pass";
    if (tally.failed > 0) {
      status = "fail";
    } else if (tally.passed == 0 && tc.scores.size() > 1) {
      status = "skipped";
    }
    json entry{{"name", tc.name},
               {"participants", tc.scores.size()},
               {"scores", described},
               {"status", status},
               {"verdicts", {{"passed", tally.passed},
                             {"failed", tally.failed},
                             {"skipped", tally.skipped}}},
               {"candidates", candidates}};
    if (tc.scores.size() == 1) entry["note"] = "single participant; ordering holds vacuously";
    cases.push_back(entry);
    total.passed += tally.passed;
    total.failed += tally.failed;
    total.skipped += tally.skipped;
    Log(options) << "verify-theorems: " << tc.name << ": " << status << "\n";
  }

  if (out.csv()) {
    const fs::path path = out.Add("theorem_means.csv");
    std::ofstream csv(path, std::ios::binary);
    if (!csv) throw IoError("cannot write " + path.string());
    csv << "configuration,candidate,rank,probability,quadrature_mean,mc_mean,mc_se,mc_samples\n";
    for (std::size_t c = 0; c < cases.size(); ++c) {
      for (const json& cand : cases[c]["candidates"]) {
        for (const json& r : cand["ranks"]) {
          auto num = [](const json& v) {
            return v.is_number() ? FormatDouble(v.get<double>()) : std::string();
          };
          csv << config.cases[c].name << ',' << cand["candidate"].get<int>() << ','
              << r["rank"].get<int>() << ',' << num(r["probability"]) << ','
              << num(r["quadrature_mean"]) << ',' << num(r["mc_mean"]) << ','
              << num(r["mc_se"]) << ',' << r["mc_samples"].get<std::int64_t>() << '\n';
        }
      }
    }
    if (!csv) throw IoError("failed writing " + path.string());
  }
  const bool all_passed = total.failed == 0;
  WriteJson(out.Add("theorem_report.json"),
            json{{"seed", seed},
                 {"mc_trials", config.mc_trials},
                 {"tolerances",
                  {{"inequality", kInequalityTolerance},
                   {"monte_carlo_sigmas", kMonteCarloSigmas},
                   {"min_monte_carlo_samples", kMinMonteCarloSamples},
                   {"phi_psi", kPhiPsiTolerance}}},
                 {"configurations", cases},
                 {"summary",
                  {{"passed", total.passed},
                   {"failed", total.failed},
                   {"skipped", total.skipped},
                   {"all_passed", all_passed}}}});
  WriteManifest(out, "verify-theorems", loaded, ToJson(config), seed, options.format, start);
  return all_passed ? kExitOk : kExitVerificationFailed;
}

// ---------------------------------------------------------------------------

json CalibrationJson(const Calibration& c) {
  return {{"value", c.value}, {"se", c.se}, {"records", c.records}, {"clicks", c.clicks}};
}

int AbRun(const CommandOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const LoadedConfig loaded = LoadConfig(options, DefaultAbConfigText());
  AbRunConfig config = ParseAbConfig(loaded.text);
  if (options.trials) Log(options) << "gspbias ab-run: --trials is ignored for ab-run\n";
  const std::uint64_t seed = ResolveSeed(options.seed, config.seed);
  config.ab.seed = seed;
  const int threads = ResolveThreads(options.threads);
  OutputSet out(options.out_dir, options.format);

  const AbResult result = RunAbExperiment(config.ab, std::min(threads, 2));
  const std::array<const std::vector<ImpressionRecord>*, 2> logs{&result.bucket_a,
                                                                 &result.bucket_b};
  const std::array<Bucket, 2> buckets{Bucket::kA, Bucket::kB};
  const bool same_model = config.ab.estimators[0] == config.ab.estimators[1];

  std::vector<Table3Row> table;
  json models = json::array();
  std::array<std::vector<ImpressionRecord>, 2> windows;
  for (std::size_t b = 0; b < 2; ++b) {
    const std::string letter(1, BucketLetter(buckets[b]));
    if (out.csv()) WriteImpressionsCsv(out.Add("impressions_" + letter + ".csv"), *logs[b]);
    if (out.json()) WriteImpressionsJsonl(out.Add("impressions_" + letter + ".jsonl"), *logs[b]);

    windows[b] = EvaluationWindow(*logs[b], config.ab.burn_in_days);
    std::string model(EstimatorName(config.ab.estimators[b]));
    if (same_model) model += "-" + letter;
    json entry{{"bucket", letter},
               {"model", model},
               {"records", logs[b]->size()},
               {"evaluation_records", windows[b].size()}};
    Table3Row row{model, std::nullopt, std::nullopt};
    try {
      const CalibrationReport r = CRelative(windows[b]);
      entry["status"] = "ok";
      entry["non_weighted"] = {{"c_relative", r.c_relative},
                               {"se", r.c_relative_se},
                               {"greedy", CalibrationJson(r.greedy)},
                               {"random", CalibrationJson(r.random)}};
      entry["bid_weighted"] = {{"c_relative", r.c_relative_bid_weighted},
                               {"se", r.c_relative_bid_weighted_se},
                               {"greedy", CalibrationJson(r.greedy_bid_weighted)},
                               {"random", CalibrationJson(r.random_bid_weighted)}};
      row.non_weighted = r.c_relative;
      row.bid_weighted = r.c_relative_bid_weighted;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUndefinedCalibration) throw;
      entry["status"] = std::string(ErrorCodeName(e.code()));
      entry["message"] = e.what();
    }
    table.push_back(row);
    models.push_back(entry);
  }

  if (out.csv()) WriteTable3Csv(out.Add("table3.csv"), table);
  WriteJson(out.Add("calibration_report.json"),
            json{{"seed", seed},
                 {"burn_in_days", config.ab.burn_in_days},
                 {"epsilon", config.ab.epsilon},
                 {"models", models}});

  json totals{{"seed", seed}, {"burn_in_days", config.ab.burn_in_days}};
  try {
    const RelativeTotals rt = RtvRtc(windows[0], windows[1]);
    totals["status"] = "ok";
    totals["rtv"] = rt.rtv;
    totals["rtc"] = rt.rtc;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kUndefinedRatio) throw;
    totals["status"] = std::string(ErrorCodeName(e.code()));
    totals["message"] = e.what();
  }
  WriteJson(out.Add("rtv_rtc.json"), totals);
  WriteManifest(out, "ab-run", loaded, ToJson(config), seed, options.format, start);
  return kExitOk;
}

}  // namespace

std::uint64_t ResolveSeed(const std::optional<std::uint64_t>& flag,
                          const std::optional<std::uint64_t>& config_seed) {
  if (flag) return *flag;
  if (config_seed) return *config_seed;
  if (const char* env = std::getenv("GSPBIAS_SEED"); env != nullptr && *env != '\0') {
    const std::string text(env);
    std::size_t used = 0;
    unsigned long long value = 0;
    try {
      if (text.find('-') != std::string::npos) throw std::invalid_argument("negative");
      value = std::stoull(text, &used, 10);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size()) {
      throw ConfigError("GSPBIAS_SEED", "expected an unsigned 64-bit integer, got '" + text + "'");
    }
    return value;
  }
  return kDefaultSeed;
}

int CmdSimulateCpc(const CommandOptions& options) {
  return Guarded(options, "simulate-cpc", [&] { return SimulateCpc(options); });
}

int CmdVerifyTheorems(const CommandOptions& options) {
  return Guarded(options, "verify-theorems", [&] { return VerifyTheorems(options); });
}

int CmdAbRun(const CommandOptions& options) {
  return Guarded(options, "ab-run", [&] { return AbRun(options); });
}

}  // namespace gspbias
