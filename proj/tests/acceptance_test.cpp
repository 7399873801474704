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

// Acceptance suite. Runs each release criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exit status is nonzero on any FAIL.

#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gspbias/auction.hpp"
#include "gspbias/commands.hpp"
#include "gspbias/config.hpp"
#include "gspbias/metrics.hpp"
#include "gspbias/quadrature.hpp"
#include "gspbias/sim.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gspbias;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json ReadJson(const fs::path& p) { return json::parse(Slurp(p)); }

std::vector<std::vector<std::string>> ReadCsv(const fs::path& p) {
  std::istringstream in(Slurp(p));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

std::size_t Column(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::runtime_error("missing column " + name);
  return static_cast<std::size_t>(it - header.begin());
}

double MeanOf(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double SeOf(const std::vector<double>& xs) {
  const double mu = MeanOf(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - mu) * (x - mu);
  const double n = static_cast<double>(xs.size());
  return std::sqrt(ss / (n - 1.0) / n);
}

// Parsed per-trial log of a two-ad study.
struct TwoAdTrials {
  std::vector<double> cpc;  // non-degenerate trials only
  std::vector<std::array<double, 2>> estimates;
  std::vector<std::array<int, 2>> ranks;
};

TwoAdTrials ReadTwoAdTrials(const fs::path& p) {
  const auto rows = ReadCsv(p);
  const auto& h = rows.at(0);
  const std::size_t c_cpc = Column(h, "cpc");
  const std::size_t c_deg = Column(h, "degenerate");
  const std::size_t e1 = Column(h, "estimate_1");
  const std::size_t e2 = Column(h, "estimate_2");
  const std::size_t r1 = Column(h, "rank_1");
  const std::size_t r2 = Column(h, "rank_2");
  TwoAdTrials t;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r[c_deg] == "0") t.cpc.push_back(std::stod(r[c_cpc]));
    t.estimates.push_back({std::stod(r[e1]), std::stod(r[e2])});
    t.ranks.push_back({std::stoi(r[r1]), std::stoi(r[r2])});
  }
  return t;
}

std::vector<std::pair<double, double>> ReadHistogram(const fs::path& p) {
  const auto rows = ReadCsv(p);
  std::vector<std::pair<double, double>> bins;  // (left edge, count)
  for (std::size_t i = 1; i < rows.size(); ++i) {
    bins.emplace_back(std::stod(rows[i][0]), std::stod(rows[i][2]));
  }
  return bins;
}

// Compares two output directories: all files byte-identical except the
// manifest, whose content must agree apart from wall-clock time.
std::string CompareDirs(const fs::path& a, const fs::path& b, int& files) {
  std::set<std::string> na;
  std::set<std::string> nb;
  for (const auto& e : fs::directory_iterator(a)) na.insert(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(b)) nb.insert(e.path().filename().string());
  if (na != nb) return "file sets differ";
  for (const std::string& n : na) {
    ++files;
    if (n == "manifest.json") {
      json ma = ReadJson(a / n);
      json mb = ReadJson(b / n);
      ma.erase("wall_clock_seconds");
      mb.erase("wall_clock_seconds");
      if (ma != mb) return "manifest differs";
    } else if (Slurp(a / n) != Slurp(b / n)) {
      return n + " differs";
    }
  }
  return {};
}

class Suite {
 public:
  explicit Suite(fs::path work) : work_(std::move(work)) {}

  const fs::path& work() const { return work_; }

  void Run(int id, const std::string& name, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures_ += o.pass ? 0 : 1;
  }

  int failures() const { return failures_; }

 private:
  fs::path work_;
  int failures_ = 0;
};

CommandOptions Quiet(const std::optional<fs::path>& config, const fs::path& out, int threads,
                     std::ostream& log) {
  CommandOptions o;
  o.config = config;
  o.out_dir = out;
  o.threads = threads;
  o.log = &log;
  return o;
}

fs::path WriteText(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

const std::array<const char*, 6> kSettings{"a", "b", "c", "d", "e", "f"};
const std::array<double, 6> kReferenceMean{0.934, 0.894, 0.803, 0.966, 0.900, 0.800};
const std::array<double, 6> kReferenceRatio{0.934, 0.993, 1.00, 0.966, 1.00, 1.00};

}  // namespace

int main() {
  const fs::path work =
      fs::temp_directory_path() / ("gspbias_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(work);
  fs::create_directories(work);
  Suite suite(work);
  std::ostringstream log;
  const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::printf("acceptance: %d hardware thread(s), work dir %s\n", hw, work.c_str());

  // Default two-ad study, with per-trial logs for independent recomputation.
  std::string cpc_text = DefaultCpcConfigText();
  cpc_text.replace(cpc_text.find("emit_trial_logs: false"), 22, "emit_trial_logs: true");
  const fs::path cpc_cfg = WriteText(work / "cpc.cfg", cpc_text);
  const fs::path cpc_out = work / "cpc";
  double cpc_seconds = 0.0;
  int cpc_exit = -1;
  {
    const auto start = std::chrono::steady_clock::now();
    cpc_exit = CmdSimulateCpc(Quiet(cpc_cfg, cpc_out, 0, log));
    cpc_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  suite.Run(1, "two-ad mean observed CPC within 0.01 of reference values", [&]() -> Outcome {
    if (cpc_exit != kExitOk) return {false, "simulate-cpc exit " + std::to_string(cpc_exit)};
    const auto rows = ReadCsv(cpc_out / "table2.csv");
    const std::size_t col = Column(rows[0], "mean_observed_cpc");
    bool ok = rows.size() == 7;
    std::string d;
    for (std::size_t s = 0; s < 6 && s + 1 < rows.size(); ++s) {
      const double v = std::stod(rows[s + 1][col]);
      ok = ok && std::abs(v - kReferenceMean[s]) <= 0.01;
      d += Fmt("%s=%.4f/%.3f ", kSettings[s], v, kReferenceMean[s]);
    }
    return {ok, d + Fmt("T=20000 per setting, run %.2f s", cpc_seconds)};
  });

  suite.Run(2, "observed/expected ratio within 0.012 of reference values", [&]() -> Outcome {
    const auto rows = ReadCsv(cpc_out / "table2.csv");
    const std::size_t col = Column(rows[0], "ratio");
    bool ok = rows.size() == 7;
    std::string d;
    for (std::size_t s = 0; s < 6 && s + 1 < rows.size(); ++s) {
      const double v = std::stod(rows[s + 1][col]);
      ok = ok && std::abs(v - kReferenceRatio[s]) <= 0.012;
      d += Fmt("%s=%.4f/%.3f ", kSettings[s], v, kReferenceRatio[s]);
    }
    return {ok, d};
  });

  suite.Run(3, "conditional means decrease in rank; Monte Carlo agrees within 4 SE",
            [&]() -> Outcome {
    const fs::path out = work / "theorems";
    const auto start = std::chrono::steady_clock::now();
    const int code = CmdVerifyTheorems(Quiet(std::nullopt, out, 0, log));
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (code != kExitOk) return {false, "verify-theorems exit " + std::to_string(code)};
    const json r = ReadJson(out / "theorem_report.json");
    int configs = 0;
    int inequalities = 0;
    int comparisons = 0;
    double worst_z = 0.0;
    double worst_gap = 1e300;
    bool uniform = false;
    bool beta = false;
    bool ok = true;
    std::set<int> sizes;
    for (const json& c : r["configurations"]) {
      const int m = c["participants"].get<int>();
      if (m != 2 && m != 3 && m != 4 && m != 6) continue;
      ++configs;
      sizes.insert(m);
      for (const json& s : c["scores"]) {
        const std::string d = s.get<std::string>();
        uniform = uniform || d.starts_with("uniform");
        beta = beta || d.starts_with("scaled_beta");
      }
      for (const json& cand : c["candidates"]) {
        const json& ranks = cand["ranks"];
        for (std::size_t k = 0; k + 1 < ranks.size(); ++k) {
          const json& a = ranks[k]["quadrature_mean"];
          const json& b = ranks[k + 1]["quadrature_mean"];
          if (a.is_null() || b.is_null()) continue;
          ++inequalities;
          const double gap = a.get<double>() - b.get<double>();
          worst_gap = std::min(worst_gap, gap);
          ok = ok && gap >= -1e-6;
        }
        for (const json& rk : ranks) {
          if (rk["quadrature_mean"].is_null() || rk["mc_se"].is_null()) continue;
          if (rk["mc_samples"].get<std::int64_t>() < 30) continue;
          ++comparisons;
          const double z = (rk["mc_mean"].get<double>() - rk["quadrature_mean"].get<double>()) /
                           rk["mc_se"].get<double>();
          worst_z = std::max(worst_z, std::abs(z));
          ok = ok && std::abs(z) <= 4.0;
        }
      }
    }
    const std::int64_t trials = r.value("mc_trials", std::int64_t{0});
    ok = ok && configs >= 10 && sizes.size() == 4 && uniform && beta && trials >= 1000000 &&
         secs < 60.0;
    return {ok, Fmt("%d configurations, %d inequalities (min gap %.3g), %d MC comparisons "
                    "(max |z| %.2f) at T=%lld, runtime %.1f s",
                    configs, inequalities, worst_gap, comparisons, worst_z,
                    static_cast<long long>(trials), secs)};
  });

  suite.Run(4, "two iid Uniform(0,1): conditional means 2/3 and 1/3", [&]() -> Outcome {
    const std::vector<ScoreDistribution> d{ScoreDistribution::Uniform(0, 1),
                                           ScoreDistribution::Uniform(0, 1)};
    const double top = ConditionalScoreMean(d, 0, 1);
    const double bottom = ConditionalScoreMean(d, 0, 2);
    const ScoreMonteCarlo mc = RunScoreMonteCarlo(d, 200000, 20240607, 0, hw);
    const auto& c1 = mc.cells[0][0];
    const auto& c2 = mc.cells[0][1];
    const double z1 = (c1.Mean() - 2.0 / 3.0) / *c1.StandardError();
    const double z2 = (c2.Mean() - 1.0 / 3.0) / *c2.StandardError();
    const bool ok = std::abs(top - 2.0 / 3.0) <= 1e-4 && std::abs(bottom - 1.0 / 3.0) <= 1e-4 &&
                    std::abs(z1) <= 4.0 && std::abs(z2) <= 4.0;
    return {ok, Fmt("quadrature %.8f, %.8f; Monte Carlo z %.2f, %.2f", top, bottom, z1, z2)};
  });

  suite.Run(5, "selection-bias factors", [&]() -> Outcome {
    // Recomputed from the raw trial logs. Rank-k factor averages
    // estimate / true CTR of whichever ad took rank k.
    const std::array<double, 2> ctr_a{0.05, 0.05};
    const std::array<double, 2> ctr_f{0.05, 0.04};
    auto factors = [](const TwoAdTrials& t, const std::array<double, 2>& ctr) {
      std::array<std::vector<double>, 2> by_rank;
      std::vector<double> gap;
      for (std::size_t i = 0; i < t.estimates.size(); ++i) {
        std::array<double, 2> v{};
        for (int ad = 0; ad < 2; ++ad) {
          v[static_cast<std::size_t>(t.ranks[i][static_cast<std::size_t>(ad)] - 1)] =
              t.estimates[i][static_cast<std::size_t>(ad)] / ctr[static_cast<std::size_t>(ad)];
        }
        by_rank[0].push_back(v[0]);
        by_rank[1].push_back(v[1]);
        gap.push_back(v[0] - v[1]);
      }
      return std::make_tuple(by_rank, gap);
    };
    const auto [ra, ga] = factors(ReadTwoAdTrials(cpc_out / "trials_a.csv"), ctr_a);
    const auto [rf, gf] = factors(ReadTwoAdTrials(cpc_out / "trials_f.csv"), ctr_f);
    const double gap = MeanOf(ga);
    const double gap_se = SeOf(ga);
    const double f1 = MeanOf(rf[0]);
    const double f2 = MeanOf(rf[1]);
    const double f1_se = SeOf(rf[0]);
    const double f2_se = SeOf(rf[1]);
    const bool ok = MeanOf(ra[0]) >= MeanOf(ra[1]) && gap > 5.0 * gap_se &&
                    std::abs(f1 - 1.0) <= 2.0 * f1_se && std::abs(f2 - 1.0) <= 2.0 * f2_se;
    return {ok, Fmt("(a) b1=%.4f b2=%.4f gap=%.4f (%.1f SE); (f) b1=%.4f (%.2f SE from 1) "
                    "b2=%.4f (%.2f SE from 1)",
                    MeanOf(ra[0]), MeanOf(ra[1]), gap, gap / gap_se, f1, (f1 - 1.0) / f1_se,
                    f2, (f2 - 1.0) / f2_se)};
  });

  suite.Run(6, "selection polytope agrees with ranking on 10000 auctions", [&]() -> Outcome {
    std::mt19937_64 gen(12345);
    std::uniform_int_distribution<int> size(2, 5);
    std::uniform_real_distribution<double> bid(0.1, 3.0);
    std::uniform_real_distribution<double> ctr(0.001, 0.2);
    int agree = 0;
    int checks = 0;
    const int auctions = 10000;
    for (int rep = 0; rep < auctions; ++rep) {
      const int m = size(gen);
      std::vector<Ad> ads;
      std::vector<ScoredAd> scored;
      Eigen::VectorXd y(m);
      for (int i = 0; i < m; ++i) {
        const double b = bid(gen);
        const double c = ctr(gen);
        ads.push_back({100 + i, b, 0.0});
        scored.push_back(ScoredAd::Make(100 + i, b, c));
        y(i) = c;
      }
      const AdId winner = RankAds(scored).front();
      bool all = true;
      for (int c = 0; c < m; ++c) {
        const SelectionEvent ev = BuildSelectionEvent(ads, c);
        ++checks;
        all = all && ev.Admits(ev.Arrange(y)) == (ads[static_cast<std::size_t>(c)].id == winner);
      }
      agree += all ? 1 : 0;
    }
    return {agree == auctions,
            Fmt("%d/%d auctions agree (%d candidate checks)", agree, auctions, checks)};
  });

  suite.Run(7, "calibration properties", [&]() -> Outcome {
    // Calibrated predictor: the oracle estimator. I_1 comes from a greedy
    // run (epsilon 0) and I_rand from a uniform run (epsilon 1).
    AbConfig base = ParseAbConfig(DefaultAbConfigText()).ab;
    base.seed = 20240607;
    base.traffic_per_day = 20000;
    base.estimators = {EstimatorKind::kOracle, EstimatorKind::kOracle};
    AbConfig greedy_cfg = base;
    greedy_cfg.epsilon = 0.0;
    AbConfig random_cfg = base;
    random_cfg.epsilon = 1.0;
    random_cfg.seed = 20240608;
    std::vector<ImpressionRecord> records;
    for (const auto& r : RunAbBucket(greedy_cfg, Bucket::kA)) {
      if (r.mode == SelectionMode::kGreedy) records.push_back(r);
    }
    for (const auto& r : RunAbBucket(random_cfg, Bucket::kA)) {
      if (r.mode == SelectionMode::kRandom) records.push_back(r);
    }
    const CalibrationReport cal = CRelative(records);
    const double z = (cal.c_relative - 1.0) / cal.c_relative_se;

    const fs::path out = work / "ab";
    const int code = CmdAbRun(Quiet(std::nullopt, out, 0, log));
    if (code != kExitOk) return {false, "ab-run exit " + std::to_string(code)};
    const json rep = ReadJson(out / "calibration_report.json");
    double naive = 0.0;
    double pooled = 0.0;
    std::string d;
    std::int64_t accesses = 0;
    for (const json& m : rep["models"]) {
      const double v = m["non_weighted"]["c_relative"].get<double>();
      if (m["model"] == "naive") naive = v;
      if (m["model"] == "pooled") pooled = v;
      accesses = m["records"].get<std::int64_t>();
      d += Fmt("%s=%.4f (SE %.4f) ", m["model"].get<std::string>().c_str(), v,
               m["non_weighted"]["se"].get<double>());
    }
    const bool ok = std::abs(z) <= 3.0 && accesses >= 1000000 && naive > pooled && pooled > 1.0;
    return {ok, Fmt("calibrated C_relative=%.4f (%.2f SE from 1, %zu records); "
                    "default A/B %lld accesses per bucket: ",
                    cal.c_relative, z, records.size(), static_cast<long long>(accesses)) +
                    d};
  });

  suite.Run(8, "byte-identical outputs for 1 vs N threads", [&]() -> Outcome {
    const int n = std::max(4, hw);
    std::string cpc = DefaultCpcConfigText();
    cpc.replace(cpc.find("trials: 20000"), 13, "trials: 3000");
    cpc.replace(cpc.find("emit_trial_logs: false"), 22, "emit_trial_logs: true");
    const fs::path cpc_small = WriteText(work / "cpc_small.cfg", cpc);
    const fs::path thm_small = WriteText(work / "thm_small.cfg", R"(schema_version: 1
mc_trials: 50000
configurations:
  - name: uniform-iid-m2
    scores:
      - {kind: uniform, low: 0, high: 1, repeat: 2}
  - name: beta-mixed-m3
    scores:
      - {kind: scaled_beta, alpha: 2, beta: 38, scale: 1}
      - {kind: scaled_beta, alpha: 4, beta: 76, scale: 1.1}
      - {kind: uniform, low: 0.01, high: 0.08}
)");
    std::string ab = DefaultAbConfigText();
    ab.replace(ab.find("traffic_per_day: 40000"), 22, "traffic_per_day: 3000");
    const fs::path ab_small = WriteText(work / "ab_small.cfg", ab);

    using Cmd = int (*)(const CommandOptions&);
    const std::array<std::tuple<const char*, Cmd, fs::path>, 3> cmds{
        std::tuple{"simulate-cpc", &CmdSimulateCpc, cpc_small},
        std::tuple{"verify-theorems", &CmdVerifyTheorems, thm_small},
        std::tuple{"ab-run", &CmdAbRun, ab_small}};
    bool ok = true;
    std::string d;
    for (const auto& [name, cmd, cfg] : cmds) {
      int files = 0;
      std::string diff;
      for (const OutputFormat format : {OutputFormat::kCsv, OutputFormat::kJson}) {
        const std::string tag = std::string(name) + (format == OutputFormat::kCsv ? "_csv" : "_json");
        CommandOptions one = Quiet(cfg, work / "det" / (tag + "_1"), 1, log);
        CommandOptions many = Quiet(cfg, work / "det" / (tag + "_n"), n, log);
        one.format = format;
        many.format = format;
        const int c1 = cmd(one);
        const int cn = cmd(many);
        if (c1 != kExitOk || cn != kExitOk) {
          diff = Fmt("exit %d/%d", c1, cn);
          break;
        }
        diff = CompareDirs(one.out_dir, many.out_dir, files);
        if (!diff.empty()) break;
      }
      ok = ok && diff.empty();
      d += Fmt("%s %s (%d files); ", name, diff.empty() ? "identical" : diff.c_str(), files);
    }
    return {ok, d + Fmt("threads 1 vs %d", n)};
  });

  suite.Run(9, "CPC and ordered-score histogram shapes", [&]() -> Outcome {
    // Setting (a): mass split at 1 and a skewness test, computed from the
    // raw CPCs. Setting (f): overlap of rank-1 and rank-2 score histograms.
    const TwoAdTrials t = ReadTwoAdTrials(cpc_out / "trials_a.csv");
    const double n = static_cast<double>(t.cpc.size());
    double below = 0.0;
    for (double c : t.cpc) below += c < 1.0 ? 1.0 : 0.0;
    const double mu = MeanOf(t.cpc);
    double m2 = 0.0;
    double m3 = 0.0;
    for (double c : t.cpc) {
      m2 += (c - mu) * (c - mu);
      m3 += (c - mu) * (c - mu) * (c - mu);
    }
    m2 /= n;
    m3 /= n;
    const double skew = m3 / std::pow(m2, 1.5);
    const double skew_se = std::sqrt(6.0 * n * (n - 1.0) / ((n - 2.0) * (n + 1.0) * (n + 3.0)));
    const double z = skew / skew_se;

    const auto h1 = ReadHistogram(cpc_out / "ordstat_hist_f_rank1.csv");
    const auto h2 = ReadHistogram(cpc_out / "ordstat_hist_f_rank2.csv");
    double n1 = 0.0;
    double n2 = 0.0;
    for (const auto& [left, c] : h1) n1 += c;
    for (const auto& [left, c] : h2) n2 += c;
    double overlap = 0.0;
    for (std::size_t b = 0; b < std::min(h1.size(), h2.size()); ++b) {
      if (h1[b].first != h2[b].first) throw std::runtime_error("histogram edges differ");
      overlap += std::min(h1[b].second / n1, h2[b].second / n2);
    }
    const bool ok = h1.size() == h2.size() && below / n > 1.0 - below / n &&
                    std::abs(z) > 3.0 && overlap < 0.01;
    return {ok, Fmt("(a) mass below 1 %.4f vs at/above %.4f, skewness %.3f (z %.1f); "
                    "(f) rank-1/rank-2 overlap %.5f",
                    below / n, 1.0 - below / n, skew, z, overlap)};
  });

  fs::remove_all(work);
  std::printf("acceptance: %d failure(s)\n", suite.failures());
  return suite.failures() == 0 ? 0 : 1;
}
