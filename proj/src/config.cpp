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

#include "gspbias/config.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "gspbias/embedded_configs.hpp"
#include "gspbias/error.hpp"
#include "gspbias/io.hpp"
#include "gspbias/random.hpp"

namespace gspbias {
namespace {

constexpr std::uint64_t kAdGeneratorDomain = 101;

const std::string kDefaultCpc = kEmbeddedTable2Config;
const std::string kDefaultTheorems = kEmbeddedTheoremsConfig;
const std::string kDefaultAb = kEmbeddedAbConfig;

std::string Join(const std::string& parent, const std::string& child) {
  return parent.empty() ? child : parent + "." + child;
}

std::string Indexed(const std::string& parent, std::size_t i) {
  return parent + "[" + std::to_string(i) + "]";
}

YAML::Node Require(const YAML::Node& node, const std::string& key, const std::string& path) {
  if (!node.IsMap()) throw ConfigError(path.empty() ? "<root>" : path, "expected a mapping");
  YAML::Node child = node[key];
  if (!child) throw ConfigError(Join(path, key), "missing required field");
  return child;
}

template <class T>
T As(const YAML::Node& node, const std::string& path) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path, "cannot read value '" + YAML::Dump(node) + "'");
  }
}

template <class T>
T Get(const YAML::Node& node, const std::string& key, const std::string& path) {
  return As<T>(Require(node, key, path), Join(path, key));
}

template <class T>
T GetOr(const YAML::Node& node, const std::string& key, const std::string& path, T fallback) {
  if (!node.IsMap() || !node[key]) return fallback;
  return As<T>(node[key], Join(path, key));
}

std::optional<std::uint64_t> OptionalSeed(const YAML::Node& root) {
  if (!root["seed"]) return std::nullopt;
  return As<std::uint64_t>(root["seed"], "seed");
}

YAML::Node LoadDocument(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("<document>", std::string("YAML syntax error: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("<root>", "expected a mapping");
  const int version = Get<int>(root, "schema_version", "");
  if (version != kSchemaVersion) {
    throw ConfigError("schema_version", "unsupported version " + std::to_string(version));
  }
  return root;
}

void CheckKnownKeys(const YAML::Node& node, const std::string& path,
                    std::initializer_list<const char*> keys) {
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError(Join(path, key), "unknown field");
  }
}

void Positive(double value, const std::string& path) {
  if (!(value > 0.0) || !std::isfinite(value)) throw ConfigError(path, "must be positive");
}

void Probability(double value, const std::string& path) {
  if (!(value >= 0.0 && value <= 1.0)) throw ConfigError(path, "must lie in [0, 1]");
}

EstimatorKind ParseEstimator(const YAML::Node& node, const std::string& path) {
  const auto name = As<std::string>(node, path);
  if (name == "naive") return EstimatorKind::kNaive;
  if (name == "pooled") return EstimatorKind::kPooled;
  if (name == "oracle") return EstimatorKind::kOracle;
  throw ConfigError(path, "unknown estimator '" + name + "' (naive, pooled, oracle)");
}

ScoreDistribution ParseScore(const YAML::Node& node, const std::string& path,
                             const std::filesystem::path& base_dir) {
  const auto kind = Get<std::string>(node, "kind", path);
  try {
    if (kind == "uniform") {
      CheckKnownKeys(node, path, {"kind", "low", "high", "repeat"});
      return ScoreDistribution::Uniform(Get<double>(node, "low", path),
                                        Get<double>(node, "high", path));
    }
    if (kind == "scaled_beta") {
      CheckKnownKeys(node, path, {"kind", "alpha", "beta", "scale", "repeat"});
      return ScoreDistribution::ScaledBeta(Get<double>(node, "alpha", path),
                                           Get<double>(node, "beta", path),
                                           GetOr<double>(node, "scale", path, 1.0));
    }
    if (kind == "empirical") {
      CheckKnownKeys(node, path, {"kind", "histogram", "repeat"});
      std::filesystem::path file = Get<std::string>(node, "histogram", path);
      if (file.is_relative()) file = base_dir / file;
      HistogramTable table;
      try {
        table = ReadHistogramCsv(file);
      } catch (const IoError& e) {
        throw ConfigError(Join(path, "histogram"), e.what());
      }
      return ScoreDistribution::Empirical(std::move(table.edges), table.counts);
    }
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
  throw ConfigError(Join(path, "kind"), "unknown kind '" + kind + "'");
}

// The market is keyed by its own seed so that changing the traffic seed keeps
// the same ads.
std::vector<Ad> GenerateAds(const YAML::Node& gen, const std::string& path) {
  CheckKnownKeys(gen, path, {"count", "bid_min", "bid_max", "ctr_alpha", "ctr_beta", "seed"});
  const auto seed = GetOr<std::uint64_t>(gen, "seed", path, kDefaultSeed);
  const int count = Get<int>(gen, "count", path);
  if (count < 1) throw ConfigError(Join(path, "count"), "must be >= 1");
  const double bid_min = Get<double>(gen, "bid_min", path);
  const double bid_max = Get<double>(gen, "bid_max", path);
  Positive(bid_min, Join(path, "bid_min"));
  if (!(bid_max >= bid_min)) throw ConfigError(Join(path, "bid_max"), "must be >= bid_min");
  const double a = Get<double>(gen, "ctr_alpha", path);
  const double b = Get<double>(gen, "ctr_beta", path);
  Positive(a, Join(path, "ctr_alpha"));
  Positive(b, Join(path, "ctr_beta"));
  // Log-uniform bids and Beta CTRs, one stream per ad.
  std::vector<Ad> ads;
  for (int i = 0; i < count; ++i) {
    CounterRng rng(StreamKey(seed, {kAdGeneratorDomain, static_cast<std::uint64_t>(i)}));
    const double u = rng.Uniform();
    std::gamma_distribution<double> ga(a, 1.0);
    std::gamma_distribution<double> gb(b, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    Ad ad;
    ad.id = i + 1;
    ad.bid = bid_min * std::exp(u * std::log(bid_max / bid_min));
    ad.true_ctr = x / (x + y);
    ads.push_back(ad);
  }
  return ads;
}

}  // namespace

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return ss.str();
}

const std::string& DefaultCpcConfigText() { return kDefaultCpc; }
const std::string& DefaultTheoremConfigText() { return kDefaultTheorems; }
const std::string& DefaultAbConfigText() { return kDefaultAb; }

CpcRunConfig ParseCpcConfig(const std::string& text) {
  const YAML::Node root = LoadDocument(text);
  CheckKnownKeys(root, "",
                 {"schema_version", "seed", "trials", "emit_trial_logs", "histograms", "settings"});
  CpcRunConfig config;
  config.seed = OptionalSeed(root);
  config.trials = GetOr<std::int64_t>(root, "trials", "", config.trials);
  if (config.trials < 1) throw ConfigError("trials", "must be >= 1");
  config.emit_trial_logs = GetOr<bool>(root, "emit_trial_logs", "", false);
  if (const YAML::Node h = root["histograms"]) {
    CheckKnownKeys(h, "histograms", {"cpc_bin_width", "score_bin_width"});
    config.cpc_bin_width = GetOr<double>(h, "cpc_bin_width", "histograms", config.cpc_bin_width);
    config.score_bin_width =
        GetOr<double>(h, "score_bin_width", "histograms", config.score_bin_width);
    Positive(config.cpc_bin_width, "histograms.cpc_bin_width");
    Positive(config.score_bin_width, "histograms.score_bin_width");
  }
  const YAML::Node settings = Require(root, "settings", "");
  if (!settings.IsSequence() || settings.size() == 0) {
    throw ConfigError("settings", "expected a non-empty list");
  }
  std::set<std::string> names;
  for (std::size_t s = 0; s < settings.size(); ++s) {
    const std::string path = Indexed("settings", s);
    const YAML::Node node = settings[s];
    CheckKnownKeys(node, path, {"name", "impressions", "ctrs", "bids"});
    CpcStudyConfig study;
    study.name = Get<std::string>(node, "name", path);
    if (study.name.empty() || study.name.find_first_of("/\\ ,") != std::string::npos) {
      throw ConfigError(Join(path, "name"), "must be non-empty without '/', '\\', ',' or spaces");
    }
    if (!names.insert(study.name).second) throw ConfigError(Join(path, "name"), "duplicate");
    study.ctrs = Get<std::vector<double>>(node, "ctrs", path);
    if (study.ctrs.empty()) throw ConfigError(Join(path, "ctrs"), "needs at least one ad");
    for (std::size_t i = 0; i < study.ctrs.size(); ++i) {
      Probability(study.ctrs[i], Indexed(Join(path, "ctrs"), i));
    }
    const YAML::Node imp = Require(node, "impressions", path);
    if (imp.IsSequence()) {
      study.impressions = As<std::vector<std::int64_t>>(imp, Join(path, "impressions"));
      if (study.impressions.size() != study.ctrs.size()) {
        throw ConfigError(Join(path, "impressions"), "needs one entry per ad");
      }
    } else {
      study.impressions = {As<std::int64_t>(imp, Join(path, "impressions"))};
    }
    for (std::size_t i = 0; i < study.impressions.size(); ++i) {
      if (study.impressions[i] < 1) {
        throw ConfigError(Join(path, "impressions"), "must be >= 1");
      }
    }
    if (node["bids"]) {
      study.bids = Get<std::vector<double>>(node, "bids", path);
      if (study.bids.size() != study.ctrs.size()) {
        throw ConfigError(Join(path, "bids"), "needs one entry per ad");
      }
      for (std::size_t i = 0; i < study.bids.size(); ++i) {
        if (!(study.bids[i] >= 0.0) || !std::isfinite(study.bids[i])) {
          throw ConfigError(Indexed(Join(path, "bids"), i), "must be a non-negative number");
        }
      }
    }
    config.settings.push_back(std::move(study));
  }
  return config;
}

TheoremRunConfig ParseTheoremConfig(const std::string& text,
                                    const std::filesystem::path& base_dir) {
  const YAML::Node root = LoadDocument(text);
  CheckKnownKeys(root, "",
                 {"schema_version", "seed", "mc_trials", "histogram_bins", "configurations"});
  TheoremRunConfig config;
  config.seed = OptionalSeed(root);
  config.mc_trials = GetOr<std::int64_t>(root, "mc_trials", "", config.mc_trials);
  if (config.mc_trials < 1) throw ConfigError("mc_trials", "must be >= 1");
  config.histogram_bins = GetOr<int>(root, "histogram_bins", "", config.histogram_bins);
  if (config.histogram_bins < 2) throw ConfigError("histogram_bins", "must be >= 2");
  const YAML::Node cases = Require(root, "configurations", "");
  if (!cases.IsSequence() || cases.size() == 0) {
    throw ConfigError("configurations", "expected a non-empty list");
  }
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const std::string path = Indexed("configurations", c);
    CheckKnownKeys(cases[c], path, {"name", "scores"});
    TheoremCase tc;
    tc.name = Get<std::string>(cases[c], "name", path);
    const YAML::Node scores = Require(cases[c], "scores", path);
    if (!scores.IsSequence() || scores.size() == 0) {
      throw ConfigError(Join(path, "scores"), "expected a non-empty list");
    }
    for (std::size_t s = 0; s < scores.size(); ++s) {
      const std::string spath = Indexed(Join(path, "scores"), s);
      const ScoreDistribution dist = ParseScore(scores[s], spath, base_dir);
      const int repeat = GetOr<int>(scores[s], "repeat", spath, 1);
      if (repeat < 1) throw ConfigError(Join(spath, "repeat"), "must be >= 1");
      for (int r = 0; r < repeat; ++r) tc.scores.push_back(dist);
    }
    if (static_cast<int>(tc.scores.size()) > kMaxExactParticipants) {
      throw ConfigError(Join(path, "scores"),
                        "at most " + std::to_string(kMaxExactParticipants) +
                            " scores are supported by the exact oracle");
    }
    config.cases.push_back(std::move(tc));
  }
  return config;
}

AbRunConfig ParseAbConfig(const std::string& text) {
  const YAML::Node root = LoadDocument(text);
  CheckKnownKeys(root, "",
                 {"schema_version", "seed", "days", "window_days", "burn_in_days",
                  "traffic_per_day", "epsilon", "cold_start_ctr", "buckets", "contexts", "ads"});
  AbRunConfig config;
  config.seed = OptionalSeed(root);
  AbConfig& ab = config.ab;
  ab.days = GetOr<int>(root, "days", "", ab.days);
  if (ab.days < 1) throw ConfigError("days", "must be >= 1");
  ab.window_days = GetOr<int>(root, "window_days", "", ab.window_days);
  if (ab.window_days < 1) throw ConfigError("window_days", "must be >= 1");
  ab.burn_in_days = GetOr<int>(root, "burn_in_days", "", ab.days / 2);
  if (ab.burn_in_days < 0 || ab.burn_in_days >= ab.days) {
    throw ConfigError("burn_in_days", "must lie in [0, days)");
  }
  ab.traffic_per_day = GetOr<std::int64_t>(root, "traffic_per_day", "", ab.traffic_per_day);
  if (ab.traffic_per_day < 1) throw ConfigError("traffic_per_day", "must be >= 1");
  ab.epsilon = GetOr<double>(root, "epsilon", "", ab.epsilon);
  Probability(ab.epsilon, "epsilon");
  ab.cold_start_ctr = GetOr<double>(root, "cold_start_ctr", "", ab.cold_start_ctr);
  Probability(ab.cold_start_ctr, "cold_start_ctr");

  if (const YAML::Node buckets = root["buckets"]) {
    CheckKnownKeys(buckets, "buckets", {"A", "B"});
    ab.estimators[0] = ParseEstimator(Require(buckets, "A", "buckets"), "buckets.A");
    ab.estimators[1] = ParseEstimator(Require(buckets, "B", "buckets"), "buckets.B");
  }

  const YAML::Node contexts = Require(root, "contexts", "");
  if (!contexts.IsSequence() || contexts.size() == 0) {
    throw ConfigError("contexts", "expected a non-empty list");
  }
  for (std::size_t c = 0; c < contexts.size(); ++c) {
    const std::string path = Indexed("contexts", c);
    CheckKnownKeys(contexts[c], path, {"site", "pos", "multiplier"});
    Context ctx;
    ctx.site = Get<int>(contexts[c], "site", path);
    ctx.pos = Get<int>(contexts[c], "pos", path);
    ctx.multiplier = GetOr<double>(contexts[c], "multiplier", path, 1.0);
    if (!(ctx.multiplier >= 0.0) || !std::isfinite(ctx.multiplier)) {
      throw ConfigError(Join(path, "multiplier"), "must be non-negative");
    }
    for (const Context& other : ab.contexts) {
      if (other.site == ctx.site && other.pos == ctx.pos) {
        throw ConfigError(path, "duplicate (site, pos)");
      }
    }
    ab.contexts.push_back(ctx);
  }

  const YAML::Node ads = Require(root, "ads", "");
  if (ads.IsMap()) {
    CheckKnownKeys(ads, "ads", {"generate"});
    ab.ads = GenerateAds(Require(ads, "generate", "ads"), "ads.generate");
  } else if (ads.IsSequence() && ads.size() > 0) {
    std::set<AdId> ids;
    for (std::size_t i = 0; i < ads.size(); ++i) {
      const std::string path = Indexed("ads", i);
      CheckKnownKeys(ads[i], path, {"id", "bid", "ctr"});
      Ad ad;
      ad.id = Get<AdId>(ads[i], "id", path);
      ad.bid = Get<double>(ads[i], "bid", path);
      ad.true_ctr = Get<double>(ads[i], "ctr", path);
      if (!(ad.bid >= 0.0) || !std::isfinite(ad.bid)) {
        throw ConfigError(Join(path, "bid"), "must be non-negative");
      }
      Probability(ad.true_ctr, Join(path, "ctr"));
      if (!ids.insert(ad.id).second) throw ConfigError(Join(path, "id"), "duplicate ad id");
      ab.ads.push_back(ad);
    }
  } else {
    throw ConfigError("ads", "expected a non-empty list or a generate block");
  }
  return config;
}

nlohmann::json ToJson(const CpcRunConfig& config) {
  nlohmann::json settings = nlohmann::json::array();
  for (const CpcStudyConfig& s : config.settings) {
    nlohmann::json j{{"name", s.name}, {"ctrs", s.ctrs}, {"impressions", s.impressions}};
    std::vector<double> bids;
    for (std::size_t i = 0; i < s.ctrs.size(); ++i) bids.push_back(s.Bid(i));
    j["bids"] = bids;
    settings.push_back(j);
  }
  return {{"schema_version", kSchemaVersion},
          {"trials", config.trials},
          {"emit_trial_logs", config.emit_trial_logs},
          {"histograms",
           {{"cpc_bin_width", config.cpc_bin_width},
            {"score_bin_width", config.score_bin_width}}},
          {"settings", settings}};
}

nlohmann::json ToJson(const TheoremRunConfig& config) {
  nlohmann::json cases = nlohmann::json::array();
  for (const TheoremCase& c : config.cases) {
    std::vector<std::string> scores;
    for (const ScoreDistribution& d : c.scores) scores.push_back(d.Describe());
    cases.push_back({{"name", c.name}, {"scores", scores}});
  }
  return {{"schema_version", kSchemaVersion},
          {"mc_trials", config.mc_trials},
          {"histogram_bins", config.histogram_bins},
          {"configurations", cases}};
}

nlohmann::json ToJson(const AbRunConfig& config) {
  const AbConfig& ab = config.ab;
  nlohmann::json ads = nlohmann::json::array();
  for (const Ad& ad : ab.ads) ads.push_back({{"id", ad.id}, {"bid", ad.bid}, {"ctr", ad.true_ctr}});
  nlohmann::json contexts = nlohmann::json::array();
  for (const Context& c : ab.contexts) {
    contexts.push_back({{"site", c.site}, {"pos", c.pos}, {"multiplier", c.multiplier}});
  }
  return {{"schema_version", kSchemaVersion},
          {"days", ab.days},
          {"window_days", ab.window_days},
          {"burn_in_days", ab.burn_in_days},
          {"traffic_per_day", ab.traffic_per_day},
          {"epsilon", ab.epsilon},
          {"cold_start_ctr", ab.cold_start_ctr},
          {"buckets",
           {{"A", std::string(EstimatorName(ab.estimators[0]))},
            {"B", std::string(EstimatorName(ab.estimators[1]))}}},
          {"contexts", contexts},
          {"ads", ads}};
}

}  // namespace gspbias
