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

#ifndef GSPBIAS_CONFIG_HPP_
#define GSPBIAS_CONFIG_HPP_

// Run configuration files: YAML documents with a schema_version field.
// Each loader validates every value and reports the offending field path.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "gspbias/quadrature.hpp"
#include "gspbias/sim.hpp"

namespace gspbias {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::uint64_t kDefaultSeed = 20240607;

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct CpcRunConfig {
  std::optional<std::uint64_t> seed;
  std::int64_t trials = 20000;
  double cpc_bin_width = 0.01;
  double score_bin_width = 0.0002;
  bool emit_trial_logs = false;
  std::vector<CpcStudyConfig> settings;  // seed/trials filled at run time
};

struct TheoremCase {
  std::string name;
  std::vector<ScoreDistribution> scores;
};

struct TheoremRunConfig {
  std::optional<std::uint64_t> seed;
  std::int64_t mc_trials = 1000000;
  int histogram_bins = 40;
  std::vector<TheoremCase> cases;
};

struct AbRunConfig {
  std::optional<std::uint64_t> seed;
  AbConfig ab;  // ab.seed filled at run time
};

// `base_dir` resolves relative paths inside the document (empirical
// histograms). Throws ConfigError on any invalid value.
CpcRunConfig ParseCpcConfig(const std::string& text);
TheoremRunConfig ParseTheoremConfig(const std::string& text,
                                    const std::filesystem::path& base_dir = {});
AbRunConfig ParseAbConfig(const std::string& text);

// Throws IoError when the file cannot be read.
std::string ReadTextFile(const std::filesystem::path& path);

// Built-in defaults, identical to configs/{table2,theorems,ab}.cfg.
const std::string& DefaultCpcConfigText();
const std::string& DefaultTheoremConfigText();
const std::string& DefaultAbConfigText();

nlohmann::json ToJson(const CpcRunConfig& config);
nlohmann::json ToJson(const TheoremRunConfig& config);
nlohmann::json ToJson(const AbRunConfig& config);

}  // namespace gspbias

#endif  // GSPBIAS_CONFIG_HPP_
