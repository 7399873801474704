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

#ifndef GSPBIAS_COMMANDS_HPP_
#define GSPBIAS_COMMANDS_HPP_

// Subcommand drivers behind the gspbias executable. Each returns a process
// exit code and never throws for data, configuration or I/O problems.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "json.hpp"

namespace gspbias {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitVerificationFailed = 1,
  kExitIoError = 2,
  kExitConfigError = 3,
};

enum class OutputFormat { kCsv, kJson, kBoth };

struct CommandOptions {
  std::optional<std::filesystem::path> config;  // built-in default when empty
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> trials;
  int threads = 0;  // 0 means hardware concurrency
  OutputFormat format = OutputFormat::kCsv;
  std::ostream* log = nullptr;  // diagnostics; std::cerr when null
};

// --seed, then the config's seed, then GSPBIAS_SEED, then the default.
// Throws ConfigError for an unparsable GSPBIAS_SEED.
std::uint64_t ResolveSeed(const std::optional<std::uint64_t>& flag,
                          const std::optional<std::uint64_t>& config_seed);

int CmdSimulateCpc(const CommandOptions& options);
int CmdVerifyTheorems(const CommandOptions& options);
int CmdAbRun(const CommandOptions& options);

}  // namespace gspbias

#endif  // GSPBIAS_COMMANDS_HPP_
