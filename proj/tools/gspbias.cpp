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

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "gspbias/commands.hpp"

int main(int argc, char** argv) {
  using gspbias::CommandOptions;
  using gspbias::OutputFormat;

  CLI::App app{"Selection-bias simulations for single-slot GSP auctions"};
  app.set_version_flag("--version", std::string(gspbias::kToolVersion));
  app.require_subcommand(1);

  CommandOptions options;
  std::string config;
  std::uint64_t seed = 0;
  std::int64_t trials = 0;
  const std::map<std::string, OutputFormat> formats{
      {"csv", OutputFormat::kCsv}, {"json", OutputFormat::kJson}, {"both", OutputFormat::kBoth}};

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Config file (built-in default when omitted)");
    sub->add_option("--out", options.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--seed", seed, "Master seed; overrides the config and GSPBIAS_SEED");
    sub->add_option("--trials", trials, "Trials per setting (simulate-cpc) or Monte Carlo "
                                        "trials (verify-theorems)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--threads", options.threads, "Worker threads; 0 uses all cores")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    sub->add_option("--format", options.format, "Output format: csv, json or both")
        ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case))
        ->option_text("{csv,json,both} [csv]");
  };

  CLI::App* simulate =
      app.add_subcommand("simulate-cpc", "Observed versus expected CPC over repeated auctions");
  CLI::App* verify = app.add_subcommand(
      "verify-theorems", "Conditional score means by quadrature and Monte Carlo");
  CLI::App* ab = app.add_subcommand("ab-run", "Two-bucket A/B simulation with calibration");
  for (CLI::App* sub : {simulate, verify, ab}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? gspbias::kExitOk : gspbias::kExitConfigError;
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (chosen->count("--config") > 0) options.config = config;
  if (chosen->count("--seed") > 0) options.seed = seed;
  if (chosen->count("--trials") > 0) options.trials = trials;

  if (chosen == simulate) return gspbias::CmdSimulateCpc(options);
  if (chosen == verify) return gspbias::CmdVerifyTheorems(options);
  return gspbias::CmdAbRun(options);
}
