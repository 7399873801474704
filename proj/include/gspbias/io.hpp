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

#ifndef GSPBIAS_IO_HPP_
#define GSPBIAS_IO_HPP_

// File emitters. All CSV output is UTF-8 with LF line endings and a header
// row; doubles are written in shortest round-trip form so equal values give
// equal bytes.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "gspbias/metrics.hpp"
#include "gspbias/sim.hpp"

namespace gspbias {

// Raised for unreadable or unwritable files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string FormatDouble(double value);

struct Table2Row {
  std::string setting;
  double expected_cpc = 0.0;
  double mean_observed_cpc = 0.0;
  double ratio = 0.0;
};

struct Table3Row {
  std::string model;
  std::optional<double> non_weighted;
  std::optional<double> bid_weighted;
};

void WriteTable2Csv(const std::filesystem::path& path, std::span<const Table2Row> rows);
nlohmann::json Table2Json(std::span<const Table2Row> rows);
void WriteTable3Csv(const std::filesystem::path& path, std::span<const Table3Row> rows);

// Header: bin_left,bin_right,count
void WriteHistogramCsv(const std::filesystem::path& path, const Histogram& histogram);
nlohmann::json HistogramJson(const Histogram& histogram);

struct HistogramTable {
  std::vector<double> edges;
  std::vector<double> counts;
};
// Reads the bin_left,bin_right,count format; bins must be contiguous.
HistogramTable ReadHistogramCsv(const std::filesystem::path& path);

// Header: day,bucket,site,pos,ad_id,mode,pred_ctr,bid,cpc,click
void WriteImpressionsCsv(const std::filesystem::path& path,
                         std::span<const ImpressionRecord> records);
void WriteImpressionsJsonl(const std::filesystem::path& path,
                           std::span<const ImpressionRecord> records);
std::string_view ModeName(SelectionMode mode);

// Header: trial,winner,cpc,degenerate,estimate_<i>...,rank_<i>...
void WriteTrialsCsv(const std::filesystem::path& path, std::span<const TrialResult> trials);
void WriteTrialsJsonl(const std::filesystem::path& path, std::span<const TrialResult> trials);

void WriteJson(const std::filesystem::path& path, const nlohmann::json& value);

// nullopt -> JSON null
nlohmann::json OptionalJson(const std::optional<double>& value);

}  // namespace gspbias

#endif  // GSPBIAS_IO_HPP_
