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

#include "gspbias/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gspbias {
namespace {

std::ofstream OpenOut(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void Finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

double ParseDouble(const std::string& field, const std::filesystem::path& path, int line) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw IoError(path.string() + ":" + std::to_string(line) + ": bad number '" + field + "'");
  }
  return value;
}

nlohmann::json RecordJson(const ImpressionRecord& r) {
  return nlohmann::json{{"day", r.day},
                        {"bucket", std::string(1, BucketLetter(r.bucket))},
                        {"site", r.site},
                        {"pos", r.pos},
                        {"ad_id", r.ad_id},
                        {"mode", ModeName(r.mode)},
                        {"pred_ctr", r.pred_ctr},
                        {"bid", r.bid},
                        {"cpc", r.cpc},
                        {"click", r.click}};
}

}  // namespace

std::string FormatDouble(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

void WriteTable2Csv(const std::filesystem::path& path, std::span<const Table2Row> rows) {
  auto out = OpenOut(path);
  out << "setting,expected_cpc,mean_observed_cpc,ratio\n";
  for (const Table2Row& r : rows) {
    out << r.setting << ',' << FormatDouble(r.expected_cpc) << ','
        << FormatDouble(r.mean_observed_cpc) << ',' << FormatDouble(r.ratio) << '\n';
  }
  Finish(out, path);
}

nlohmann::json Table2Json(std::span<const Table2Row> rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Table2Row& r : rows) {
    arr.push_back({{"setting", r.setting},
                   {"expected_cpc", r.expected_cpc},
                   {"mean_observed_cpc", r.mean_observed_cpc},
                   {"ratio", r.ratio}});
  }
  return arr;
}

void WriteTable3Csv(const std::filesystem::path& path, std::span<const Table3Row> rows) {
  auto out = OpenOut(path);
  out << "model,non_weighted,bid_weighted\n";
  for (const Table3Row& r : rows) {
    out << r.model << ',' << (r.non_weighted ? FormatDouble(*r.non_weighted) : "") << ','
        << (r.bid_weighted ? FormatDouble(*r.bid_weighted) : "") << '\n';
  }
  Finish(out, path);
}

void WriteHistogramCsv(const std::filesystem::path& path, const Histogram& histogram) {
  auto out = OpenOut(path);
  out << "bin_left,bin_right,count\n";
  for (std::size_t b = 0; b < histogram.counts.size(); ++b) {
    out << FormatDouble(histogram.edges[b]) << ',' << FormatDouble(histogram.edges[b + 1]) << ','
        << histogram.counts[b] << '\n';
  }
  Finish(out, path);
}

nlohmann::json HistogramJson(const Histogram& histogram) {
  nlohmann::json bins = nlohmann::json::array();
  for (std::size_t b = 0; b < histogram.counts.size(); ++b) {
    bins.push_back({{"bin_left", histogram.edges[b]},
                    {"bin_right", histogram.edges[b + 1]},
                    {"count", histogram.counts[b]}});
  }
  return bins;
}

HistogramTable ReadHistogramCsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "bin_left,bin_right,count") {
    throw IoError(path.string() + ": expected header bin_left,bin_right,count");
  }
  HistogramTable table;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string left, right, count;
    if (!std::getline(ss, left, ',') || !std::getline(ss, right, ',') ||
        !std::getline(ss, count)) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected three fields");
    }
    const double l = ParseDouble(left, path, lineno);
    const double r = ParseDouble(right, path, lineno);
    const double c = ParseDouble(count, path, lineno);
    if (table.edges.empty()) {
      table.edges.push_back(l);
    } else if (l != table.edges.back()) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": bins are not contiguous");
    }
    table.edges.push_back(r);
    table.counts.push_back(c);
  }
  if (table.counts.empty()) throw IoError(path.string() + ": no bins");
  return table;
}

std::string_view ModeName(SelectionMode mode) {
  return mode == SelectionMode::kGreedy ? "greedy" : "random";
}

void WriteImpressionsCsv(const std::filesystem::path& path,
                         std::span<const ImpressionRecord> records) {
  auto out = OpenOut(path);
  out << "day,bucket,site,pos,ad_id,mode,pred_ctr,bid,cpc,click\n";
  for (const ImpressionRecord& r : records) {
    out << r.day << ',' << BucketLetter(r.bucket) << ',' << r.site << ',' << r.pos << ','
        << r.ad_id << ',' << ModeName(r.mode) << ',' << FormatDouble(r.pred_ctr) << ','
        << FormatDouble(r.bid) << ',' << FormatDouble(r.cpc) << ',' << r.click << '\n';
  }
  Finish(out, path);
}

void WriteImpressionsJsonl(const std::filesystem::path& path,
                           std::span<const ImpressionRecord> records) {
  auto out = OpenOut(path);
  for (const ImpressionRecord& r : records) out << RecordJson(r).dump() << '\n';
  Finish(out, path);
}

void WriteTrialsCsv(const std::filesystem::path& path, std::span<const TrialResult> trials) {
  auto out = OpenOut(path);
  const std::size_t m = trials.empty() ? 0 : trials.front().estimates.size();
  out << "trial,winner,cpc,degenerate";
  for (std::size_t i = 1; i <= m; ++i) out << ",estimate_" << i;
  for (std::size_t i = 1; i <= m; ++i) out << ",rank_" << i;
  out << '\n';
  for (const TrialResult& t : trials) {
    out << t.index << ',' << t.winner << ',' << FormatDouble(t.cpc) << ','
        << (t.degenerate ? 1 : 0);
    for (double e : t.estimates) out << ',' << FormatDouble(e);
    for (int r : t.ranks) out << ',' << r;
    out << '\n';
  }
  Finish(out, path);
}

void WriteTrialsJsonl(const std::filesystem::path& path, std::span<const TrialResult> trials) {
  auto out = OpenOut(path);
  for (const TrialResult& t : trials) {
    out << nlohmann::json{{"trial", t.index},
                          {"winner", t.winner},
                          {"cpc", t.cpc},
                          {"degenerate", t.degenerate},
                          {"estimates", t.estimates},
                          {"ranking", t.ranking},
                          {"ranks", t.ranks}}
               .dump()
        << '\n';
  }
  Finish(out, path);
}

void WriteJson(const std::filesystem::path& path, const nlohmann::json& value) {
  auto out = OpenOut(path);
  out << value.dump(2) << '\n';
  Finish(out, path);
}

nlohmann::json OptionalJson(const std::optional<double>& value) {
  if (!value || !std::isfinite(*value)) return nullptr;
  return *value;
}

}  // namespace gspbias
