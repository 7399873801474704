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

#ifndef GSPBIAS_ERROR_HPP_
#define GSPBIAS_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace gspbias {

enum class ErrorCode {
  kEmptyAuction,
  kInvalidScore,
  kDegeneratePrice,
  kNoData,
  kInvalidArgument,
  kCombinatorialLimit,
  kRankUnreachable,
  kGridMismatch,
  kUndefinedCalibration,
  kUndefinedRatio,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers can branch on the condition without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyAuction: return "EmptyAuction";
    case ErrorCode::kInvalidScore: return "InvalidScore";
    case ErrorCode::kDegeneratePrice: return "DegeneratePrice";
    case ErrorCode::kNoData: return "NoData";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kCombinatorialLimit: return "CombinatorialLimit";
    case ErrorCode::kRankUnreachable: return "RankUnreachable";
    case ErrorCode::kGridMismatch: return "GridMismatch";
    case ErrorCode::kUndefinedCalibration: return "UndefinedCalibration";
    case ErrorCode::kUndefinedRatio: return "UndefinedRatio";
  }
  return "Unknown";
}

}  // namespace gspbias

#endif  // GSPBIAS_ERROR_HPP_
