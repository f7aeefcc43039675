// Copyright 2026 The infer-bev Authors
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


#ifndef INFER_EVALKIT_REPORT_HPP
#define INFER_EVALKIT_REPORT_HPP

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "infer/evalkit/metrics.hpp"

/**
 * \file
 * \brief Evaluation reports and their two serializations.
 *
 * The record file is versioned key/value text, one entry per line:
 *
 *     infer-eval-report 1
 *     fingerprint.<key> <value>
 *     k <K>
 *     trajectories <n>
 *     top1 <horizon_s> <samples> <ade_m>
 *     topk <horizon_s> <samples> <ade_m>
 *     note <text>
 *     frame <trajectory> <step> <time_s> <error_top1> <error_topk>
 *
 * Reals are written with 17 significant digits so a record round-trips exactly.
 */

namespace infer::eval {

inline constexpr int kReportVersion = 1;

class ReportFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FrameError {
  std::string trajectory;
  std::size_t step = 0;
  double time_s = 0.0;
  double error_top1 = 0.0;
  double error_topk = 0.0;  ///< best-of-K error; equals error_top1 when K = 1

  friend bool operator==(const FrameError&, const FrameError&) = default;
};

struct EvalReport {
  std::size_t k = 1;
  std::size_t trajectory_count = 0;
  HorizonTable top1;
  HorizonTable topk;  ///< empty when k == 1
  std::vector<FrameError> frames;
  std::map<std::string, std::string> fingerprint;

  [[nodiscard]] std::vector<double> top1_errors() const;
  [[nodiscard]] std::vector<double> topk_errors() const;
  /// FNV-1a digest over the sorted fingerprint entries, as 16 hex digits.
  [[nodiscard]] std::string fingerprint_digest() const;
};

/// Regroups the per-frame errors by trajectory, in first-appearance order.
[[nodiscard]] std::vector<TrajectoryErrors> trajectory_errors(const EvalReport& report, bool top_k);

[[nodiscard]] std::string format_report(const EvalReport& report);

[[nodiscard]] std::string encode_report(const EvalReport& report);
[[nodiscard]] EvalReport decode_report(std::string_view text);

[[nodiscard]] std::string format_histogram(const Histogram& h);

struct RateRow {
  double keep_ratio = 1.0;
  EvalReport report;
};

/// One row per ratio with the Top-1 horizon columns.
[[nodiscard]] std::string format_rate_table(std::span<const RateRow> rows);

}  // namespace infer::eval

#endif
