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


#include "infer/evalkit/report.hpp"

#include <cstdint>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include "infer/gridcore/raster_io.hpp"

namespace infer::eval {

namespace {

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string column_label(double h) {
  std::ostringstream os;
  os << h << " s";
  return os.str();
}

void append_table_rows(std::ostringstream& os, const char* label, const HorizonTable& table) {
  os << std::left << std::setw(8) << label << std::right;
  for (const auto& c : table.columns) {
    os << std::setw(10) << fixed(c.ade_m, 3);
  }
  os << '\n';
}

double parse_real(const std::string& token, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size()) {
      throw std::invalid_argument(token);
    }
    return v;
  } catch (const std::exception&) {
    throw ReportFormatError("report line " + std::to_string(line) + ": bad number '" + token + "'");
  }
}

std::size_t parse_count(const std::string& token, std::size_t line) {
  const double v = parse_real(token, line);
  if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
    throw ReportFormatError("report line " + std::to_string(line) + ": bad count '" + token + "'");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

std::vector<double> EvalReport::top1_errors() const {
  std::vector<double> out;
  out.reserve(frames.size());
  for (const auto& f : frames) {
    out.push_back(f.error_top1);
  }
  return out;
}

std::vector<double> EvalReport::topk_errors() const {
  std::vector<double> out;
  out.reserve(frames.size());
  for (const auto& f : frames) {
    out.push_back(f.error_topk);
  }
  return out;
}

std::string EvalReport::fingerprint_digest() const {
  std::string joined;
  for (const auto& [key, value] : fingerprint) {
    joined += key + '=' + value + '\n';
  }
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(joined.data());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(grid::fnv1a64(std::span(bytes, joined.size()))));
  return buf;
}

std::vector<TrajectoryErrors> trajectory_errors(const EvalReport& report, bool top_k) {
  std::vector<TrajectoryErrors> out;
  for (const auto& f : report.frames) {
    if (out.empty() || out.back().id != f.trajectory) {
      out.push_back({f.trajectory, {}, {}});
    }
    out.back().times_s.push_back(f.time_s);
    out.back().errors.push_back(top_k ? f.error_topk : f.error_top1);
  }
  return out;
}

std::string format_report(const EvalReport& report) {
  std::ostringstream os;
  os << "ADE (m), cumulative over all steps up to each horizon\n";
  for (const auto& [key, value] : report.fingerprint) {
    os << "  " << key << ": " << value << '\n';
  }
  os << "  digest: " << report.fingerprint_digest() << '\n';
  os << "  trajectories: " << report.trajectory_count << ", evaluated steps: " << report.frames.size() << "\n\n";
  os << std::left << std::setw(8) << "" << std::right;
  for (const auto& c : report.top1.columns) {
    os << std::setw(10) << column_label(c.horizon_s);
  }
  os << '\n';
  append_table_rows(os, "Top-1", report.top1);
  if (report.k > 1) {
    const std::string label = "Top-" + std::to_string(report.k);
    append_table_rows(os, label.c_str(), report.topk);
  }
  for (const auto& n : report.top1.notes) {
    os << "note: " << n << '\n';
  }
  return os.str();
}

std::string encode_report(const EvalReport& report) {
  std::ostringstream os;
  os << "infer-eval-report " << kReportVersion << '\n';
  for (const auto& [key, value] : report.fingerprint) {
    if (key.find_first_of(" \n") != std::string::npos || value.find('\n') != std::string::npos) {
      throw ReportFormatError("fingerprint entry '" + key + "' cannot be encoded");
    }
    os << "fingerprint." << key << ' ' << value << '\n';
  }
  os << "k " << report.k << '\n';
  os << "trajectories " << report.trajectory_count << '\n';
  for (const auto& c : report.top1.columns) {
    os << "top1 " << real(c.horizon_s) << ' ' << c.samples << ' ' << real(c.ade_m) << '\n';
  }
  for (const auto& c : report.topk.columns) {
    os << "topk " << real(c.horizon_s) << ' ' << c.samples << ' ' << real(c.ade_m) << '\n';
  }
  for (const auto& n : report.top1.notes) {
    os << "note " << n << '\n';
  }
  for (const auto& f : report.frames) {
    os << "frame " << f.trajectory << ' ' << f.step << ' ' << real(f.time_s) << ' ' << real(f.error_top1) << ' '
       << real(f.error_topk) << '\n';
  }
  return os.str();
}

EvalReport decode_report(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  if (!std::getline(in, line) || line.rfind("infer-eval-report ", 0) != 0) {
    throw ReportFormatError("not an evaluation report");
  }
  ++number;
  if (line != "infer-eval-report " + std::to_string(kReportVersion)) {
    throw ReportFormatError("unsupported report version: " + line.substr(18));
  }
  EvalReport r;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) {
      continue;
    }
    const auto space = line.find(' ');
    const std::string key = line.substr(0, space);
    const std::string rest = space == std::string::npos ? std::string() : line.substr(space + 1);
    std::istringstream fields(rest);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) {
      tok.push_back(t);
    }
    if (key.rfind("fingerprint.", 0) == 0) {
      r.fingerprint[key.substr(12)] = rest;
    } else if (key == "k" && tok.size() == 1) {
      r.k = parse_count(tok[0], number);
    } else if (key == "trajectories" && tok.size() == 1) {
      r.trajectory_count = parse_count(tok[0], number);
    } else if ((key == "top1" || key == "topk") && tok.size() == 3) {
      HorizonColumn c{parse_real(tok[0], number), parse_count(tok[1], number), parse_real(tok[2], number)};
      (key == "top1" ? r.top1 : r.topk).columns.push_back(c);
    } else if (key == "note") {
      r.top1.notes.push_back(rest);
    } else if (key == "frame" && tok.size() == 5) {
      r.frames.push_back({tok[0], parse_count(tok[1], number), parse_real(tok[2], number),
                          parse_real(tok[3], number), parse_real(tok[4], number)});
    } else {
      throw ReportFormatError("report line " + std::to_string(number) + ": unrecognized '" + line + "'");
    }
  }
  return r;
}

std::string format_histogram(const Histogram& h) {
  std::ostringstream os;
  os << "# error histogram, bin width " << h.bin_width << " m, " << h.total << " errors\n";
  os << "# within " << h.threshold << " m: " << fixed(100.0 * h.fraction_within, 2) << " %\n";
  os << "# lo_m hi_m count cumulative_fraction\n";
  std::size_t running = 0;
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    running += h.counts[b];
    os << fixed(static_cast<double>(b) * h.bin_width, 3) << ' ' << fixed(static_cast<double>(b + 1) * h.bin_width, 3)
       << ' ' << h.counts[b] << ' ' << fixed(static_cast<double>(running) / static_cast<double>(h.total), 6) << '\n';
  }
  return os.str();
}

std::string format_rate_table(std::span<const RateRow> rows) {
  std::ostringstream os;
  os << "ADE (m) against kept frame ratio, Top-1\n";
  os << std::left << std::setw(8) << "ratio" << std::right;
  if (!rows.empty()) {
    for (const auto& c : rows.front().report.top1.columns) {
      os << std::setw(10) << column_label(c.horizon_s);
    }
  }
  os << '\n';
  for (const auto& row : rows) {
    os << std::left << std::setw(8) << fixed(row.keep_ratio, 2) << std::right;
    for (const auto& c : row.report.top1.columns) {
      os << std::setw(10) << fixed(c.ade_m, 3);
    }
    os << '\n';
    for (const auto& n : row.report.top1.notes) {
      os << "note (" << fixed(row.keep_ratio, 2) << "): " << n << '\n';
    }
  }
  return os.str();
}

}  // namespace infer::eval
