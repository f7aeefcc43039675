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


#include "infer/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace infer::cli {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

}  // namespace

std::string env_name(std::string_view key) {
  std::string out = "INFER_";
  for (const char c : key) {
    out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return out;
}

RunConfig::RunConfig(std::string command, std::vector<ParamSpec> params)
    : command_(std::move(command)), params_(std::move(params)) {
  for (const auto& p : params_) {
    values_.push_back(p.default_value);
    origins_.emplace_back("default");
  }
}

std::size_t RunConfig::index_of(const std::string& key) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].key == key) {
      return i;
    }
  }
  throw ConfigError("unknown key '" + key + "' for command '" + command_ + "'");
}

void RunConfig::apply_text(std::string_view text, const std::string& origin) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  bool active = true;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) {
      continue;
    }
    if (body.front() == '[') {
      if (body.back() != ']') {
        throw ConfigError(origin + ":" + std::to_string(number) + ": malformed section header");
      }
      active = trim(std::string_view(body).substr(1, body.size() - 2)) == command_;
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = unquote(trim(std::string_view(body).substr(eq + 1)));
    if (!active) {
      continue;
    }
    try {
      set(key, value, origin);
    } catch (const ConfigError&) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": unknown key '" + key + "' for command '" +
                        command_ + "'");
    }
  }
}

void RunConfig::apply_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read config file '" + path.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  apply_text(buf.str(), path.string());
}

void RunConfig::apply_env(const std::function<const char*(const char*)>& lookup) {
  for (const auto& p : params_) {
    const std::string name = env_name(p.key);
    if (const char* v = lookup(name.c_str()); v != nullptr) {
      set(p.key, v, "env " + name);
    }
  }
}

void RunConfig::set(const std::string& key, const std::string& value, const std::string& origin) {
  const std::size_t i = index_of(key);
  values_[i] = value;
  origins_[i] = origin;
}

const std::string& RunConfig::get(const std::string& key) const { return values_[index_of(key)]; }

const std::string& RunConfig::origin(const std::string& key) const { return origins_[index_of(key)]; }

std::string RunConfig::required(const std::string& key) const {
  const auto& v = get(key);
  if (v.empty()) {
    throw ConfigError("--" + key + " is required for '" + command_ + "'");
  }
  return v;
}

std::int64_t RunConfig::integer(const std::string& key) const {
  const auto& v = get(key);
  std::int64_t out = 0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || end != v.data() + v.size()) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

std::size_t RunConfig::count(const std::string& key) const {
  const auto v = integer(key);
  if (v < 0) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + get(key) + "'");
  }
  return static_cast<std::size_t>(v);
}

std::uint64_t RunConfig::seed(const std::string& key) const {
  const auto& v = get(key);
  std::uint64_t out = 0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || end != v.data() + v.size()) {
    throw ConfigError(key + ": expected an unsigned integer, got '" + v + "'");
  }
  return out;
}

double RunConfig::real(const std::string& key) const {
  const auto& v = get(key);
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used == v.size()) {
      return out;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + v + "'");
}

bool RunConfig::boolean(const std::string& key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") {
    return true;
  }
  if (v == "false" || v == "0" || v == "no" || v == "off" || v.empty()) {
    return false;
  }
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> RunConfig::list(const std::string& key) const {
  std::vector<std::string> out;
  std::istringstream in(get(key));
  for (std::string item; std::getline(in, item, ',');) {
    item = trim(item);
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

std::vector<double> RunConfig::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : list(key)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) {
        throw std::invalid_argument(item);
      }
    } catch (const std::exception&) {
      throw ConfigError(key + ": expected a comma-separated list of numbers, got '" + get(key) + "'");
    }
  }
  return out;
}

std::string RunConfig::resolved_text() const {
  std::ostringstream os;
  os << "# resolved configuration of 'infer " << command_ << "'\n[" << command_ << "]\n";
  for (std::size_t i = 0; i < params_.size(); ++i) {
    os << params_[i].key << " = " << values_[i] << "    # " << origins_[i] << '\n';
  }
  return os.str();
}

void RunConfig::write_snapshot(const std::filesystem::path& path) const {
  std::ofstream out(path);
  out << resolved_text();
  if (!out) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
}

}  // namespace infer::cli
