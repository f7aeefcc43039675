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


#ifndef INFER_CLI_CONFIG_HPP
#define INFER_CLI_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

/**
 * \file
 * \brief Layered run configuration: declared defaults, then a config file, then
 * `INFER_*` environment variables, then command-line flags.
 *
 * Config files hold `key = value` lines; `#` starts a comment. A `[command]`
 * header limits the lines below it to that command, so one file can serve all
 * subcommands. Keys are the flag names without the leading dashes; the
 * environment name of `grid-side` is `INFER_GRID_SIDE`.
 */

namespace infer::cli {

/// Bad configuration or usage; commands exit with status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ParamSpec {
  std::string key;
  std::string default_value;
  std::string help;
  bool flag = false;  ///< boolean switch, given on the command line without a value
};

[[nodiscard]] std::string env_name(std::string_view key);

class RunConfig {
 public:
  RunConfig(std::string command, std::vector<ParamSpec> params);

  [[nodiscard]] const std::string& command() const { return command_; }
  [[nodiscard]] const std::vector<ParamSpec>& params() const { return params_; }

  /// Throws ConfigError on unknown keys or malformed lines.
  void apply_text(std::string_view text, const std::string& origin);
  void apply_file(const std::filesystem::path& path);
  void apply_env(const std::function<const char*(const char*)>& lookup);
  void set(const std::string& key, const std::string& value, const std::string& origin);

  [[nodiscard]] const std::string& get(const std::string& key) const;
  [[nodiscard]] const std::string& origin(const std::string& key) const;

  /// Typed accessors; each throws ConfigError naming the key on a bad value.
  [[nodiscard]] std::string text(const std::string& key) const { return get(key); }
  [[nodiscard]] std::string required(const std::string& key) const;
  [[nodiscard]] std::int64_t integer(const std::string& key) const;
  [[nodiscard]] std::size_t count(const std::string& key) const;
  [[nodiscard]] std::uint64_t seed(const std::string& key) const;
  [[nodiscard]] double real(const std::string& key) const;
  [[nodiscard]] bool boolean(const std::string& key) const;
  [[nodiscard]] std::vector<std::string> list(const std::string& key) const;
  [[nodiscard]] std::vector<double> reals(const std::string& key) const;

  /// Snapshot that reproduces this run when passed back with --config.
  [[nodiscard]] std::string resolved_text() const;
  void write_snapshot(const std::filesystem::path& path) const;

 private:
  [[nodiscard]] std::size_t index_of(const std::string& key) const;

  std::string command_;
  std::vector<ParamSpec> params_;
  std::vector<std::string> values_;
  std::vector<std::string> origins_;
};

}  // namespace infer::cli

#endif
