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


#ifndef INFER_CLI_COMMANDS_HPP
#define INFER_CLI_COMMANDS_HPP

#include <functional>
#include <iosfwd>
#include <vector>

#include "infer/cli/config.hpp"

namespace infer::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;    ///< runtime error: missing data, non-finite loss, ...
inline constexpr int kExitUsage = 2;      ///< bad flags or configuration
inline constexpr int kExitSelfCheck = 3;  ///< outputs written but an invariant check failed

class SelfCheckError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[nodiscard]] std::vector<ParamSpec> generate_params();
[[nodiscard]] std::vector<ParamSpec> train_params();
[[nodiscard]] std::vector<ParamSpec> eval_params();
[[nodiscard]] std::vector<ParamSpec> ablate_params();
[[nodiscard]] std::vector<ParamSpec> associate_params();

/// Each command throws ConfigError, SelfCheckError or another exception on failure.
void cmd_generate(const RunConfig& cfg, std::ostream& out);
void cmd_train(const RunConfig& cfg, std::ostream& out);
void cmd_eval(const RunConfig& cfg, std::ostream& out);
void cmd_ablate(const RunConfig& cfg, std::ostream& out);
void cmd_associate(const RunConfig& cfg, std::ostream& out);

using EnvLookup = std::function<const char*(const char*)>;

/// Parses argv, resolves the configuration layers and runs one subcommand; returns the exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err, const EnvLookup& env);

}  // namespace infer::cli

#endif
