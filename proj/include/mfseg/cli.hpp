// Copyright 2026 The mfseg Authors. All Rights Reserved.
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

// Command-line workflow: synth, maskgen, train, cv, eval, report.
//
// Configuration is a flat JSON object with dotted keys ("train.lr").
// Precedence, lowest first: built-in defaults, --config file, flags.
// Every command writes run.json (resolved configuration, seeds, SHA-256 of
// every artifact) into --out and refuses a non-empty --out without --force.
//
// Failures print one JSON line to stderr, {"error": kind, "message": ...}:
//   usage, validation  exit 2
//   input              exit 3  (missing or unreadable inputs)
//   runtime            exit 1

#ifndef MFSEG_CLI_HPP_
#define MFSEG_CLI_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

namespace mfseg {

inline constexpr std::uint64_t kDefaultSeed = 7;

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInput = 3;

struct RunConfig {
  std::string command;
  nlohmann::json values;        // flat dotted keys, every key present
  std::set<std::string> given;  // keys set by the config file or a flag
};

// Built-in defaults for every configuration key.
nlohmann::json default_config();

// Entry point; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_synth(const RunConfig& cfg, std::ostream& out);
int cmd_maskgen(const RunConfig& cfg, std::ostream& out);
int cmd_train(const RunConfig& cfg, std::ostream& out);
int cmd_cv(const RunConfig& cfg, std::ostream& out);
int cmd_eval(const RunConfig& cfg, std::ostream& out);
int cmd_report(const RunConfig& cfg, std::ostream& out);

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace mfseg

#endif  // MFSEG_CLI_HPP_
