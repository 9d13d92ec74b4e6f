// Copyright 2026 The RR-Unlearn Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RR_CLI_CONFIG_H_
#define RR_CLI_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "rr/backends.h"
#include "rr/datagen.h"
#include "rr/subspace.h"
#include "rr/toyenv.h"
#include "rr/unlearn.h"

namespace rr::cli {

struct BackendEntry {
  BackendConfig config;
  std::string token_env;  // env var holding the bearer token, never snapshotted
};

struct Alg1Section {
  DatagenConfig datagen;
  std::size_t batch_size = 4;
  std::string contexts;  // text file, one context per line; empty = toy contexts
};

struct UnlearnSection {
  SelectionRule rule;
  int iterations = 3;  // T
  std::optional<TradeoffPoint> targets;
  TrainHyper hyper;
  bool override_infeasible = false;
  std::string base_ref = "base";
  std::string forget_dataset;  // empty = gen-data output if present, else toy:forget
  std::string retain_dataset = kToyRetainRef;
};

struct SubspaceSection {
  std::size_t k = kDefaultSimilarityK;
  bool normalized = false;
};

struct RunConfig {
  std::map<Capability, BackendEntry> backends;  // every capability present after parsing
  Alg1Section alg1;
  UnlearnSection unlearn;
  std::string signature;  // adapters.signature; empty = toy signature
  SubspaceSection subspace;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "rr_out";
  // Directory relative input paths resolve against (the config file's).
  std::filesystem::path base_dir = ".";

  std::filesystem::path Resolve(const std::string& path) const;
};

// Strict: unknown keys and mistyped values are kConfigError naming the key
// path. Missing capabilities default to toy backends seeded with the run seed.
// RR_*_URL variables then switch the matching capability to http. Referenced
// input files must exist.
RunConfig ParseConfigJson(const nlohmann::json& j, const std::filesystem::path& base_dir = ".",
                          bool apply_env = true);
RunConfig ParseConfig(const std::filesystem::path& path);
// Defaults only, env overrides applied.
RunConfig DefaultConfig(std::uint64_t seed = 0);

// Effective configuration as a config document. Omits output_dir and bearer
// tokens; feeding it back to ParseConfigJson reproduces the run.
nlohmann::ordered_json ConfigSnapshot(const RunConfig& config);

}  // namespace rr::cli

#endif  // RR_CLI_CONFIG_H_
