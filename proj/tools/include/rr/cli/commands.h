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

#ifndef RR_CLI_COMMANDS_H_
#define RR_CLI_COMMANDS_H_

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "rr/adapters.h"
#include "rr/backends.h"
#include "rr/cli/config.h"

namespace rr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPipelineError = 1;
inline constexpr int kExitConfigError = 2;

// Explicit adapters.signature, else the toy model's signature.
ModelSignature ResolveSignature(const RunConfig& config);

// One backend per capability: toy, mock (train/evaluate mock means toy) or
// http. An http trainer gets ResolveSignature(config).
BackendBundle BuildBackends(const RunConfig& config);

// Collects the artifacts of one run; written to
// <output_dir>/manifest_<command>.json with paths relative to output_dir.
class Manifest {
 public:
  Manifest(std::string command, const RunConfig& config);
  void SetArg(const std::string& key, nlohmann::ordered_json value);
  void AddArtifact(const std::filesystem::path& path);  // file or adapter directory
  void SetStatus(std::string status) { status_ = std::move(status); }
  std::filesystem::path Write() const;

 private:
  std::string command_;
  const RunConfig& config_;
  nlohmann::ordered_json args_ = nlohmann::ordered_json::object();
  std::vector<std::filesystem::path> artifacts_;
  std::string status_ = "ok";
};

struct UnlearnArgs {
  std::string forget_dataset;  // overrides the config when set
};

struct SubspaceArgs {
  std::filesystem::path retain;
  std::filesystem::path forget;
  std::optional<std::size_t> k;
  bool normalized = false;
};

void GenData(const RunConfig& config, Manifest& manifest, std::ostream& out);
void Unlearn(const RunConfig& config, const UnlearnArgs& args, Manifest& manifest,
             std::ostream& out);
void Subspace(const RunConfig& config, const SubspaceArgs& args, Manifest& manifest,
              std::ostream& out);
void Vendi(const RunConfig& config, const std::filesystem::path& text_file, Manifest& manifest,
           std::ostream& out);
// The composed update as a single adapter whose factors are the weighted
// terms side by side; rank per layer is the sum of the term ranks.
AdapterDelta MergeToAdapter(const WeightState& plan);
void Merge(const RunConfig& config, const std::filesystem::path& plan_path,
           const std::filesystem::path& target, Manifest& manifest, std::ostream& out);
// Seeded gen-data then unlearn on the toy model, printing the iteration
// table. Output is a pure function of the seed.
void ToyDemo(const RunConfig& config, Manifest& manifest, std::ostream& out);

// Config with every backend forced to toy and no environment overrides.
RunConfig ToyConfig(std::uint64_t seed, const std::filesystem::path& output_dir);

// Vendi scores print with six decimals, trailing zeros trimmed ("1.0").
std::string FormatScore(double value);

// Loads the config, runs body and writes the manifest whatever the outcome.
// Maps ConfigError to 2, every other failure to 1, printing the message to err.
int Execute(const std::string& command, const std::function<RunConfig()>& load,
            const std::function<void(const RunConfig&, Manifest&)>& body, std::ostream& err);

}  // namespace rr::cli

#endif  // RR_CLI_COMMANDS_H_
