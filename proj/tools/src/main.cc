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

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rr/cli/commands.h"
#include "rr/cli/config.h"

namespace {

using rr::cli::Manifest;
using rr::cli::RunConfig;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rr: self-generated forget data, iterative adapter unlearning, subspace analysis"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string output_dir;
  app.add_option("-c,--config", config_path, "run config (JSON)");
  app.add_option("-o,--output-dir", output_dir, "artifact directory (overrides output_dir)");

  auto* gen = app.add_subcommand("gen-data", "generate the forget dataset");

  rr::cli::UnlearnArgs unlearn_args;
  auto* unlearn = app.add_subcommand("unlearn", "iterative forget/retain adapter composition");
  unlearn->add_option("--forget-data", unlearn_args.forget_dataset,
                      "forget dataset (default: config, then <output_dir>/dataset.jsonl)");

  rr::cli::SubspaceArgs subspace_args;
  std::optional<std::size_t> k;
  auto* subspace = app.add_subcommand("subspace", "eigenbasis similarity of two adapters");
  subspace->add_option("--retain", subspace_args.retain, "retain adapter directory")->required();
  subspace->add_option("--forget", subspace_args.forget, "forget adapter directory")->required();
  subspace->add_option("-k,--k", k, "top-k singular vectors")->check(CLI::PositiveNumber);
  subspace->add_flag("--normalized", subspace_args.normalized, "scale by sqrt(k)");

  std::string vendi_file;
  auto* vendi = app.add_subcommand("vendi", "Vendi score of a text file, one sample per line");
  vendi->add_option("file", vendi_file, "text file")->required();

  std::string plan_path;
  std::string merge_out;
  auto* merge = app.add_subcommand("merge", "materialize a merge plan as one adapter");
  merge->add_option("--plan", plan_path, "merge plan JSON")->required();
  merge->add_option("--out", merge_out, "adapter directory (default <output_dir>/merged)");

  std::uint64_t demo_seed = 0;
  auto* demo = app.add_subcommand("toy-demo", "seeded end-to-end run on the toy model");
  demo->add_option("--seed", demo_seed, "seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : rr::cli::kExitConfigError;
  }

  const auto load = [&]() -> RunConfig {
    RunConfig config;
    if (demo->parsed()) {
      config = rr::cli::ToyConfig(demo_seed, output_dir.empty() ? "rr_out" : output_dir);
      return config;
    }
    config = config_path.empty() ? rr::cli::DefaultConfig() : rr::cli::ParseConfig(config_path);
    if (!output_dir.empty()) config.output_dir = output_dir;
    return config;
  };

  std::string command;
  std::function<void(const RunConfig&, Manifest&)> body;
  if (gen->parsed()) {
    command = "gen-data";
    body = [](const RunConfig& c, Manifest& m) { rr::cli::GenData(c, m, std::cout); };
  } else if (unlearn->parsed()) {
    command = "unlearn";
    body = [&](const RunConfig& c, Manifest& m) { rr::cli::Unlearn(c, unlearn_args, m, std::cout); };
  } else if (subspace->parsed()) {
    command = "subspace";
    subspace_args.k = k;
    body = [&](const RunConfig& c, Manifest& m) {
      rr::cli::Subspace(c, subspace_args, m, std::cout);
    };
  } else if (vendi->parsed()) {
    command = "vendi";
    body = [&](const RunConfig& c, Manifest& m) { rr::cli::Vendi(c, vendi_file, m, std::cout); };
  } else if (merge->parsed()) {
    command = "merge";
    body = [&](const RunConfig& c, Manifest& m) {
      rr::cli::Merge(c, plan_path, merge_out, m, std::cout);
    };
  } else {
    command = "toy-demo";
    body = [](const RunConfig& c, Manifest& m) { rr::cli::ToyDemo(c, m, std::cout); };
  }
  return rr::cli::Execute(command, load, body, std::cerr);
}
