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

#include "rr/cli/commands.h"

#include <algorithm>
#include <ostream>

#include <fmt/format.h>

#include "rr/datagen.h"
#include "rr/diversity.h"
#include "rr/error.h"
#include "rr/files.h"
#include "rr/subspace.h"
#include "rr/text.h"
#include "rr/toyenv.h"
#include "rr/unlearn.h"

namespace rr::cli {
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::uint64_t ToySeed(const RunConfig& config, Capability c) {
  const BackendConfig& b = config.backends.at(c).config;
  return b.seed.value_or(config.seed);
}

void WriteJson(const fs::path& path, const ordered_json& j) {
  WriteTextFile(path, j.dump(2) + "\n");
}

std::string RelativeTo(const fs::path& path, const fs::path& root) {
  const fs::path rel = path.lexically_relative(root);
  return rel.empty() ? path.generic_string() : rel.generic_string();
}

std::vector<std::string> ReadLines(const fs::path& path) {
  std::vector<std::string> lines;
  const std::string text = ReadTextFile(path);
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string_view line = Trim(std::string_view(text).substr(start, end - start));
    if (!line.empty()) lines.emplace_back(line);
    start = end + 1;
  }
  return lines;
}

GenerationContext LoadContexts(const RunConfig& config) {
  GenerationContext ctx;
  ctx.batch_size = config.alg1.batch_size;
  ctx.contexts = config.alg1.contexts.empty() ? ToyContexts()
                                              : ReadLines(config.Resolve(config.alg1.contexts));
  ValidateGenerationContext(ctx);
  return ctx;
}

fs::path DatasetPath(const RunConfig& config) { return config.output_dir / "dataset.jsonl"; }

DatagenResult RunGeneration(const RunConfig& config, Manifest& manifest) {
  const GenerationContext ctx = LoadContexts(config);
  const BackendBundle backends = BuildBackends(config);
  const fs::path path = DatasetPath(config);
  manifest.AddArtifact(path);
  manifest.AddArtifact(fs::path(path.string() + ".emb.bin"));
  manifest.AddArtifact(fs::path(path.string() + ".emb.json"));
  fs::create_directories(config.output_dir);
  DatagenResult result = RunOuterLoop(ctx, backends, config.alg1.datagen, path);

  ordered_json iterations = ordered_json::array();
  for (const OuterIterationReport& it : result.iterations) {
    ordered_json rounds = ordered_json::array();
    for (const ScoreEntry& e : it.inner.table) {
      rounds.push_back({{"round", e.round},
                        {"arm_id", e.arm_id},
                        {"instruction", e.instruction},
                        {"relevance", e.score.relevance},
                        {"diversity", e.score.diversity},
                        {"score", e.score.value},
                        {"reward", e.reward}});
    }
    iterations.push_back({{"iteration", it.iteration},
                          {"warm_start", it.warm_start.size()},
                          {"best_instruction", it.best_instruction},
                          {"added", it.added},
                          {"flagged", it.flagged},
                          {"failures", it.inner.failures},
                          {"rounds", std::move(rounds)}});
  }
  ordered_json summary;
  summary["records"] = result.dataset.size();
  summary["vendi"] = result.dataset.empty() ? 0.0 : VendiScore(result.dataset.RecentEmbeddings());
  summary["iterations"] = std::move(iterations);
  const fs::path summary_path = config.output_dir / "gen_summary.json";
  WriteJson(summary_path, summary);
  manifest.AddArtifact(summary_path);
  return result;
}

void PrintGeneration(const DatagenResult& result, std::ostream& out) {
  for (const OuterIterationReport& it : result.iterations) {
    out << fmt::format("  iteration {}: {} added, {} flagged, best \"{}\"\n", it.iteration,
                       it.added, it.flagged, it.best_instruction);
  }
  const double v = result.dataset.empty() ? 0.0 : VendiScore(result.dataset.RecentEmbeddings());
  out << fmt::format("  dataset: {} records, vendi {}\n", result.dataset.size(), FormatScore(v));
}

std::string ResolveDatasetRef(const RunConfig& config, const std::string& ref) {
  if (ref.rfind("toy:", 0) == 0) return ref;
  return config.Resolve(ref).string();
}

// The forget reference as recorded in the manifest: relative to the output
// directory when it lives there, so replays into another directory match.
ordered_json DatasetArg(const RunConfig& config, const std::string& ref) {
  if (ref.rfind("toy:", 0) == 0) return {{"ref", ref}};
  const fs::path p(ref);
  const std::string shown = RelativeTo(p, config.output_dir);
  ordered_json j{{"ref", shown.rfind("..", 0) == 0 ? ref : shown}};
  if (fs::is_regular_file(p)) j["sha256"] = Sha256OfFile(p);
  return j;
}

ordered_json PointJson(const TradeoffPoint& p) { return {{"s", p.s}, {"u", p.u}}; }

void PrintTable(const UnlearnResult& r, std::ostream& out) {
  out << fmt::format("  s0 {:.4f}, u0 {:.4f}\n", r.initial.s, r.initial.u);
  out << fmt::format("  {:>4}  {:<15}  {:>6}  {:>8}  {:>8}\n", "step", "action", "weight", "s", "u");
  for (const LogEntry& e : r.log) {
    std::string flags;
    if (e.utility_floor_missed) flags += "  floor-missed";
    if (e.fallback_used) flags += "  fallback";
    out << fmt::format("  {:>4}  {:<15}  {:>6}  {:>8.4f}  {:>8.4f}{}\n", e.step,
                       StepActionName(e.action), fmt::format("{:g}", e.weight), e.point.s,
                       e.point.u, flags);
  }
  const TradeoffPoint last = r.log.empty() ? r.initial : r.log.back().point;
  out << fmt::format("  stop: {}\n", StopReasonName(r.stop));
  out << fmt::format("  final: s {:.4f} ({:.3f} of s0), u {:.4f} ({:.3f} of u0)\n", last.s,
                     r.initial.s > 0 ? last.s / r.initial.s : 0.0, last.u,
                     r.initial.u > 0 ? last.u / r.initial.u : 0.0);
}

UnlearnResult RunUnlearn(const RunConfig& config, const std::string& forget_ref,
                         Manifest& manifest) {
  const ModelSignature sig = ResolveSignature(config);
  const BackendBundle backends = BuildBackends(config);
  const UnlearnSection& u = config.unlearn;
  const std::string retain_ref = ResolveDatasetRef(config, u.retain_dataset);
  manifest.SetArg("forget_dataset", DatasetArg(config, forget_ref));
  manifest.SetArg("retain_dataset", DatasetArg(config, retain_ref));

  UnlearnOptions options;
  options.iterations = u.iterations;
  options.rule = u.rule;
  options.targets = u.targets;
  options.hyper = u.hyper;
  options.override_infeasible = u.override_infeasible;
  options.adapter_dir = config.output_dir / "adapters";
  options.log_path = config.output_dir / "iterations.csv";
  const fs::path plan_path = config.output_dir / "merge_plan.json";
  const fs::path summary_path = config.output_dir / "unlearn_summary.json";
  manifest.AddArtifact(options.log_path);
  manifest.AddArtifact(options.adapter_dir);
  manifest.AddArtifact(plan_path);
  manifest.AddArtifact(summary_path);
  fs::create_directories(options.adapter_dir);

  UnlearnResult r = RunIterations(sig, u.base_ref, forget_ref, retain_ref, options,
                                  *backends.trainer, *backends.evaluator);

  // Adapter paths in the plan are relative to the plan file.
  ordered_json plan = MergePlanToJson(r.state);
  for (auto& term : plan["terms"]) {
    term["adapter_path"] = RelativeTo(term["adapter_path"].get<std::string>(), config.output_dir);
  }
  WriteJson(plan_path, plan);

  ordered_json steps = ordered_json::array();
  for (const LogEntry& e : r.log) {
    steps.push_back({{"step", e.step},
                     {"action", StepActionName(e.action)},
                     {"weight", e.weight},
                     {"s", e.point.s},
                     {"u", e.point.u},
                     {"utility_floor_missed", e.utility_floor_missed},
                     {"fallback_used", e.fallback_used}});
  }
  ordered_json summary;
  summary["initial"] = PointJson(r.initial);
  summary["final"] = PointJson(r.log.empty() ? r.initial : r.log.back().point);
  summary["stop"] = StopReasonName(r.stop);
  if (r.suggestion) {
    summary["suggestion"] = {{"weight", r.suggestion->weight},
                             {"s", r.suggestion->point.s},
                             {"u", r.suggestion->point.u}};
  }
  summary["compliance_issues"] = CheckRuleCompliance(r.initial, r.log, u.rule);
  summary["steps"] = std::move(steps);
  WriteJson(summary_path, summary);
  return r;
}

void RaiseIfInfeasible(const UnlearnResult& r) {
  if (r.stop != StopReason::kNoFeasibleWeight) return;
  std::string msg = "no grid weight satisfies the forget rule";
  if (r.suggestion) {
    msg += fmt::format("; best net gain at mu = {:g} (s {:.4f}, u {:.4f}), rerun with "
                       "unlearn.override_infeasible to apply it",
                       r.suggestion->weight, r.suggestion->point.s, r.suggestion->point.u);
  }
  throw Error(ErrorCode::kNoFeasibleWeight, msg);
}

}  // namespace

ModelSignature ResolveSignature(const RunConfig& config) {
  if (!config.signature.empty()) return LoadSignature(config.Resolve(config.signature));
  return ToyEnv::Make(ToySeed(config, Capability::kTrain))->signature();
}

BackendBundle BuildBackends(const RunConfig& config) {
  BackendBundle bundle;
  const auto transport = [&](Capability c) {
    return std::make_shared<const HttpTransport>(config.backends.at(c).config);
  };
  const auto kind = [&](Capability c) { return config.backends.at(c).config.kind; };
  const auto seed = [&](Capability c) { return ToySeed(config, c); };

  switch (kind(Capability::kRender)) {
    case BackendKind::kHttp: bundle.renderer = std::make_shared<HttpRenderer>(transport(Capability::kRender)); break;
    case BackendKind::kMock: bundle.renderer = std::make_shared<MockRenderer>(seed(Capability::kRender)); break;
    case BackendKind::kToy: bundle.renderer = std::make_shared<ToyRenderer>(); break;
  }
  switch (kind(Capability::kGenerate)) {
    case BackendKind::kHttp: bundle.generator = std::make_shared<HttpGenerator>(transport(Capability::kGenerate)); break;
    case BackendKind::kMock: bundle.generator = MakeMockGenerationBackends(seed(Capability::kGenerate)).generator; break;
    case BackendKind::kToy: bundle.generator = std::make_shared<ToyGenerator>(seed(Capability::kGenerate)); break;
  }
  if (kind(Capability::kEmbed) == BackendKind::kHttp) {
    bundle.embedder = std::make_shared<HttpEmbedder>(transport(Capability::kEmbed));
  } else {
    bundle.embedder = std::make_shared<MockEmbedder>(seed(Capability::kEmbed));
  }
  if (kind(Capability::kScore) == BackendKind::kHttp) {
    bundle.relevance = std::make_shared<HttpRelevance>(transport(Capability::kScore));
  } else {
    bundle.relevance = std::make_shared<MockRelevance>(DefaultTargetVocab());
  }
  if (kind(Capability::kTrain) == BackendKind::kHttp) {
    bundle.trainer = std::make_shared<HttpTrainer>(transport(Capability::kTrain),
                                                   config.output_dir / "downloads",
                                                   ResolveSignature(config));
  } else {
    bundle.trainer = std::make_shared<ToyTrainer>(ToyEnv::Make(seed(Capability::kTrain)));
  }
  if (kind(Capability::kEvaluate) == BackendKind::kHttp) {
    bundle.evaluator = std::make_shared<HttpEvaluator>(transport(Capability::kEvaluate));
  } else {
    bundle.evaluator = std::make_shared<ToyEvaluator>(ToyEnv::Make(seed(Capability::kEvaluate)));
  }
  return bundle;
}

Manifest::Manifest(std::string command, const RunConfig& config)
    : command_(std::move(command)), config_(config) {}

void Manifest::SetArg(const std::string& key, ordered_json value) { args_[key] = std::move(value); }

void Manifest::AddArtifact(const fs::path& path) { artifacts_.push_back(path); }

fs::path Manifest::Write() const {
  std::vector<fs::path> files;
  for (const fs::path& p : artifacts_) {
    if (fs::is_directory(p)) {
      for (const auto& entry : fs::recursive_directory_iterator(p)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
      }
    } else if (fs::is_regular_file(p)) {
      files.push_back(p);
    }
  }
  std::vector<std::pair<std::string, std::string>> rows;
  for (const fs::path& f : files) rows.emplace_back(RelativeTo(f, config_.output_dir), Sha256OfFile(f));
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());

  ordered_json j;
  j["format_version"] = 1;
  j["command"] = command_;
  j["status"] = status_;
  j["seed"] = config_.seed;
  j["config"] = ConfigSnapshot(config_);
  j["args"] = args_;
  ordered_json artifacts = ordered_json::array();
  for (const auto& [path, sha] : rows) artifacts.push_back({{"path", path}, {"sha256", sha}});
  j["artifacts"] = std::move(artifacts);
  fs::create_directories(config_.output_dir);
  const fs::path out = config_.output_dir / ("manifest_" + command_ + ".json");
  WriteJson(out, j);
  return out;
}

void GenData(const RunConfig& config, Manifest& manifest, std::ostream& out) {
  const DatagenResult result = RunGeneration(config, manifest);
  out << "gen-data\n";
  PrintGeneration(result, out);
  out << "  written: " << DatasetPath(config).string() << "\n";
}

void Unlearn(const RunConfig& config, const UnlearnArgs& args, Manifest& manifest,
             std::ostream& out) {
  std::string forget;
  if (!args.forget_dataset.empty()) {
    forget = args.forget_dataset;
    if (forget.rfind("toy:", 0) != 0 && !fs::exists(forget)) {
      throw Error(ErrorCode::kConfigError, "--forget-data: no such file '" + forget + "'");
    }
  } else if (!config.unlearn.forget_dataset.empty()) {
    forget = ResolveDatasetRef(config, config.unlearn.forget_dataset);
  } else if (fs::is_regular_file(DatasetPath(config))) {
    forget = DatasetPath(config).string();
  } else {
    forget = kToyForgetRef;
  }
  const UnlearnResult r = RunUnlearn(config, forget, manifest);
  out << "unlearn\n";
  PrintTable(r, out);
  RaiseIfInfeasible(r);
}

void Subspace(const RunConfig& config, const SubspaceArgs& args, Manifest& manifest,
              std::ostream& out) {
  const std::size_t k = args.k.value_or(config.subspace.k);
  const bool normalized = args.normalized || config.subspace.normalized;
  manifest.SetArg("retain", {{"path", args.retain.generic_string()}});
  manifest.SetArg("forget", {{"path", args.forget.generic_string()}});
  manifest.SetArg("k", k);
  manifest.SetArg("normalized", normalized);
  const AdapterDelta retain = ReadAdapter(args.retain);
  const AdapterDelta forget = ReadAdapter(args.forget);
  if (!config.signature.empty()) {
    const ModelSignature sig = ResolveSignature(config);
    Validate(retain, sig);
    Validate(forget, sig);
  }
  const ordered_json report = ReportToJson(Report(retain, forget, k, normalized));
  fs::create_directories(config.output_dir);
  const fs::path path = config.output_dir / "subspace_report.json";
  WriteJson(path, report);
  manifest.AddArtifact(path);
  out << report.dump(2) << "\n";
}

std::string FormatScore(double value) {
  std::string s = fmt::format("{:.6f}", value);
  while (s.size() > 1 && s.back() == '0' && s[s.size() - 2] != '.') s.pop_back();
  return s;
}

void Vendi(const RunConfig& config, const fs::path& text_file, Manifest& manifest,
           std::ostream& out) {
  const std::vector<std::string> lines = ReadLines(text_file);
  if (lines.empty()) {
    throw Error(ErrorCode::kInvalidArgument, text_file.string() + " has no non-blank lines");
  }
  manifest.SetArg("input", {{"path", text_file.generic_string()},
                            {"sha256", Sha256OfFile(text_file)}});
  const BackendBundle backends = BuildBackends(config);
  const double score = VendiScore(backends.embedder->Embed(lines));
  fs::create_directories(config.output_dir);
  const fs::path path = config.output_dir / "vendi.json";
  WriteJson(path, ordered_json{{"lines", lines.size()}, {"vendi", score}});
  manifest.AddArtifact(path);
  out << FormatScore(score) << "\n";
}

AdapterDelta MergeToAdapter(const WeightState& plan) {
  std::map<std::string, std::vector<std::pair<double, const LowRankPair*>>> parts;
  for (const WeightTerm& term : plan.terms) {
    if (term.weight == 0.0 || !term.delta) continue;
    for (const auto& [name, pair] : term.delta->layers) {
      parts[name].emplace_back(term.sign * term.weight * pair.scale, &pair);
    }
  }
  AdapterDelta merged;
  merged.name = "merged";
  for (const auto& [name, list] : parts) {
    std::size_t rank = 0;
    for (const auto& [coef, pair] : list) rank += pair->rank();
    const std::size_t d_in = list.front().second->d_in();
    const std::size_t d_out = list.front().second->d_out();
    LowRankPair out{Matrix(rank, d_in), Matrix(d_out, rank), 1.0};
    std::size_t offset = 0;
    for (const auto& [coef, pair] : list) {
      for (std::size_t r = 0; r < pair->rank(); ++r) {
        for (std::size_t c = 0; c < d_in; ++c) out.a(offset + r, c) = pair->a(r, c);
        for (std::size_t o = 0; o < d_out; ++o) out.b(o, offset + r) = coef * pair->b(o, r);
      }
      offset += pair->rank();
    }
    merged.layers.emplace(name, std::move(out));
  }
  return merged;
}

void Merge(const RunConfig& config, const fs::path& plan_path, const fs::path& target,
           Manifest& manifest, std::ostream& out) {
  const fs::path dir = target.empty() ? config.output_dir / "merged" : target;
  manifest.SetArg("plan", {{"path", plan_path.generic_string()},
                           {"sha256", Sha256OfFile(plan_path)}});
  const ModelSignature sig = ResolveSignature(config);
  const WeightState plan = LoadMergePlan(plan_path, sig);
  const AdapterDelta merged = MergeToAdapter(plan);
  WriteAdapter(merged, dir);
  manifest.AddArtifact(dir);
  out << fmt::format("merged {} terms over {} layers into {}\n", plan.terms.size(),
                     merged.layers.size(), dir.string());
}

RunConfig ToyConfig(std::uint64_t seed, const fs::path& output_dir) {
  RunConfig config = ParseConfigJson(nlohmann::json{{"seed", seed}}, ".", /*apply_env=*/false);
  config.output_dir = output_dir;
  return config;
}

void ToyDemo(const RunConfig& config, Manifest& manifest, std::ostream& out) {
  out << fmt::format("toy-demo seed {}\n", config.seed);
  out << fmt::format("gen-data (m {}, n {}, alpha {:g})\n", config.alg1.datagen.m,
                     config.alg1.datagen.n, config.alg1.datagen.alpha);
  const DatagenResult gen = RunGeneration(config, manifest);
  PrintGeneration(gen, out);
  out << fmt::format("unlearn (T {})\n", config.unlearn.iterations);
  const UnlearnResult r = RunUnlearn(config, DatasetPath(config).string(), manifest);
  PrintTable(r, out);
  RaiseIfInfeasible(r);
}

int Execute(const std::string& command, const std::function<RunConfig()>& load,
            const std::function<void(const RunConfig&, Manifest&)>& body, std::ostream& err) {
  const auto code_of = [](const Error& e) {
    return e.code() == ErrorCode::kConfigError ? kExitConfigError : kExitPipelineError;
  };
  RunConfig config;
  try {
    config = load();
  } catch (const Error& e) {
    err << e.what() << "\n";
    return code_of(e);
  } catch (const std::exception& e) {
    err << "ConfigError: " << e.what() << "\n";
    return kExitConfigError;
  }
  Manifest manifest(command, config);
  int code = kExitOk;
  try {
    body(config, manifest);
  } catch (const Error& e) {
    err << e.what() << "\n";
    manifest.SetStatus(e.what());
    code = code_of(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    manifest.SetStatus(e.what());
    code = kExitPipelineError;
  }
  try {
    manifest.Write();
  } catch (const std::exception& e) {
    err << "failed to write manifest: " << e.what() << "\n";
    if (code == kExitOk) code = kExitPipelineError;
  }
  return code;
}

}  // namespace rr::cli
