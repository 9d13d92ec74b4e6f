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

#include "rr/datagen.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "rr/error.h"
#include "rr/files.h"
#include "rr/text.h"

namespace rr {

void ValidateGenerationContext(const GenerationContext& c) {
  if (c.contexts.empty()) throw Error(ErrorCode::kInvalidArgument, "generation context is empty");
  if (c.batch_size == 0) throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
}

CompositeScore ComputeCompositeScore(double v, double tau, double alpha) {
  if (!(std::isfinite(v) && v >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("diversity {} must be >= 0", v));
  }
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("relevance {} outside [0, 1]", tau));
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("alpha {} outside [0, 1]", alpha));
  }
  if (v == 0.0 && alpha > 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "diversity is 0 but carries weight");
  }
  CompositeScore s{tau, v, alpha, 0.0, false};
  if (alpha == 0.0) {
    s.value = tau;
    s.zero_relevance = tau == 0.0;
  } else if (alpha == 1.0) {
    s.value = v;
  } else if (tau == 0.0) {
    s.zero_relevance = true;
  } else {
    s.value = 1.0 / (alpha / v + (1.0 - alpha) / tau);
  }
  return s;
}

std::uint64_t ResponseKey(std::string_view response) { return Fnv1a64(NormalizeText(response)); }

bool ForgetDataset::Append(ForgetRecord record, std::span<const double> embedding) {
  if (Trim(record.response).empty()) return false;
  if (embedding.empty() || (dim_ != 0 && embedding.size() != dim_)) {
    throw Error(ErrorCode::kInvalidEmbedding,
                fmt::format("embedding has {} entries, dataset uses {}", embedding.size(), dim_));
  }
  if (!keys_.insert(ResponseKey(record.response)).second) return false;
  dim_ = embedding.size();
  record.embedding_ref = records_.size();
  records_.push_back(std::move(record));
  rows_.insert(rows_.end(), embedding.begin(), embedding.end());
  return true;
}

bool ForgetDataset::Contains(std::string_view response) const {
  return keys_.count(ResponseKey(response)) > 0;
}

EmbeddingSet ForgetDataset::RecentEmbeddings(std::size_t count) const {
  if (records_.empty()) throw Error(ErrorCode::kInvalidEmbedding, "dataset is empty");
  const std::size_t n = records_.size();
  const std::size_t take = (count == 0 || count > n) ? n : count;
  const auto first = rows_.begin() + static_cast<std::ptrdiff_t>((n - take) * dim_);
  return EmbeddingSet(Matrix(take, dim_, std::vector<double>(first, rows_.end())));
}

namespace {

std::filesystem::path Sibling(const std::filesystem::path& path, const char* suffix) {
  std::filesystem::path out = path;
  out += suffix;
  return out;
}

}  // namespace

void WriteDataset(const ForgetDataset& dataset, const std::filesystem::path& path) {
  std::string lines;
  for (const ForgetRecord& r : dataset.records()) {
    nlohmann::ordered_json j;
    j["ctx"] = r.context_index;
    j["instruction"] = r.instruction;
    j["response"] = r.response;
    j["tau"] = r.relevance;
    j["iter"] = r.outer_iteration;
    lines += j.dump() + "\n";
  }
  std::vector<std::uint8_t> blob;
  blob.reserve(dataset.size() * dataset.dim() * 4);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (double v : dataset.embedding(i)) AppendFloat32Le(v, blob);
  }
  nlohmann::ordered_json meta;
  meta["format_version"] = 1;
  meta["rows"] = dataset.size();
  meta["dim"] = dataset.dim();
  meta["sha256"] = Sha256Hex(blob);
  WriteTextFile(path, lines);
  WriteBinaryFile(Sibling(path, ".emb.bin"), blob);
  WriteTextFile(Sibling(path, ".emb.json"), meta.dump(2) + "\n");
}

ForgetDataset ReadDataset(const std::filesystem::path& path) {
  const std::string text = ReadTextFile(path);
  const std::string meta_text = ReadTextFile(Sibling(path, ".emb.json"));
  const std::vector<std::uint8_t> blob = ReadBinaryFile(Sibling(path, ".emb.bin"));

  nlohmann::json meta;
  std::size_t rows = 0, dim = 0;
  std::string sha;
  try {
    meta = nlohmann::json::parse(meta_text);
    if (meta.at("format_version").get<int>() != 1) {
      throw Error(ErrorCode::kCorruptManifest, "unsupported embedding format_version");
    }
    rows = meta.at("rows").get<std::size_t>();
    dim = meta.at("dim").get<std::size_t>();
    sha = meta.at("sha256").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptManifest, fmt::format("embedding manifest: {}", e.what()));
  }
  if (dim != 0 && rows > blob.size() / 4 / dim) {
    throw Error(ErrorCode::kTruncatedBlob, fmt::format("{} holds {} bytes, expected {}",
                                                       Sibling(path, ".emb.bin").string(),
                                                       blob.size(), rows * dim * 4));
  }
  if (blob.size() != rows * dim * 4) {
    throw Error(ErrorCode::kCorruptManifest, "embedding blob size disagrees with manifest");
  }
  if (Sha256Hex(blob) != sha) {
    throw Error(ErrorCode::kChecksumMismatch, "embedding blob sha256 mismatch");
  }

  ForgetDataset dataset;
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  std::vector<double> embedding(dim);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ForgetRecord r;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      if (!j.is_object() || j.size() != 5) {
        throw Error(ErrorCode::kCorruptManifest,
                    fmt::format("dataset line {} must have exactly 5 fields", row + 1));
      }
      r.context_index = j.at("ctx").get<int>();
      r.instruction = j.at("instruction").get<std::string>();
      r.response = j.at("response").get<std::string>();
      r.relevance = j.at("tau").get<double>();
      r.outer_iteration = j.at("iter").get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kCorruptManifest,
                  fmt::format("dataset line {}: {}", row + 1, e.what()));
    }
    if (row >= rows) throw Error(ErrorCode::kCorruptManifest, "more records than embeddings");
    for (std::size_t c = 0; c < dim; ++c) embedding[c] = LoadFloat32Le(&blob[(row * dim + c) * 4]);
    if (!dataset.Append(std::move(r), embedding)) {
      throw Error(ErrorCode::kCorruptManifest,
                  fmt::format("dataset line {} is empty or a duplicate", row + 1));
    }
    ++row;
  }
  if (row != rows) throw Error(ErrorCode::kCorruptManifest, "fewer records than embeddings");
  return dataset;
}

void ValidateDatagenConfig(const DatagenConfig& c) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kConfigError, msg); };
  if (c.m < 1) fail("alg1.m must be >= 1");
  if (c.n < 1) fail("alg1.n must be >= 1");
  if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) fail("alg1.alpha must lie in [0, 1]");
  if (c.pool_size == 0) fail("alg1.pool_size must be >= 1");
  if (c.d_p == 0) fail("alg1.d_p must be >= 1");
  if (c.k_warm == 0) fail("alg1.k_warm must be >= 1");
  if (!(c.local_sigma > 0.0)) fail("alg1.local_sigma must be > 0");
  if (!(c.tau_floor >= 0.0 && c.tau_floor <= 1.0)) fail("alg1.tau_floor must lie in [0, 1]");
  if (!(c.nu >= 0.0)) fail("alg1.nu must be >= 0");
  if (!(c.lambda_reg > 0.0)) fail("alg1.lambda_reg must be > 0");
  try {
    ValidateDecodingParams(c.decoding);
  } catch (const Error& e) {
    fail(fmt::format("alg1.decoding: {}", e.what()));
  }
}

namespace {

std::vector<double> ScoreResponses(const BackendBundle& b, const std::vector<std::string>& texts) {
  std::vector<double> scores = b.relevance->Score(texts);
  if (scores.size() != texts.size()) {
    throw Error(ErrorCode::kBackendUnavailable,
                fmt::format("relevance returned {} scores for {} texts", scores.size(),
                            texts.size()));
  }
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) {
      throw Error(ErrorCode::kBackendUnavailable,
                  fmt::format("relevance score {} outside [0, 1]", s));
    }
  }
  return scores;
}

EmbeddingSet EmbedResponses(const BackendBundle& b, const std::vector<std::string>& texts) {
  EmbeddingSet e = b.embedder->Embed(texts);
  if (e.n() != texts.size()) {
    throw Error(ErrorCode::kBackendUnavailable,
                fmt::format("embedder returned {} rows for {} texts", e.n(), texts.size()));
  }
  return e;
}

std::vector<std::size_t> SampleContexts(std::size_t total, std::size_t batch,
                                        std::uint64_t seed) {
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), 0);
  if (batch >= total) return idx;
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates; std::shuffle would spend draws on the whole range.
  for (std::size_t i = 0; i < batch; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, total - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(batch);
  std::sort(idx.begin(), idx.end());
  return idx;
}

bool Skippable(ErrorCode code) {
  return code == ErrorCode::kBackendUnavailable || code == ErrorCode::kTimeout ||
         code == ErrorCode::kEmptyGeneration;
}

}  // namespace

CandidateResult EvaluateCandidate(const SoftPromptArm& arm,
                                  std::span<const std::size_t> context_indices,
                                  const GenerationContext& context, const ForgetDataset& snapshot,
                                  const BackendBundle& backends, const DatagenConfig& config) {
  CandidateResult out;
  out.instruction = backends.renderer->Render(arm.z);
  out.context_indices.assign(context_indices.begin(), context_indices.end());
  for (std::size_t idx : context_indices) {
    for (std::string& text :
         backends.generator->Generate(context.contexts.at(idx), out.instruction, config.decoding)) {
      out.responses.push_back(std::move(text));
    }
  }
  if (std::all_of(out.responses.begin(), out.responses.end(),
                  [](const std::string& t) { return Trim(t).empty(); })) {
    throw Error(ErrorCode::kEmptyGeneration,
                fmt::format("every response to '{}' is empty", out.instruction));
  }
  out.relevance = ScoreResponses(backends, out.responses);
  const double tau = std::accumulate(out.relevance.begin(), out.relevance.end(), 0.0) /
                     static_cast<double>(out.relevance.size());
  const EmbeddingSet batch = EmbedResponses(backends, out.responses);
  double v;
  if (snapshot.empty()) {
    v = VendiScore(batch);
  } else {
    const EmbeddingSet recent = snapshot.RecentEmbeddings(config.vendi_cap);
    v = VendiScore(StackEmbeddings(&batch, &recent, recent.n()));
  }
  out.score = ComputeCompositeScore(v, tau, config.alpha);
  return out;
}

InnerLoopResult RunInnerLoop(BanditState& state, std::vector<SoftPromptArm> pool,
                             const GenerationContext& context, const ForgetDataset& snapshot,
                             int n, const BackendBundle& backends, const DatagenConfig& config,
                             int outer_iteration) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "inner loop needs n >= 1");
  InnerLoopResult result;
  std::exception_ptr last_error;
  double running_max = 0.0;
  for (int round = 1; round <= n && !pool.empty(); ++round) {
    const SoftPromptArm arm = state.Select(pool);
    const std::uint64_t ctx_seed = HashCombine(
        HashCombine(HashCombine(config.seed, 0x5ca1ab1eULL), outer_iteration), round);
    const auto indices =
        SampleContexts(context.contexts.size(), context.batch_size, ctx_seed);
    CandidateResult cand;
    try {
      cand = EvaluateCandidate(arm, indices, context, snapshot, backends, config);
    } catch (const Error& e) {
      if (!Skippable(e.code())) throw;
      result.failures.push_back(fmt::format("round {} arm {}: {}", round, arm.id, e.what()));
      last_error = std::current_exception();
      std::erase_if(pool, [&](const SoftPromptArm& a) { return a.id == arm.id; });
      continue;
    }
    running_max = std::max(running_max, cand.score.value);
    const double reward =
        running_max > 0.0 ? std::clamp(cand.score.value / running_max, 0.0, 1.0) : 0.0;
    state.Update(arm, reward);
    result.table.push_back({round, arm.id, arm.z, cand.instruction, cand.score, reward});
  }
  if (result.table.empty()) {
    if (last_error) std::rethrow_exception(last_error);
    throw Error(ErrorCode::kEmptyPool, "inner loop had no arms to evaluate");
  }
  const ScoreEntry* best = &result.table.front();
  for (const ScoreEntry& e : result.table) {
    if (e.score.value > best->score.value) best = &e;
  }
  result.best_arm = SoftPromptArm{best->arm_id, best->z};
  return result;
}

std::vector<SoftPromptArm> MakeArmPool(std::size_t size, std::size_t d_p,
                                       std::span<const Vector> centers, double sigma,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, sigma);
  std::vector<SoftPromptArm> pool;
  pool.reserve(size);
  const std::size_t uniform_count = centers.empty() ? size : size - size / 2;
  for (std::size_t i = 0; i < size; ++i) {
    Vector z(d_p);
    if (i < uniform_count) {
      for (double& v : z) v = unif(rng);
    } else {
      const Vector& c = centers[(i - uniform_count) % centers.size()];
      for (std::size_t j = 0; j < d_p; ++j) z[j] = std::clamp(c.at(j) + normal(rng), -1.0, 1.0);
    }
    pool.push_back({static_cast<int>(i), std::move(z)});
  }
  return pool;
}

namespace {

std::vector<ScoredPrompt> WarmSeeds(const std::vector<ScoreEntry>& history, std::size_t k) {
  double max_value = 0.0;
  for (const ScoreEntry& e : history) max_value = std::max(max_value, e.score.value);
  std::vector<ScoredPrompt> seeds;
  for (const ScoreEntry& e : history) {
    seeds.push_back({e.z, max_value > 0.0 ? e.score.value / max_value : 0.0});
  }
  std::stable_sort(seeds.begin(), seeds.end(),
                   [](const ScoredPrompt& a, const ScoredPrompt& b) { return a.score > b.score; });
  if (seeds.size() > k) seeds.resize(k);
  return seeds;
}

void Harvest(const SoftPromptArm& arm, int iteration, const GenerationContext& context,
             const BackendBundle& backends, const DatagenConfig& config, ForgetDataset& dataset,
             OuterIterationReport& report) {
  report.best_instruction = backends.renderer->Render(arm.z);
  for (std::size_t c = 0; c < context.contexts.size(); ++c) {
    const std::vector<std::string> texts =
        backends.generator->Generate(context.contexts[c], report.best_instruction, config.decoding);
    if (texts.empty()) continue;
    const std::vector<double> tau = ScoreResponses(backends, texts);
    const EmbeddingSet emb = EmbedResponses(backends, texts);
    for (std::size_t t = 0; t < texts.size(); ++t) {
      ForgetRecord r;
      r.context_index = static_cast<int>(c);
      r.instruction = report.best_instruction;
      r.response = texts[t];
      r.relevance = tau[t];
      r.outer_iteration = iteration;
      r.low_relevance = tau[t] < config.tau_floor;
      const bool flagged = r.low_relevance;
      if (dataset.Append(std::move(r), emb.row(t))) {
        ++report.added;
        report.flagged += flagged;
      }
    }
  }
}

}  // namespace

DatagenResult RunOuterLoop(const GenerationContext& context, const BackendBundle& backends,
                           const DatagenConfig& config, const std::filesystem::path& dataset_path) {
  ValidateGenerationContext(context);
  ValidateDatagenConfig(config);
  DatagenResult result;
  std::vector<ScoreEntry> history;
  try {
    for (int i = 1; i <= config.m; ++i) {
      OuterIterationReport report;
      report.iteration = i;
      report.warm_start = WarmSeeds(history, config.k_warm);

      BanditConfig bc;
      bc.input_dim = config.d_p;
      bc.nu = config.nu;
      bc.lambda_reg = config.lambda_reg;
      bc.k_warm = config.k_warm;
      bc.seed = HashCombine(HashCombine(config.seed, 0xba4d17ULL), i);
      BanditState state = WarmStart(report.warm_start, bc);

      std::vector<Vector> centers;
      for (const ScoredPrompt& s : report.warm_start) centers.push_back(s.z);
      auto pool = MakeArmPool(config.pool_size, config.d_p, centers, config.local_sigma,
                              HashCombine(HashCombine(config.seed, 0x9001ULL), i));

      report.inner = RunInnerLoop(state, std::move(pool), context, result.dataset, config.n,
                                  backends, config, i);
      history.insert(history.end(), report.inner.table.begin(), report.inner.table.end());
      Harvest(*report.inner.best_arm, i, context, backends, config, result.dataset, report);
      result.iterations.push_back(std::move(report));
      if (!dataset_path.empty()) WriteDataset(result.dataset, dataset_path);
    }
  } catch (...) {
    if (!dataset_path.empty()) WriteDataset(result.dataset, dataset_path);
    throw;
  }
  return result;
}

}  // namespace rr
