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

#ifndef RR_DATAGEN_H_
#define RR_DATAGEN_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "rr/backends.h"
#include "rr/bandit.h"
#include "rr/diversity.h"

namespace rr {

struct GenerationContext {
  std::vector<std::string> contexts;
  std::size_t batch_size = 4;  // contexts sampled per candidate evaluation
};
void ValidateGenerationContext(const GenerationContext& c);  // kInvalidArgument

struct CompositeScore {
  double relevance = 0.0;  // tau
  double diversity = 0.0;  // v
  double alpha = 0.0;
  double value = 0.0;
  bool zero_relevance = false;
};

// (alpha / v + (1 - alpha) / tau)^-1. tau = 0 with alpha < 1 yields 0 and
// sets zero_relevance. kInvalidArgument outside v >= 0, tau in [0, 1],
// alpha in [0, 1], or for v = 0 with alpha > 0.
CompositeScore ComputeCompositeScore(double v, double tau, double alpha);

struct ForgetRecord {
  int context_index = 0;
  std::string instruction;
  std::string response;
  double relevance = 0.0;
  std::size_t embedding_ref = 0;  // row in the dataset embeddings
  int outer_iteration = 0;        // 1-based
  bool low_relevance = false;     // below the configured floor; kept
};

// Hash of the normalized (lowercased, whitespace-collapsed) response.
std::uint64_t ResponseKey(std::string_view response);

// Append-only, deduplicated on ResponseKey.
class ForgetDataset {
 public:
  ForgetDataset() = default;

  // False (and nothing stored) for a duplicate or an empty response.
  // embedding_ref is assigned here. kInvalidEmbedding on a dimension change.
  bool Append(ForgetRecord record, std::span<const double> embedding);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const std::vector<ForgetRecord>& records() const { return records_; }
  std::size_t dim() const { return dim_; }
  std::span<const double> embedding(std::size_t i) const { return {&rows_[i * dim_], dim_}; }
  // Unit rows of the last `count` records; all of them when count is 0 or
  // exceeds size(). kInvalidEmbedding while empty.
  EmbeddingSet RecentEmbeddings(std::size_t count = 0) const;
  bool Contains(std::string_view response) const;

 private:
  std::vector<ForgetRecord> records_;
  std::unordered_set<std::uint64_t> keys_;
  std::vector<double> rows_;
  std::size_t dim_ = 0;
};

// <path> holds one JSON object per line, fields exactly ctx, instruction,
// response, tau, iter. Embeddings go to <path>.emb.bin (float32 little
// endian, row-major, one row per line) with <path>.emb.json describing
// {format_version, rows, dim, sha256}.
void WriteDataset(const ForgetDataset& dataset, const std::filesystem::path& path);
// kIoError, kCorruptManifest, kTruncatedBlob or kChecksumMismatch.
ForgetDataset ReadDataset(const std::filesystem::path& path);

struct DatagenConfig {
  int m = 3;  // outer iterations
  int n = 10;  // inner rounds per outer iteration
  double alpha = 0.5;
  std::size_t pool_size = 200;
  std::size_t d_p = 16;
  std::size_t k_warm = 10;
  std::size_t vendi_cap = 512;  // most recent dataset rows in the kernel; 0 = all
  double local_sigma = 0.2;     // spread of arms drawn around warm-start prompts
  double tau_floor = 0.0;
  DecodingParams decoding = {20, 1.0, 0.9, 1};
  double nu = 1.0;
  double lambda_reg = 1.0;
  std::uint64_t seed = 0;
};
void ValidateDatagenConfig(const DatagenConfig& config);  // kConfigError

struct CandidateResult {
  std::string instruction;
  std::vector<std::size_t> context_indices;
  std::vector<std::string> responses;
  std::vector<double> relevance;
  CompositeScore score;
};

// Renders the arm, generates for the sampled contexts, scores and embeds the
// responses; v is taken over the batch plus the most recent vendi_cap rows
// of the snapshot. kEmptyGeneration when every response is blank.
CandidateResult EvaluateCandidate(const SoftPromptArm& arm,
                                  std::span<const std::size_t> context_indices,
                                  const GenerationContext& context, const ForgetDataset& snapshot,
                                  const BackendBundle& backends, const DatagenConfig& config);

struct ScoreEntry {
  int round = 0;
  int arm_id = 0;
  Vector z;
  std::string instruction;
  CompositeScore score;
  double reward = 0.0;  // normalized by the running max of this iteration
};

struct InnerLoopResult {
  std::optional<SoftPromptArm> best_arm;
  std::vector<ScoreEntry> table;
  std::vector<std::string> failures;  // one message per skipped round
};

// n rounds of select, evaluate, update. Arms whose evaluation fails are
// dropped from the pool for the rest of the loop; if every round fails the
// last error is rethrown.
InnerLoopResult RunInnerLoop(BanditState& state, std::vector<SoftPromptArm> pool,
                             const GenerationContext& context, const ForgetDataset& snapshot,
                             int n, const BackendBundle& backends, const DatagenConfig& config,
                             int outer_iteration);

// Half uniform on [-1, 1]^d_p; half Gaussian around the given centers
// (clipped), or uniform too when there are none.
std::vector<SoftPromptArm> MakeArmPool(std::size_t size, std::size_t d_p,
                                       std::span<const Vector> centers, double sigma,
                                       std::uint64_t seed);

struct OuterIterationReport {
  int iteration = 0;
  std::vector<ScoredPrompt> warm_start;
  InnerLoopResult inner;
  std::string best_instruction;
  std::size_t added = 0;
  std::size_t flagged = 0;
};

struct DatagenResult {
  ForgetDataset dataset;
  std::vector<OuterIterationReport> iterations;
};

// Full generation loop. When dataset_path is set the dataset is written
// after each outer iteration and, on failure, before the error propagates.
DatagenResult RunOuterLoop(const GenerationContext& context, const BackendBundle& backends,
                           const DatagenConfig& config,
                           const std::filesystem::path& dataset_path = {});

}  // namespace rr

#endif  // RR_DATAGEN_H_
