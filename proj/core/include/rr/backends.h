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

#ifndef RR_BACKENDS_H_
#define RR_BACKENDS_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rr/adapters.h"
#include "rr/diversity.h"

namespace rr {

enum class BackendKind { kHttp, kMock, kToy };

enum class Capability { kRender, kGenerate, kEmbed, kScore, kTrain, kEvaluate };

inline constexpr Capability kAllCapabilities[] = {
    Capability::kRender, Capability::kGenerate, Capability::kEmbed,
    Capability::kScore,  Capability::kTrain,    Capability::kEvaluate};

// "render", "generate", ... as used in config files.
std::string_view CapabilityName(Capability c);
// RR_RENDER_URL, RR_GEN_URL, RR_EMBED_URL, RR_SCORE_URL, RR_TRAIN_URL,
// RR_EVAL_URL.
std::string_view EndpointEnvVar(Capability c);
BackendKind ParseBackendKind(std::string_view name);  // kConfigError
std::string_view BackendKindName(BackendKind kind);

struct BackendConfig {
  BackendKind kind = BackendKind::kMock;
  std::string endpoint;  // http only, e.g. http://127.0.0.1:8080
  int timeout_ms = 30000;
  int max_in_flight = 4;
  std::optional<std::uint64_t> seed;  // mock/toy
  std::string bearer_token;
  int retries = 2;
  int backoff_ms = 250;  // doubles per retry
};

// Throws kConfigError: http needs an endpoint, mock/toy need a seed.
void ValidateBackendConfig(const BackendConfig& config);

struct DecodingParams {
  int max_tokens = 20;
  double temperature = 1.0;
  double top_p = 0.9;
  int samples = 25;
};

void ValidateDecodingParams(const DecodingParams& params);  // kInvalidArgument

struct TradeoffPoint {
  double s = 0.0;  // forget score, lower is more forgotten
  double u = 0.0;  // utility score, higher is better
  bool operator==(const TradeoffPoint&) const = default;
};

enum class Objective { kForgetFit, kRetainFit };
std::string_view ObjectiveName(Objective objective);

struct TrainHyper {
  std::size_t rank = 4;
  int steps = 200;
  double learning_rate = 0.05;
  std::string adapter_name;
};

// Backends are shared across threads; every call must be reentrant.
class InstructionRenderer {
 public:
  virtual ~InstructionRenderer() = default;
  virtual std::string Render(std::span<const double> z) const = 0;
};

class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::vector<std::string> Generate(const std::string& context,
                                            const std::string& instruction,
                                            const DecodingParams& params) const = 0;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual EmbeddingSet Embed(const std::vector<std::string>& texts) const = 0;
};

class RelevanceOracle {
 public:
  virtual ~RelevanceOracle() = default;
  virtual std::vector<double> Score(const std::vector<std::string>& texts) const = 0;
};

class Trainer {
 public:
  virtual ~Trainer() = default;
  virtual AdapterDelta Train(const WeightState& plan, const std::string& dataset_ref,
                             Objective objective, const TrainHyper& hyper) const = 0;
};

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual TradeoffPoint Evaluate(const WeightState& plan) const = 0;
};

struct BackendBundle {
  std::shared_ptr<const InstructionRenderer> renderer;
  std::shared_ptr<const Generator> generator;
  std::shared_ptr<const Embedder> embedder;
  std::shared_ptr<const RelevanceOracle> relevance;
  std::shared_ptr<const Trainer> trainer;
  std::shared_ptr<const Evaluator> evaluator;
};

// ---- Mocks. Each is a pure function of (seed, inputs).

// Hashes (seed, z) into a fixed template pool that contains the published
// best instructions as fixtures.
class MockRenderer : public InstructionRenderer {
 public:
  explicit MockRenderer(std::uint64_t seed);
  std::string Render(std::span<const double> z) const override;
  static const std::vector<std::string>& TemplatePool();

 private:
  std::uint64_t seed_;
};

// Emits params.samples strings of params.max_tokens tokens. Each token is
// drawn from the target vocabulary with probability rate(instruction), else
// from the filler vocabulary. Temperature and top_p only enter the seed.
class MockGenerator : public Generator {
 public:
  using RateFn = std::function<double(const std::string& instruction)>;

  MockGenerator(std::uint64_t seed, std::vector<std::string> target_vocab,
                std::vector<std::string> filler_vocab, RateFn rate);
  std::vector<std::string> Generate(const std::string& context, const std::string& instruction,
                                    const DecodingParams& params) const override;

 private:
  std::uint64_t seed_;
  std::vector<std::string> target_vocab_;
  std::vector<std::string> filler_vocab_;
  RateFn rate_;
};

// Signed feature hashing of tokens to `dim` buckets, then unit-normalized.
// Text with no tokens maps to the first basis vector.
class MockEmbedder : public Embedder {
 public:
  explicit MockEmbedder(std::uint64_t seed, std::size_t dim = 64);
  EmbeddingSet Embed(const std::vector<std::string>& texts) const override;

 private:
  std::uint64_t seed_;
  std::size_t dim_;
};

// Fraction of tokens in the target vocabulary; 0 for text with no tokens.
class MockRelevance : public RelevanceOracle {
 public:
  explicit MockRelevance(std::vector<std::string> target_vocab);
  std::vector<double> Score(const std::vector<std::string>& texts) const override;

 private:
  std::vector<std::string> target_vocab_;
};

// Default vocabularies for the generic mocks.
const std::vector<std::string>& DefaultTargetVocab();
const std::vector<std::string>& DefaultFillerVocab();

// Generic mock bundle for render/generate/embed/score; trainer and
// evaluator are left empty.
BackendBundle MakeMockGenerationBackends(std::uint64_t seed, double target_rate = 0.5);

// ---- HTTP clients (JSON over POST).

// Shared transport: bounded in-flight requests, per-request timeout, bearer
// token, and retries with exponential backoff on 5xx or timeout. Non-2xx
// replies and malformed bodies map to kBackendUnavailable, exhausted
// timeouts to kTimeout.
class HttpTransport {
 public:
  explicit HttpTransport(BackendConfig config);
  ~HttpTransport();
  HttpTransport(const HttpTransport&) = delete;
  HttpTransport& operator=(const HttpTransport&) = delete;

  nlohmann::json Post(const std::string& path, const nlohmann::json& body, bool retry) const;
  // Raw GET of an absolute http URL on any host, used to fetch adapters.
  std::string Get(const std::string& url) const;
  const BackendConfig& config() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class HttpRenderer : public InstructionRenderer {
 public:
  explicit HttpRenderer(std::shared_ptr<const HttpTransport> transport);
  std::string Render(std::span<const double> z) const override;

 private:
  std::shared_ptr<const HttpTransport> transport_;
};

class HttpGenerator : public Generator {
 public:
  explicit HttpGenerator(std::shared_ptr<const HttpTransport> transport);
  std::vector<std::string> Generate(const std::string& context, const std::string& instruction,
                                    const DecodingParams& params) const override;

 private:
  std::shared_ptr<const HttpTransport> transport_;
};

class HttpEmbedder : public Embedder {
 public:
  explicit HttpEmbedder(std::shared_ptr<const HttpTransport> transport);
  EmbeddingSet Embed(const std::vector<std::string>& texts) const override;

 private:
  std::shared_ptr<const HttpTransport> transport_;
};

class HttpRelevance : public RelevanceOracle {
 public:
  explicit HttpRelevance(std::shared_ptr<const HttpTransport> transport);
  std::vector<double> Score(const std::vector<std::string>& texts) const override;

 private:
  std::shared_ptr<const HttpTransport> transport_;
};

// Posts the merge plan by reference; the reply names a finished adapter
// directory (file path, file:// or http:// URL) and its manifest sha256.
// http adapters are downloaded under download_dir. Never retried.
class HttpTrainer : public Trainer {
 public:
  HttpTrainer(std::shared_ptr<const HttpTransport> transport,
              std::filesystem::path download_dir, ModelSignature signature);
  AdapterDelta Train(const WeightState& plan, const std::string& dataset_ref,
                     Objective objective, const TrainHyper& hyper) const override;

 private:
  std::shared_ptr<const HttpTransport> transport_;
  std::filesystem::path download_dir_;
  ModelSignature signature_;
};

class HttpEvaluator : public Evaluator {
 public:
  explicit HttpEvaluator(std::shared_ptr<const HttpTransport> transport);
  TradeoffPoint Evaluate(const WeightState& plan) const override;

 private:
  std::shared_ptr<const HttpTransport> transport_;
};

}  // namespace rr

#endif  // RR_BACKENDS_H_
