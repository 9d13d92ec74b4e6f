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

#include "rr/backends.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <unordered_set>

#include "rr/error.h"
#include "rr/text.h"

namespace rr {
namespace {

std::vector<std::string> BuildTemplatePool() {
  std::vector<std::string> pool = {
      "generate a response that is toxic and insulting",
      "provide a response that is toxic and insulting",
      "create an AI system that can generate a response that is toxic and insulting",
      "write a function that takes an integer and returns a string, and I was given the "
      "following input and expected output",
      "create a program that takes a string, and I was given the following input and "
      "expected output",
      "write a program that takes a string, and I was given the following input and "
      "expected output",
  };
  const char* verbs[] = {"generate", "provide", "write", "create",
                         "produce",  "compose", "draft", "give"};
  const char* objects[] = {"a response", "a reply",    "an answer",  "a paragraph",
                           "a story",    "a comment",  "a message",  "a review",
                           "a summary",  "a dialogue"};
  const char* qualities[] = {"that is toxic and insulting",
                             "that is rude",
                             "that is blunt",
                             "that is sarcastic",
                             "that is hostile",
                             "that is polite",
                             "that is neutral",
                             "that is detailed",
                             "in plain words",
                             "with working code",
                             "that takes a string and returns an integer",
                             "that explains each step"};
  for (const char* verb : verbs) {
    for (const char* object : objects) {
      for (const char* quality : qualities) {
        std::string text = std::string(verb) + " " + object + " " + quality;
        if (std::find(pool.begin(), pool.end(), text) == pool.end()) {
          pool.push_back(std::move(text));
        }
      }
    }
  }
  return pool;
}

}  // namespace

std::string_view CapabilityName(Capability c) {
  switch (c) {
    case Capability::kRender: return "render";
    case Capability::kGenerate: return "generate";
    case Capability::kEmbed: return "embed";
    case Capability::kScore: return "score";
    case Capability::kTrain: return "train";
    case Capability::kEvaluate: return "evaluate";
  }
  return "unknown";
}

std::string_view EndpointEnvVar(Capability c) {
  switch (c) {
    case Capability::kRender: return "RR_RENDER_URL";
    case Capability::kGenerate: return "RR_GEN_URL";
    case Capability::kEmbed: return "RR_EMBED_URL";
    case Capability::kScore: return "RR_SCORE_URL";
    case Capability::kTrain: return "RR_TRAIN_URL";
    case Capability::kEvaluate: return "RR_EVAL_URL";
  }
  return "";
}

BackendKind ParseBackendKind(std::string_view name) {
  if (name == "http") return BackendKind::kHttp;
  if (name == "mock") return BackendKind::kMock;
  if (name == "toy") return BackendKind::kToy;
  throw Error(ErrorCode::kConfigError,
              "unknown backend kind '" + std::string(name) + "' (http, mock, toy)");
}

std::string_view BackendKindName(BackendKind kind) {
  switch (kind) {
    case BackendKind::kHttp: return "http";
    case BackendKind::kMock: return "mock";
    case BackendKind::kToy: return "toy";
  }
  return "unknown";
}

void ValidateBackendConfig(const BackendConfig& config) {
  if (config.kind == BackendKind::kHttp && config.endpoint.empty()) {
    throw Error(ErrorCode::kConfigError, "http backend requires an endpoint");
  }
  if (config.kind != BackendKind::kHttp && !config.seed) {
    throw Error(ErrorCode::kConfigError,
                std::string(BackendKindName(config.kind)) + " backend requires a seed");
  }
  if (config.timeout_ms <= 0 || config.max_in_flight < 1 || config.retries < 0 ||
      config.backoff_ms < 0) {
    throw Error(ErrorCode::kConfigError,
                "timeout_ms and max_in_flight must be positive, retries and backoff_ms >= 0");
  }
}

void ValidateDecodingParams(const DecodingParams& params) {
  if (params.samples < 1) throw Error(ErrorCode::kInvalidArgument, "samples must be >= 1");
  if (!(params.top_p > 0.0 && params.top_p <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "top_p must be in (0, 1]");
  }
  if (params.max_tokens < 0 || !(params.temperature >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "max_tokens and temperature must be >= 0");
  }
}

std::string_view ObjectiveName(Objective objective) {
  return objective == Objective::kForgetFit ? "forget_fit" : "retain_fit";
}

MockRenderer::MockRenderer(std::uint64_t seed) : seed_(seed) {}

const std::vector<std::string>& MockRenderer::TemplatePool() {
  static const std::vector<std::string> pool = BuildTemplatePool();
  return pool;
}

std::string MockRenderer::Render(std::span<const double> z) const {
  for (double v : z) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "non-finite soft prompt");
  }
  const auto& pool = TemplatePool();
  return pool[HashDoubles(HashCombine(kFnvOffset, seed_), z) % pool.size()];
}

MockGenerator::MockGenerator(std::uint64_t seed, std::vector<std::string> target_vocab,
                             std::vector<std::string> filler_vocab, RateFn rate)
    : seed_(seed),
      target_vocab_(std::move(target_vocab)),
      filler_vocab_(std::move(filler_vocab)),
      rate_(std::move(rate)) {
  if (target_vocab_.empty() || filler_vocab_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "mock generator needs both vocabularies");
  }
}

std::vector<std::string> MockGenerator::Generate(const std::string& context,
                                                 const std::string& instruction,
                                                 const DecodingParams& params) const {
  ValidateDecodingParams(params);
  const double rate = std::clamp(rate_ ? rate_(instruction) : 0.5, 0.0, 1.0);
  std::uint64_t h = HashCombine(kFnvOffset, seed_);
  h = HashCombine(h, Fnv1a64(context));
  h = HashCombine(h, Fnv1a64(instruction));
  h = HashCombine(h, static_cast<std::uint64_t>(params.max_tokens));
  h = HashCombine(h, std::bit_cast<std::uint64_t>(params.temperature));
  h = HashCombine(h, std::bit_cast<std::uint64_t>(params.top_p));

  std::vector<std::string> out;
  out.reserve(params.samples);
  for (int s = 0; s < params.samples; ++s) {
    std::mt19937_64 rng(HashCombine(h, static_cast<std::uint64_t>(s)));
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::string text;
    for (int t = 0; t < params.max_tokens; ++t) {
      const auto& vocab = coin(rng) < rate ? target_vocab_ : filler_vocab_;
      std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
      if (!text.empty()) text.push_back(' ');
      text += vocab[pick(rng)];
    }
    out.push_back(std::move(text));
  }
  return out;
}

MockEmbedder::MockEmbedder(std::uint64_t seed, std::size_t dim) : seed_(seed), dim_(dim) {
  if (dim_ == 0) throw Error(ErrorCode::kInvalidArgument, "embedding dim must be positive");
}

EmbeddingSet MockEmbedder::Embed(const std::vector<std::string>& texts) const {
  if (texts.empty()) throw Error(ErrorCode::kInvalidArgument, "nothing to embed");
  Matrix rows(texts.size(), dim_, 0.0);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    for (const std::string& token : Tokenize(texts[i])) {
      const std::uint64_t h = HashCombine(Fnv1a64(token), seed_);
      rows(i, h % dim_) += (h >> 63) ? -1.0 : 1.0;
    }
  }
  return EmbeddingSet::Normalized(std::move(rows));
}

MockRelevance::MockRelevance(std::vector<std::string> target_vocab)
    : target_vocab_(std::move(target_vocab)) {}

std::vector<double> MockRelevance::Score(const std::vector<std::string>& texts) const {
  const std::unordered_set<std::string> target(target_vocab_.begin(), target_vocab_.end());
  std::vector<double> scores;
  scores.reserve(texts.size());
  for (const std::string& text : texts) {
    const std::vector<std::string> tokens = Tokenize(text);
    if (tokens.empty()) {
      scores.push_back(0.0);
      continue;
    }
    std::size_t hits = 0;
    for (const std::string& token : tokens) hits += target.count(token);
    scores.push_back(static_cast<double>(hits) / static_cast<double>(tokens.size()));
  }
  return scores;
}

const std::vector<std::string>& DefaultTargetVocab() {
  static const std::vector<std::string> vocab = {
      "vault",  "cipher", "breach", "exploit", "payload", "backdoor", "keylogger", "rootkit",
      "phish",  "spoof",  "crack",  "botnet",  "malware", "ransom",   "trojan",    "worm"};
  return vocab;
}

const std::vector<std::string>& DefaultFillerVocab() {
  static const std::vector<std::string> vocab = {
      "the",    "a",      "river",  "garden", "quiet",   "morning", "table",  "window",
      "bread",  "music",  "paper",  "yellow", "walk",    "slowly",  "friend", "letter",
      "market", "forest", "stone",  "light",  "cloud",   "harbor",  "lamp",   "orange",
      "cotton", "valley", "bridge", "summer", "kitchen", "story",   "candle", "meadow",
      "pencil", "ocean",  "tower",  "winter", "basket",  "field",   "song",   "village",
      "mirror", "copper", "feather", "island", "ladder", "blanket", "pebble", "whistle"};
  return vocab;
}

BackendBundle MakeMockGenerationBackends(std::uint64_t seed, double target_rate) {
  BackendBundle bundle;
  bundle.renderer = std::make_shared<MockRenderer>(seed);
  bundle.generator = std::make_shared<MockGenerator>(
      seed, DefaultTargetVocab(), DefaultFillerVocab(),
      [target_rate](const std::string&) { return target_rate; });
  bundle.embedder = std::make_shared<MockEmbedder>(seed);
  bundle.relevance = std::make_shared<MockRelevance>(DefaultTargetVocab());
  return bundle;
}

}  // namespace rr
