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

#include "rr/toyenv.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "rr/error.h"
#include "rr/text.h"

namespace rr {
namespace {

constexpr std::size_t kD = kToyDim;
constexpr std::size_t kHalf = kToyDim / 2;
constexpr double kLeakage = 0.1;
// Readout weight on the other task's block; gives subtraction mild collateral.
constexpr double kCrossReadout = 0.1;
// Small init plus a slow pre-fit stops the base just past the target, so it
// carries little margin beyond what the tasks need.
constexpr double kInitStd = 0.05;
constexpr double kPrefitTarget = 0.9;
constexpr double kPrefitRate = 0.05;
constexpr int kPrefitMaxEpochs = 5000;

ToyTask MakeTask(const std::string& name, std::size_t block, std::size_t n,
                 std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);
  const std::size_t lo = block * kHalf, hi = lo + kHalf;
  Vector w(kD, 0.0);
  for (std::size_t j = lo; j < hi; ++j) w[j] = normal(rng);

  ToyTask task{name, Matrix(n, kD), Vector(n), Vector(kD, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    auto x = task.inputs.row(i);
    for (std::size_t j = 0; j < kD; ++j) {
      x[j] = (j >= lo && j < hi) ? normal(rng) : kLeakage * normal(rng);
    }
    task.labels[i] = Dot(w, x) >= 0.0 ? 1.0 : -1.0;
  }
  for (std::size_t j = 0; j < kD; ++j) {
    task.readout[j] = (coin(rng) ? 1.0 : -1.0) * ((j >= lo && j < hi) ? 1.0 : kCrossReadout);
  }
  return task;
}

struct Activations {
  double h0[kD];
  double h1[kD];
  double logit;
};

void Forward(const Matrix& w0, const Matrix& w1, const ToyTask& task, std::size_t i,
             Activations& act) {
  const auto x = task.inputs.row(i);
  act.logit = 0.0;
  for (std::size_t r = 0; r < kD; ++r) {
    act.h0[r] = std::tanh(Dot(w0.row(r), x));
    act.h1[r] = std::tanh(Dot(w1.row(r), x));
    act.logit += task.readout[r] * (act.h0[r] + act.h1[r]);
  }
}

// log(1 + exp(-m)) without overflow.
double Softplus(double m) { return m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m)); }

// Mean logistic loss; accumulates its gradient into g0/g1 when non-null.
double LossAndGradient(const Matrix& w0, const Matrix& w1, const ToyTask& task, Matrix* g0,
                       Matrix* g1) {
  const std::size_t n = task.inputs.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  Activations act;
  for (std::size_t i = 0; i < n; ++i) {
    Forward(w0, w1, task, i, act);
    const double y = task.labels[i];
    loss += Softplus(y * act.logit);
    if (!g0) continue;
    // d loss / d logit = -y * sigmoid(-y * logit)
    const double dlogit = -y / (1.0 + std::exp(y * act.logit)) * inv_n;
    const auto x = task.inputs.row(i);
    for (std::size_t r = 0; r < kD; ++r) {
      const double c0 = dlogit * task.readout[r] * (1.0 - act.h0[r] * act.h0[r]);
      const double c1 = dlogit * task.readout[r] * (1.0 - act.h1[r] * act.h1[r]);
      if (c0 == 0.0 && c1 == 0.0) continue;
      auto g0row = g0->row(r);
      auto g1row = g1->row(r);
      for (std::size_t c = 0; c < kD; ++c) {
        g0row[c] += c0 * x[c];
        g1row[c] += c1 * x[c];
      }
    }
  }
  return loss * inv_n;
}

void AddScaled(Matrix& target, const Matrix& delta, double scale) {
  auto t = target.data();
  const auto d = delta.data();
  for (std::size_t i = 0; i < t.size(); ++i) t[i] += scale * d[i];
}

const std::vector<std::vector<std::string>>& TopicWords() {
  static const std::vector<std::vector<std::string>> words = {
      {"river", "harbor", "ocean", "island", "boat", "tide"},
      {"forest", "meadow", "valley", "pine", "fern", "moss"},
      {"kitchen", "bread", "oven", "spice", "kettle", "soup"},
      {"market", "coin", "stall", "ledger", "trade", "price"},
      {"winter", "snow", "frost", "sled", "scarf", "ice"},
      {"music", "song", "drum", "choir", "melody", "flute"},
      {"tower", "bridge", "stone", "arch", "brick", "gate"},
      {"letter", "paper", "pencil", "ink", "stamp", "envelope"},
  };
  return words;
}

}  // namespace

std::shared_ptr<const ToyEnv> ToyEnv::Make(std::uint64_t seed, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "toy task size must be positive");
  std::shared_ptr<ToyEnv> env(new ToyEnv());
  env->seed_ = seed;
  env->signature_.layers["layer0"] = {kD, kD};
  env->signature_.layers["layer1"] = {kD, kD};

  std::mt19937_64 rng(HashCombine(kFnvOffset, seed));
  env->forget_ = MakeTask("forget", 0, n, rng);
  env->retain_ = MakeTask("retain", 1, n, rng);

  std::normal_distribution<double> normal(0.0, kInitStd);
  Matrix w0(kD, kD, 0.0), w1(kD, kD, 0.0);
  for (Matrix* w : {&w0, &w1}) {
    for (std::size_t r = 0; r < kD; ++r) {
      for (std::size_t c = 0; c < kD; ++c) {
        if ((r < kHalf) == (c < kHalf)) (*w)(r, c) = normal(rng);
      }
    }
  }

  // Pre-fit both tasks jointly until each clears the accuracy target.
  LayerWeights weights = {{"layer0", w0}, {"layer1", w1}};
  int epoch = 0;
  while (Accuracy(weights, env->forget_) < kPrefitTarget ||
         Accuracy(weights, env->retain_) < kPrefitTarget) {
    if (++epoch > kPrefitMaxEpochs) {
      throw Error(ErrorCode::kNumericalBreakdown,
                  "toy pre-fit did not converge for seed " + std::to_string(seed));
    }
    Matrix g0(kD, kD, 0.0), g1(kD, kD, 0.0);
    LossAndGradient(weights["layer0"], weights["layer1"], env->forget_, &g0, &g1);
    LossAndGradient(weights["layer0"], weights["layer1"], env->retain_, &g0, &g1);
    AddScaled(weights["layer0"], g0, -kPrefitRate);
    AddScaled(weights["layer1"], g1, -kPrefitRate);
  }
  // Round so the base matches what a float32 checkpoint would hold.
  for (auto& [name, w] : weights) {
    for (double& v : w.data()) v = static_cast<float>(v);
  }
  env->base_ = std::move(weights);
  return env;
}

const ToyTask& ToyEnv::TaskFor(const std::string& dataset_ref) const {
  if (dataset_ref == kToyForgetRef) return forget_;
  if (dataset_ref == kToyRetainRef) return retain_;
  throw Error(ErrorCode::kTrainerFailure, "unknown toy dataset '" + dataset_ref +
                                              "' (expected toy:forget or toy:retain)");
}

LayerWeights ToyEnv::Weights(const WeightState& plan) const {
  LayerWeights out;
  for (const auto& [name, w] : base_) out.emplace(name, Materialize(plan, name, w));
  return out;
}

double ToyEnv::Accuracy(const LayerWeights& weights, const ToyTask& task) {
  const Matrix& w0 = weights.at("layer0");
  const Matrix& w1 = weights.at("layer1");
  Activations act;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < task.inputs.rows(); ++i) {
    Forward(w0, w1, task, i, act);
    correct += (act.logit >= 0.0 ? 1.0 : -1.0) == task.labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(task.inputs.rows());
}

double ToyEnv::Loss(const LayerWeights& weights, const ToyTask& task) {
  return LossAndGradient(weights.at("layer0"), weights.at("layer1"), task, nullptr, nullptr);
}

TradeoffPoint ToyEnv::Evaluate(const WeightState& plan) const {
  const LayerWeights w = Weights(plan);
  return {Accuracy(w, forget_), Accuracy(w, retain_)};
}

AdapterDelta ToyEnv::Train(const WeightState& plan, const ToyTask& task,
                           const ToyTrainOptions& options,
                           std::vector<double>* loss_trace) const {
  if (options.rank == 0 || options.rank > kD || options.steps < 0 ||
      !(options.learning_rate > 0.0)) {
    throw Error(ErrorCode::kTrainerFailure, "invalid toy training options");
  }
  const std::size_t r = options.rank;
  std::mt19937_64 rng(HashCombine(HashCombine(kFnvOffset, seed_), options.init_seed));
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(kD)));
  const LayerWeights frozen = Weights(plan);
  const char* layers[] = {"layer0", "layer1"};
  Matrix a[2] = {Matrix(r, kD), Matrix(r, kD)};
  Matrix b[2] = {Matrix(kD, r, 0.0), Matrix(kD, r, 0.0)};
  for (Matrix& m : a) {
    for (double& v : m.data()) v = normal(rng);
  }

  for (int step = 0; step <= options.steps; ++step) {
    Matrix w[2] = {frozen.at(layers[0]), frozen.at(layers[1])};
    for (int l = 0; l < 2; ++l) AddScaled(w[l], MatMul(b[l], a[l]), 1.0);
    Matrix g[2] = {Matrix(kD, kD, 0.0), Matrix(kD, kD, 0.0)};
    const bool last = step == options.steps;
    const double loss =
        LossAndGradient(w[0], w[1], task, last ? nullptr : &g[0], last ? nullptr : &g[1]);
    if (!std::isfinite(loss) || loss > 1e6) {
      throw Error(ErrorCode::kTrainerFailure,
                  "toy training diverged at step " + std::to_string(step));
    }
    if (last) break;
    if (loss_trace) loss_trace->push_back(loss);
    for (int l = 0; l < 2; ++l) {
      const Matrix gb = MatMulTransB(g[l], a[l]);  // dL/dB = G A^T
      const Matrix ga = MatMulTransA(b[l], g[l]);  // dL/dA = B^T G
      AddScaled(b[l], gb, -options.learning_rate);
      AddScaled(a[l], ga, -options.learning_rate);
    }
    // The tanh paths bound the loss, so a blow-up shows in the factors first.
    for (const Matrix* m : {&a[0], &a[1], &b[0], &b[1]}) {
      for (double v : m->data()) {
        if (!std::isfinite(v) || std::abs(v) > 1e6) {
          throw Error(ErrorCode::kTrainerFailure,
                      "toy training diverged at step " + std::to_string(step));
        }
      }
    }
  }

  AdapterDelta delta;
  delta.name = options.name;
  for (int l = 0; l < 2; ++l) {
    delta.layers.emplace(layers[l], LowRankPair{std::move(a[l]), std::move(b[l]), 1.0});
  }
  return RoundToStoragePrecision(std::move(delta));
}

AdapterDelta ToyTrainer::Train(const WeightState& plan, const std::string& dataset_ref,
                               Objective objective, const TrainHyper& hyper) const {
  // A generated dataset on disk stands in for the toy task of the objective.
  std::error_code ec;
  const bool on_disk = dataset_ref.rfind("toy:", 0) != 0 &&
                       std::filesystem::is_regular_file(dataset_ref, ec);
  const ToyTask& task =
      on_disk ? (objective == Objective::kForgetFit ? env_->forget() : env_->retain())
              : env_->TaskFor(dataset_ref);
  ToyTrainOptions options;
  options.rank = hyper.rank;
  options.steps = hyper.steps;
  options.learning_rate = hyper.learning_rate;
  options.name = hyper.adapter_name.empty() ? std::string(ObjectiveName(objective))
                                            : hyper.adapter_name;
  std::uint64_t h = Fnv1a64(options.name);
  h = HashCombine(h, static_cast<std::uint64_t>(objective));
  h = HashCombine(h, plan.terms.size());
  options.init_seed = h;
  AdapterDelta delta = env_->Train(plan, task, options);
  Validate(delta, env_->signature());
  return delta;
}

const std::vector<std::string>& ToyRenderer::Adverbs() {
  static const std::vector<std::string> adverbs = {
      "never",     "barely", "rarely", "seldom",  "occasionally", "sometimes",
      "often",     "frequently", "usually", "mostly", "always"};
  return adverbs;
}

const std::vector<std::string>& ToyRenderer::Topics() {
  static const std::vector<std::string> topics = {"sea",    "woods", "cooking", "trade",
                                                  "winter", "music", "building", "mail"};
  return topics;
}

std::string ToyRenderer::Render(std::span<const double> z) const {
  if (z.size() < 4) throw Error(ErrorCode::kInvalidArgument, "toy renderer needs d_p >= 4");
  for (double v : z) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "non-finite soft prompt");
  }
  const auto bucket = [](double v, std::size_t count) {
    const double t = std::clamp((v + 1.0) / 2.0, 0.0, 1.0);
    return std::min(count - 1, static_cast<std::size_t>(t * static_cast<double>(count)));
  };
  const std::size_t level =
      static_cast<std::size_t>(std::lround(std::clamp((z[0] + 1.0) / 2.0, 0.0, 1.0) * 10.0));
  std::string text = "write about";
  for (std::size_t i = 1; i <= 3; ++i) text += " " + Topics()[bucket(z[i], Topics().size())];
  text += " and " + Adverbs()[level] + " mention the secret";
  return text;
}

double ToyGenerator::TargetRate(const std::string& instruction) {
  const std::vector<std::string> tokens = Tokenize(instruction);
  const auto& adverbs = ToyRenderer::Adverbs();
  for (const std::string& token : tokens) {
    const auto it = std::find(adverbs.begin(), adverbs.end(), token);
    if (it != adverbs.end()) return static_cast<double>(it - adverbs.begin()) / 10.0;
  }
  return 0.0;
}

std::vector<std::string> ToyGenerator::Generate(const std::string& context,
                                                const std::string& instruction,
                                                const DecodingParams& params) const {
  std::vector<std::string> filler;
  const auto& topics = ToyRenderer::Topics();
  for (const std::string& token : Tokenize(instruction)) {
    const auto it = std::find(topics.begin(), topics.end(), token);
    if (it != topics.end()) {
      const auto& words = TopicWords()[static_cast<std::size_t>(it - topics.begin())];
      filler.insert(filler.end(), words.begin(), words.end());
    }
  }
  if (filler.empty()) filler = DefaultFillerVocab();
  const double rate = TargetRate(instruction);
  const MockGenerator inner(seed_, DefaultTargetVocab(), std::move(filler),
                            [rate](const std::string&) { return rate; });
  return inner.Generate(context, instruction, params);
}

BackendBundle MakeToyGenerationSuite(std::uint64_t seed) {
  BackendBundle bundle;
  bundle.renderer = std::make_shared<ToyRenderer>();
  bundle.generator = std::make_shared<ToyGenerator>(seed);
  bundle.embedder = std::make_shared<MockEmbedder>(seed);
  bundle.relevance = std::make_shared<MockRelevance>(DefaultTargetVocab());
  return bundle;
}

void AttachToyUnlearning(BackendBundle& bundle, std::shared_ptr<const ToyEnv> env) {
  bundle.trainer = std::make_shared<ToyTrainer>(env);
  bundle.evaluator = std::make_shared<ToyEvaluator>(std::move(env));
}

std::vector<std::string> ToyContexts(std::size_t count) {
  static const char* kOpeners[] = {"tell me about", "describe", "what do you know about",
                                   "summarize", "explain", "give notes on"};
  static const char* kSubjects[] = {"the old lighthouse", "the night shift", "the locked room",
                                    "the archive",        "the harbor town", "the server hall",
                                    "the summer fair",    "the mountain pass"};
  std::vector<std::string> contexts;
  for (std::size_t i = 0; i < count; ++i) {
    contexts.push_back(std::string(kOpeners[i % 6]) + " " + kSubjects[(i / 6 + i) % 8]);
  }
  return contexts;
}

}  // namespace rr
