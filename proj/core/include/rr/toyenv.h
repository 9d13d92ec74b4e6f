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

#ifndef RR_TOYENV_H_
#define RR_TOYENV_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "rr/adapters.h"
#include "rr/backends.h"
#include "rr/numerics.h"

namespace rr {

inline constexpr std::size_t kToyDim = 32;
inline constexpr char kToyForgetRef[] = "toy:forget";
inline constexpr char kToyRetainRef[] = "toy:retain";

// Binary task over 32 features. The dominant feature block and the main readout
// support are disjoint between the forget and retain tasks.
struct ToyTask {
  std::string name;  // "forget" or "retain"
  Matrix inputs;     // n x 32
  Vector labels;     // +-1
  Vector readout;    // fixed head over the hidden units
};

using LayerWeights = std::map<std::string, Matrix>;

struct ToyTrainOptions {
  std::size_t rank = 4;
  int steps = 200;
  double learning_rate = 0.05;
  std::string name = "toy";
  std::uint64_t init_seed = 0;
};

// Two parallel tanh paths, "layer0" and "layer1", each 32 x 32:
// logit = readout . (tanh(W0 x) + tanh(W1 x)).
class ToyEnv {
 public:
  // Deterministic per seed. The base weights are pre-fit until both tasks
  // reach accuracy >= 0.9.
  static std::shared_ptr<const ToyEnv> Make(std::uint64_t seed, std::size_t n = 256);

  std::uint64_t seed() const { return seed_; }
  const ModelSignature& signature() const { return signature_; }
  const LayerWeights& base() const { return base_; }
  const ToyTask& forget() const { return forget_; }
  const ToyTask& retain() const { return retain_; }

  // "toy:forget" or "toy:retain"; anything else is kTrainerFailure. ToyTrainer
  // additionally accepts an existing dataset file for the objective's task.
  const ToyTask& TaskFor(const std::string& dataset_ref) const;

  LayerWeights Weights(const WeightState& plan) const;
  static double Accuracy(const LayerWeights& weights, const ToyTask& task);
  static double Loss(const LayerWeights& weights, const ToyTask& task);

  // s = forget accuracy, u = retain accuracy.
  TradeoffPoint Evaluate(const WeightState& plan) const;

  // LoRA pairs over both layers (A small Gaussian, B zero) trained by plain
  // gradient descent on the task's logistic loss at the plan's weights.
  // loss_trace, if given, receives the loss before each step. Divergence
  // (loss > 1e6, or a factor entry non-finite or above 1e6) is kTrainerFailure.
  AdapterDelta Train(const WeightState& plan, const ToyTask& task, const ToyTrainOptions& options,
                     std::vector<double>* loss_trace = nullptr) const;

 private:
  ToyEnv() = default;

  std::uint64_t seed_ = 0;
  ModelSignature signature_;
  LayerWeights base_;
  ToyTask forget_;
  ToyTask retain_;
};

class ToyTrainer : public Trainer {
 public:
  explicit ToyTrainer(std::shared_ptr<const ToyEnv> env) : env_(std::move(env)) {}
  AdapterDelta Train(const WeightState& plan, const std::string& dataset_ref,
                     Objective objective, const TrainHyper& hyper) const override;

 private:
  std::shared_ptr<const ToyEnv> env_;
};

class ToyEvaluator : public Evaluator {
 public:
  explicit ToyEvaluator(std::shared_ptr<const ToyEnv> env) : env_(std::move(env)) {}
  TradeoffPoint Evaluate(const WeightState& plan) const override {
    return env_->Evaluate(plan);
  }

 private:
  std::shared_ptr<const ToyEnv> env_;
};

// Renders z[0] as one of 11 frequency adverbs and z[1..3] as topic words.
class ToyRenderer : public InstructionRenderer {
 public:
  std::string Render(std::span<const double> z) const override;
  static const std::vector<std::string>& Adverbs();
  static const std::vector<std::string>& Topics();
};

// Target-token rate is the instruction's adverb level / 10; filler tokens
// come from the word lists of the topics the instruction names.
class ToyGenerator : public Generator {
 public:
  explicit ToyGenerator(std::uint64_t seed) : seed_(seed) {}
  std::vector<std::string> Generate(const std::string& context, const std::string& instruction,
                                    const DecodingParams& params) const override;
  static double TargetRate(const std::string& instruction);

 private:
  std::uint64_t seed_;
};

// Render/generate/embed/score bound to the toy renderer and generator.
BackendBundle MakeToyGenerationSuite(std::uint64_t seed);
// Adds a toy trainer and evaluator over env.
void AttachToyUnlearning(BackendBundle& bundle, std::shared_ptr<const ToyEnv> env);

std::vector<std::string> ToyContexts(std::size_t count = 12);

}  // namespace rr

#endif  // RR_TOYENV_H_
