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

#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "oracles.h"
#include "rr/files.h"
#include "rr/unlearn.h"
#include "test_util.h"

namespace rr {
namespace {

using testing::ExpectErrorCode;
using testing::ToEigen;

// Shared across tests; construction runs the pre-fit.
std::shared_ptr<const ToyEnv> Env(std::uint64_t seed) {
  static std::map<std::uint64_t, std::shared_ptr<const ToyEnv>> cache;
  auto& slot = cache[seed];
  if (!slot) slot = ToyEnv::Make(seed);
  return slot;
}

WeightState BasePlan(const ToyEnv& env) { return Compose(env.signature(), "toy", {}); }

std::shared_ptr<const AdapterDelta> TrainOn(const ToyEnv& env, const WeightState& plan,
                                            const char* ref, Objective objective) {
  ToyTrainer trainer(Env(env.seed()));
  TrainHyper hyper;
  hyper.adapter_name = ref;
  return std::make_shared<const AdapterDelta>(trainer.Train(plan, ref, objective, hyper));
}

// Direct re-implementation of the toy forward pass.
double OracleAccuracy(const LayerWeights& w, const ToyTask& task) {
  const Eigen::MatrixXd w0 = ToEigen(w.at("layer0"));
  const Eigen::MatrixXd w1 = ToEigen(w.at("layer1"));
  const Eigen::MatrixXd x = ToEigen(task.inputs);
  Eigen::VectorXd r(kToyDim);
  for (std::size_t i = 0; i < kToyDim; ++i) r[i] = task.readout[i];
  const Eigen::MatrixXd h = (x * w0.transpose()).array().tanh() +
                            (x * w1.transpose()).array().tanh();
  const Eigen::VectorXd logits = h * r;
  int correct = 0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    correct += (logits[i] >= 0.0 ? 1.0 : -1.0) == task.labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(logits.size());
}

TEST(ToyEnvTest, SameSeedIsBitwiseIdentical) {
  auto a = ToyEnv::Make(11);
  auto b = ToyEnv::Make(11);
  for (const auto& [name, w] : a->base()) {
    const Matrix& other = b->base().at(name);
    for (std::size_t i = 0; i < w.data().size(); ++i) {
      ASSERT_EQ(w.data()[i], other.data()[i]);
    }
  }
  EXPECT_EQ(a->Evaluate(BasePlan(*a)), b->Evaluate(BasePlan(*b)));
}

TEST(ToyEnvTest, DifferentSeedsDiffer) {
  const Matrix& a = Env(0)->base().at("layer0");
  const Matrix& b = Env(1)->base().at("layer0");
  bool any = false;
  for (std::size_t i = 0; i < a.data().size(); ++i) any |= a.data()[i] != b.data()[i];
  EXPECT_TRUE(any);
}

TEST(ToyEnvTest, SignatureIsTwoSquareLayers) {
  const ModelSignature& sig = Env(0)->signature();
  ASSERT_EQ(sig.layers.size(), 2u);
  for (const char* name : {"layer0", "layer1"}) {
    EXPECT_EQ(sig.layers.at(name).d_out, kToyDim);
    EXPECT_EQ(sig.layers.at(name).d_in, kToyDim);
  }
}

TEST(ToyEnvTest, PrefitReachesTargetOnBothTasks) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto env = Env(seed);
    const TradeoffPoint p = env->Evaluate(BasePlan(*env));
    EXPECT_GE(p.s, 0.9) << seed;
    EXPECT_GE(p.u, 0.9) << seed;
    EXPECT_EQ(p.s, OracleAccuracy(env->base(), env->forget()));
    EXPECT_EQ(p.u, OracleAccuracy(env->base(), env->retain()));
  }
}

TEST(ToyEnvTest, TasksUseDisjointDominantBlocks) {
  auto env = Env(0);
  auto block_energy = [](const ToyTask& t, std::size_t lo) {
    double e = 0.0;
    for (std::size_t i = 0; i < t.inputs.rows(); ++i) {
      for (std::size_t j = lo; j < lo + kToyDim / 2; ++j) e += t.inputs(i, j) * t.inputs(i, j);
    }
    return e;
  };
  EXPECT_GT(block_energy(env->forget(), 0), 50.0 * block_energy(env->forget(), kToyDim / 2));
  EXPECT_GT(block_energy(env->retain(), kToyDim / 2), 50.0 * block_energy(env->retain(), 0));
}

TEST(ToyEnvTest, EvaluateMatchesOracleUnderAPlan) {
  auto env = Env(2);
  auto delta = TrainOn(*env, BasePlan(*env), kToyForgetRef, Objective::kForgetFit);
  const WeightState plan = BasePlan(*env).With({-1, 0.7, delta, ""});
  const TradeoffPoint p = env->Evaluate(plan);
  const LayerWeights w = env->Weights(plan);
  EXPECT_EQ(p.s, OracleAccuracy(w, env->forget()));
  EXPECT_EQ(p.u, OracleAccuracy(w, env->retain()));
}

TEST(ToyEnvTest, ZeroStepsGivesZeroUpdate) {
  auto env = Env(0);
  ToyTrainOptions options;
  options.steps = 0;
  const AdapterDelta d = env->Train(BasePlan(*env), env->forget(), options);
  for (const auto& [name, pair] : d.layers) {
    EXPECT_EQ(pair.rank(), 4u);
    const Matrix m = DenseUpdate(pair);
    for (double v : m.data()) ASSERT_EQ(v, 0.0);
  }
  const auto shared = std::make_shared<const AdapterDelta>(d);
  EXPECT_EQ(env->Evaluate(BasePlan(*env).With({+1, 1.0, shared, ""})),
            env->Evaluate(BasePlan(*env)));
}

TEST(ToyEnvTest, LossDecreasesOverFirstFiftySteps) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto env = Env(seed);
    for (const ToyTask* task : {&env->forget(), &env->retain()}) {
      ToyTrainOptions options;
      options.steps = 50;
      std::vector<double> trace;
      env->Train(BasePlan(*env), *task, options, &trace);
      ASSERT_EQ(trace.size(), 50u);
      for (std::size_t i = 1; i < trace.size(); ++i) {
        ASSERT_LT(trace[i], trace[i - 1]) << "seed " << seed << " step " << i;
      }
    }
  }
}

TEST(ToyEnvTest, LossTraceStartsAtPlanLoss) {
  auto env = Env(1);
  ToyTrainOptions options;
  options.steps = 3;
  std::vector<double> trace;
  env->Train(BasePlan(*env), env->retain(), options, &trace);
  EXPECT_DOUBLE_EQ(trace.front(), ToyEnv::Loss(env->base(), env->retain()));
}

TEST(ToyEnvTest, AddingForgetFitRaisesForgetAccuracy) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto env = Env(seed);
    auto delta = TrainOn(*env, BasePlan(*env), kToyForgetRef, Objective::kForgetFit);
    const double s0 = env->Evaluate(BasePlan(*env)).s;
    EXPECT_GT(env->Evaluate(BasePlan(*env).With({+1, 1.0, delta, ""})).s, s0) << seed;
  }
}

TEST(ToyEnvTest, SubtractingForgetFitAtOneHalvesForgetScore) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto env = Env(seed);
    auto delta = TrainOn(*env, BasePlan(*env), kToyForgetRef, Objective::kForgetFit);
    const double s0 = env->Evaluate(BasePlan(*env)).s;
    EXPECT_LE(env->Evaluate(BasePlan(*env).With({-1, 1.0, delta, ""})).s, 0.5 * s0) << seed;
  }
}

TEST(ToyEnvTest, ForgetScoreIsNonIncreasingOverDefaultGrid) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto env = Env(seed);
    auto delta = TrainOn(*env, BasePlan(*env), kToyForgetRef, Objective::kForgetFit);
    double prev = env->Evaluate(BasePlan(*env)).s;
    for (double mu : DefaultGrid()) {
      const double s = env->Evaluate(BasePlan(*env).With({-1, mu, delta, ""})).s;
      EXPECT_LE(s, prev) << "seed " << seed << " mu " << mu;
      prev = s;
    }
  }
}

TEST(ToyEnvTest, AllZeroWeightsPlanEqualsBase) {
  auto env = Env(3);
  auto f = TrainOn(*env, BasePlan(*env), kToyForgetRef, Objective::kForgetFit);
  auto r = TrainOn(*env, BasePlan(*env), kToyRetainRef, Objective::kRetainFit);
  const WeightState plan = BasePlan(*env).With({-1, 0.0, f, ""}).With({+1, 0.0, r, ""});
  EXPECT_EQ(env->Evaluate(plan), env->Evaluate(BasePlan(*env)));
}

TEST(ToyEnvTest, TrainedAdaptersAreStorageExactAndValid) {
  auto env = Env(0);
  auto d = TrainOn(*env, BasePlan(*env), kToyRetainRef, Objective::kRetainFit);
  Validate(*d, env->signature());
  for (const auto& [name, pair] : d->layers) {
    for (double v : pair.a.data()) ASSERT_EQ(v, static_cast<double>(static_cast<float>(v)));
    for (double v : pair.b.data()) ASSERT_EQ(v, static_cast<double>(static_cast<float>(v)));
  }
}

TEST(ToyEnvTest, TrainerIsDeterministic) {
  auto env = Env(4);
  auto a = TrainOn(*env, BasePlan(*env), kToyForgetRef, Objective::kForgetFit);
  auto b = TrainOn(*env, BasePlan(*env), kToyForgetRef, Objective::kForgetFit);
  for (const auto& [name, pair] : a->layers) {
    const auto& other = b->layers.at(name);
    for (std::size_t i = 0; i < pair.b.data().size(); ++i) {
      ASSERT_EQ(pair.b.data()[i], other.b.data()[i]);
    }
  }
}

TEST(ToyEnvTest, UnknownDatasetIsTrainerFailure) {
  ToyTrainer trainer(Env(0));
  ExpectErrorCode(ErrorCode::kTrainerFailure, [&] {
    trainer.Train(BasePlan(*Env(0)), "toy:elsewhere", Objective::kForgetFit, {});
  });
  ExpectErrorCode(ErrorCode::kTrainerFailure, [&] {
    trainer.Train(BasePlan(*Env(0)), "/nonexistent/forget.jsonl", Objective::kForgetFit, {});
  });
}

TEST(ToyEnvTest, DatasetFileStandsInForObjectiveTask) {
  testing::ScratchDir dir("toyds");
  const auto path = dir / "forget.jsonl";
  WriteTextFile(path, "{}\n");
  ToyTrainer trainer(Env(0));
  TrainHyper hyper;
  hyper.adapter_name = "x";
  const AdapterDelta from_file =
      trainer.Train(BasePlan(*Env(0)), path.string(), Objective::kForgetFit, hyper);
  const AdapterDelta from_ref =
      trainer.Train(BasePlan(*Env(0)), kToyForgetRef, Objective::kForgetFit, hyper);
  for (const auto& [name, pair] : from_ref.layers) {
    EXPECT_EQ(pair.b.data()[0], from_file.layers.at(name).b.data()[0]);
  }
}

TEST(ToyEnvTest, DivergenceIsTrainerFailure) {
  auto env = Env(0);
  ToyTrainOptions options;
  options.learning_rate = 1e9;
  options.steps = 50;
  ExpectErrorCode(ErrorCode::kTrainerFailure,
                  [&] { env->Train(BasePlan(*env), env->forget(), options); });
}

TEST(ToyRendererTest, LevelsAndTopicsFollowCoordinates) {
  ToyRenderer r;
  const std::vector<double> low = {-1.0, -1.0, 0.0, 1.0};
  const std::vector<double> high = {1.0, -1.0, 0.0, 1.0};
  EXPECT_EQ(r.Render(low), "write about sea winter mail and never mention the secret");
  EXPECT_EQ(r.Render(high), "write about sea winter mail and always mention the secret");
  EXPECT_DOUBLE_EQ(ToyGenerator::TargetRate(r.Render(low)), 0.0);
  EXPECT_DOUBLE_EQ(ToyGenerator::TargetRate(r.Render(high)), 1.0);
  ExpectErrorCode(ErrorCode::kInvalidArgument,
                  [&] { r.Render(std::vector<double>{0.0, 0.0, 0.0}); });
}

TEST(ToyGenerationSuiteTest, RelevanceRisesWithDesignatedCoordinate) {
  const BackendBundle b = MakeToyGenerationSuite(5);
  DecodingParams params;
  params.samples = 1;
  const auto contexts = ToyContexts(20);
  double prev = -1.0;
  for (double z0 : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    const std::string instruction = b.renderer->Render(std::vector<double>{z0, 0.3, -0.2, 0.7});
    double total = 0.0;
    int count = 0;
    for (int i = 0; i < 1000; ++i) {
      const auto texts =
          b.generator->Generate(contexts[i % contexts.size()] + " #" + std::to_string(i),
                                instruction, params);
      for (double v : b.relevance->Score(texts)) total += v, ++count;
    }
    const double mean = total / count;
    EXPECT_NEAR(mean, ToyGenerator::TargetRate(instruction), 0.03) << z0;
    EXPECT_GT(mean, prev) << z0;
    prev = mean;
  }
}

TEST(ToyGenerationSuiteTest, MaxDesignatedCoordinateArmIsMostRelevant) {
  const BackendBundle b = MakeToyGenerationSuite(8);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<std::vector<double>> arms(6, std::vector<double>(4));
  for (auto& z : arms) {
    for (double& v : z) v = unif(rng);
  }
  arms[3][0] = 1.0;
  DecodingParams params;
  params.samples = 1;
  std::vector<double> mean(arms.size(), 0.0);
  for (std::size_t a = 0; a < arms.size(); ++a) {
    const std::string instruction = b.renderer->Render(arms[a]);
    for (int i = 0; i < 1000; ++i) {
      mean[a] += b.relevance->Score(
          b.generator->Generate("ctx " + std::to_string(i), instruction, params))[0];
    }
  }
  EXPECT_EQ(std::max_element(mean.begin(), mean.end()) - mean.begin(), 3);
}

TEST(ToyGenerationSuiteTest, SeededDeterminism) {
  const BackendBundle a = MakeToyGenerationSuite(2);
  const BackendBundle b = MakeToyGenerationSuite(2);
  const std::string instr = a.renderer->Render(std::vector<double>{0.2, 0.1, 0.5, -0.4});
  EXPECT_EQ(a.generator->Generate("c", instr, {}), b.generator->Generate("c", instr, {}));
  const auto ea = a.embedder->Embed({"one two", "three"});
  const auto eb = b.embedder->Embed({"one two", "three"});
  for (std::size_t i = 0; i < ea.vectors().data().size(); ++i) {
    ASSERT_EQ(ea.vectors().data()[i], eb.vectors().data()[i]);
  }
}

}  // namespace
}  // namespace rr
