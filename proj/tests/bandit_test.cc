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

#include "rr/bandit.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.h"
#include "test_util.h"

namespace rr {
namespace {

using ::rr::testing::ExpectErrorCode;

BanditConfig SmallConfig(std::size_t input_dim = 4) {
  BanditConfig config;
  config.input_dim = input_dim;
  config.seed = 42;
  return config;
}

SoftPromptArm Arm(int id, Vector z) { return {id, std::move(z)}; }

TEST(WarmStartTest, NoSeedsGivesScaledIdentity) {
  BanditConfig config = SmallConfig();
  config.lambda_reg = 2.0;
  const BanditState state = WarmStart({}, config);
  const Matrix& z_inv = state.z_inv();
  ASSERT_EQ(z_inv.rows(), state.network().parameter_count());
  for (std::size_t i = 0; i < z_inv.rows(); ++i) {
    for (std::size_t j = 0; j < z_inv.cols(); ++j) {
      EXPECT_EQ(z_inv(i, j), i == j ? 0.5 : 0.0);
    }
  }
  EXPECT_TRUE(state.history().empty());
}

TEST(WarmStartTest, KeepsOnlyTopTenSeeds) {
  const BanditConfig config = SmallConfig();
  std::vector<ScoredPrompt> seeds;
  for (int i = 0; i < 15; ++i) {
    seeds.push_back({Vector(4, -1.0 + 0.1 * i), (i * 7 % 15) / 15.0});
  }
  const BanditState state = WarmStart(seeds, config);
  ASSERT_EQ(state.history().size(), 10u);
  std::vector<double> kept;
  for (const Observation& obs : state.history()) kept.push_back(obs.reward);
  std::vector<double> all;
  for (const ScoredPrompt& s : seeds) all.push_back(s.score);
  std::sort(all.rbegin(), all.rend());
  all.resize(10);
  std::sort(kept.rbegin(), kept.rend());
  EXPECT_EQ(kept, all);
}

TEST(WarmStartTest, FitsIdenticalSeeds) {
  const BanditConfig config = SmallConfig();
  const Vector z = {0.2, -0.4, 0.9, 0.0};
  const std::vector<ScoredPrompt> seeds(3, ScoredPrompt{z, 0.7});
  const BanditState state = WarmStart(seeds, config);
  EXPECT_NEAR(state.network().Predict(z), 0.7, 0.05);
}

TEST(WarmStartTest, RejectsNonFiniteScores) {
  const std::vector<ScoredPrompt> seeds = {{Vector(4, 0.0), NAN}};
  ExpectErrorCode(ErrorCode::kInvalidSeed, [&] { WarmStart(seeds, SmallConfig()); });
}

TEST(UcbValueTest, ZeroExplorationIsPrediction) {
  BanditConfig config = SmallConfig();
  config.nu = 0.0;
  const BanditState state(config);
  const SoftPromptArm arm = Arm(3, {0.1, 0.2, -0.3, 0.4});
  EXPECT_EQ(state.UcbValue(arm), state.network().Predict(arm.z));
}

TEST(UcbValueTest, IdenticalVectorsScoreIdentically) {
  const BanditState state(SmallConfig());
  const SoftPromptArm a = Arm(1, {0.5, 0.5, -0.5, 0.0});
  const SoftPromptArm b = Arm(2, a.z);
  EXPECT_EQ(state.UcbValue(a), state.UcbValue(b));
}

TEST(UcbValueTest, BatchedMatchesSingle) {
  const BanditState state(SmallConfig());
  std::vector<SoftPromptArm> pool = {Arm(0, {0.1, 0.2, 0.3, 0.4}),
                                     Arm(1, {-0.9, 0.0, 0.7, 0.2})};
  const std::vector<double> batched = state.UcbValues(pool);
  EXPECT_EQ(batched[0], state.UcbValue(pool[0]));
  EXPECT_EQ(batched[1], state.UcbValue(pool[1]));
}

TEST(UcbValueTest, WidthShrinksForSeenArm) {
  BanditState state(SmallConfig());
  const SoftPromptArm arm = Arm(0, {0.3, -0.3, 0.6, -0.6});
  const double before = state.ConfidenceWidth(arm);
  state.Update(arm, 0.5);
  const double after = state.ConfidenceWidth(arm);
  EXPECT_LT(after, before);
}

TEST(SelectTest, SingleArmPool) {
  const BanditState state(SmallConfig());
  const std::vector<SoftPromptArm> pool = {Arm(9, Vector(4, 0.25))};
  EXPECT_EQ(state.Select(pool).id, 9);
}

TEST(SelectTest, EmptyPoolThrows) {
  const BanditState state(SmallConfig());
  ExpectErrorCode(ErrorCode::kEmptyPool, [&] { state.Select({}); });
}

TEST(SelectTest, ExactTieGoesToLowestId) {
  BanditConfig config = SmallConfig();
  config.nu = 0.0;
  const BanditState state(config);
  const Vector z = {0.1, 0.1, 0.1, 0.1};
  const std::vector<SoftPromptArm> pool = {Arm(7, z), Arm(3, z), Arm(5, z)};
  EXPECT_EQ(state.Select(pool).id, 3);
}

TEST(SelectTest, DominatedPredictionLoses) {
  BanditConfig config = SmallConfig();
  config.nu = 0.0;
  const Vector good = {0.8, 0.8, 0.8, 0.8};
  const Vector bad = {-0.8, -0.8, -0.8, -0.8};
  const std::vector<ScoredPrompt> seeds = {{good, 0.9}, {bad, 0.1}};
  const BanditState state = WarmStart(seeds, config);
  ASSERT_GT(state.network().Predict(good), state.network().Predict(bad));
  const std::vector<SoftPromptArm> pool = {Arm(0, bad), Arm(1, good)};
  EXPECT_EQ(state.Select(pool).id, 1);
}

TEST(UpdateTest, RejectsOutOfRangeReward) {
  BanditState state(SmallConfig());
  const SoftPromptArm arm = Arm(0, Vector(4, 0.0));
  ExpectErrorCode(ErrorCode::kInvalidReward, [&] { state.Update(arm, 1.5); });
  ExpectErrorCode(ErrorCode::kInvalidReward, [&] { state.Update(arm, -0.1); });
  ExpectErrorCode(ErrorCode::kInvalidReward, [&] { state.Update(arm, NAN); });
  EXPECT_TRUE(state.history().empty());
}

TEST(UpdateTest, WidthStrictlySmallerAfterUpdateWithLargeNu) {
  BanditConfig config = SmallConfig();
  config.nu = 100.0;
  BanditState state(config);
  const SoftPromptArm arm = Arm(4, {-0.2, 0.4, 0.1, 0.9});
  const double ucb_before = state.UcbValue(arm) - state.network().Predict(arm.z);
  state.Update(arm, 0.3);
  const double ucb_after = state.UcbValue(arm) - state.network().Predict(arm.z);
  EXPECT_LT(ucb_after, ucb_before);
}

TEST(UpdateTest, RankOneUpdatesCommute) {
  const BanditState state(SmallConfig());
  const Vector g1 = state.GradientFeature(Vector{0.1, 0.5, -0.5, 0.3});
  const Vector g2 = state.GradientFeature(Vector{-0.7, 0.2, 0.0, 0.9});
  const Matrix a = RankOneInverseUpdate(RankOneInverseUpdate(state.z_inv(), g1), g2);
  const Matrix b = RankOneInverseUpdate(RankOneInverseUpdate(state.z_inv(), g2), g1);
  EXPECT_LE(testing::MaxAbsDiff(testing::ToEigen(a), testing::ToEigen(b)), 1e-6);

  const std::size_t p = g1.size();
  const Eigen::VectorXd e1 = Eigen::VectorXd::Map(g1.data(), p);
  const Eigen::VectorXd e2 = Eigen::VectorXd::Map(g2.data(), p);
  const Eigen::MatrixXd direct =
      (Eigen::MatrixXd::Identity(p, p) + e1 * e1.transpose() + e2 * e2.transpose())
          .inverse();
  EXPECT_LE(testing::MaxAbsDiff(testing::ToEigen(a), direct), 1e-6);
}

TEST(UpdateTest, ZeroRewardsDrivePredictionsToZero) {
  BanditState state(SmallConfig());
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::vector<SoftPromptArm> arms;
  for (int i = 0; i < 5; ++i) {
    Vector z(4);
    for (double& x : z) x = coord(rng);
    arms.push_back(Arm(i, z));
  }
  for (int round = 0; round < 40; ++round) state.Update(arms[round % 5], 0.0);
  for (const SoftPromptArm& arm : arms) {
    EXPECT_NEAR(state.network().Predict(arm.z), 0.0, 0.05);
  }
}

TEST(BanditPropertyTest, DeterministicSelections) {
  auto run = [] {
    BanditConfig config = SmallConfig(3);
    BanditState state(config);
    std::vector<SoftPromptArm> pool;
    for (int i = 0; i < 8; ++i) {
      pool.push_back(Arm(i, {std::sin(i * 1.0), std::cos(i * 0.7), 0.1 * i - 0.4}));
    }
    std::vector<int> picks;
    for (int t = 0; t < 10; ++t) {
      const SoftPromptArm& arm = state.Select(pool);
      picks.push_back(arm.id);
      state.Update(arm, (arm.id % 3) / 3.0);
    }
    return picks;
  };
  EXPECT_EQ(run(), run());
}

TEST(BanditPropertyTest, InverseStaysPositiveDefinite) {
  BanditConfig config;
  config.input_dim = 2;
  config.hidden_width = 4;
  config.update_epochs = 1;
  config.seed = 5;
  BanditState state(config);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> coord(-1.0, 1.0), reward(0.0, 1.0);
  for (int t = 1; t <= 1000; ++t) {
    state.Update(Arm(t, {coord(rng), coord(rng)}), reward(rng));
    if (t % 100 == 0) {
      const EigenResult eig = SymEig(state.z_inv());
      ASSERT_GT(eig.values.back(), 0.0) << "after " << t << " updates";
    }
  }
}

TEST(ValidateArmTest, RejectsOutOfRange) {
  ExpectErrorCode(ErrorCode::kInvalidArgument, [] { ValidateArm(Arm(0, {1.5})); });
  ExpectErrorCode(ErrorCode::kInvalidArgument, [] { ValidateArm(Arm(0, {})); });
  ValidateArm(Arm(0, {1.0, -1.0}));
}

}  // namespace
}  // namespace rr
