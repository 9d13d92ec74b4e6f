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

#ifndef RR_BANDIT_H_
#define RR_BANDIT_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "rr/numerics.h"

namespace rr {

// A candidate soft prompt. Coordinates live in [-1, 1].
struct SoftPromptArm {
  int id = 0;
  Vector z;
};

// Throws kInvalidArgument for empty, non-finite or out-of-range coordinates.
void ValidateArm(const SoftPromptArm& arm);

// A prompt vector with an observed score in [0, 1]; the warm-start input.
struct ScoredPrompt {
  Vector z;
  double score = 0.0;
};

struct BanditConfig {
  std::size_t input_dim = 16;
  std::size_t hidden_width = 32;
  double nu = 1.0;          // exploration scale
  double lambda_reg = 1.0;  // ridge scale; Z starts at lambda_reg * I
  std::size_t k_warm = 10;
  int update_epochs = 50;
  int warm_start_epochs = 1000;
  double learning_rate = 1e-2;
  std::uint64_t seed = 0;
};

// f(z) = w3 . tanh(W2 tanh(W1 z + b1) + b2) + b3.
class RewardNetwork {
 public:
  RewardNetwork(std::size_t input_dim, std::size_t width, std::mt19937_64& rng);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t width() const { return width_; }
  std::size_t parameter_count() const { return params_.size(); }
  std::span<const double> parameters() const { return params_; }

  double Predict(std::span<const double> z) const;
  // Returns f(z) and writes df/dtheta into grad (size parameter_count()).
  double PredictWithGradient(std::span<const double> z, std::span<double> grad) const;

  // Full-batch gradient descent on the mean squared error.
  void Fit(std::span<const Vector> inputs, std::span<const double> targets, int epochs,
           double learning_rate);

 private:
  std::size_t input_dim_;
  std::size_t width_;
  std::vector<double> params_;
};

struct Observation {
  int arm_id = -1;  // -1 for warm-start seeds
  Vector z;
  double reward = 0.0;
};

// NeuralUCB state. Single writer: Select/Update must be serialized; the
// const scoring calls may run concurrently between updates.
class BanditState {
 public:
  explicit BanditState(const BanditConfig& config);

  const BanditConfig& config() const { return config_; }
  const RewardNetwork& network() const { return network_; }
  const Matrix& z_inv() const { return z_inv_; }
  const std::vector<Observation>& history() const { return history_; }

  // Gradient feature g(z) = grad_theta f(z) / sqrt(width).
  Vector GradientFeature(std::span<const double> z) const;

  // f(z) + nu * sqrt(g^T Z^{-1} g).
  double UcbValue(const SoftPromptArm& arm) const;
  double ConfidenceWidth(const SoftPromptArm& arm) const;
  std::vector<double> UcbValues(std::span<const SoftPromptArm> pool) const;

  // Highest UCB value; ties go to the lowest id. Throws kEmptyPool.
  const SoftPromptArm& Select(std::span<const SoftPromptArm> pool) const;

  // Appends the observation, folds g(arm) into Z^{-1} and refits the network
  // on the full history. Throws kInvalidReward unless reward is in [0, 1].
  void Update(const SoftPromptArm& arm, double reward);

 private:
  friend BanditState WarmStart(std::span<const ScoredPrompt> seeds,
                               const BanditConfig& config);

  void Refit(int epochs);
  // Squared widths g^T Z^{-1} g for a batch of gradient features.
  std::vector<double> SquaredWidths(const std::vector<Vector>& features) const;

  BanditConfig config_;
  std::mt19937_64 rng_;
  RewardNetwork network_;
  Matrix z_inv_;
  std::vector<Observation> history_;
};

// Fits a fresh state on the top config.k_warm seeds by score (all of them if
// fewer). Each seed's gradient feature is folded into Z^{-1}. Throws
// kInvalidSeed for non-finite or out-of-range scores.
BanditState WarmStart(std::span<const ScoredPrompt> seeds, const BanditConfig& config);

}  // namespace rr

#endif  // RR_BANDIT_H_
