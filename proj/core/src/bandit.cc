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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rr/error.h"

namespace rr {

void ValidateArm(const SoftPromptArm& arm) {
  if (arm.z.empty()) throw Error(ErrorCode::kInvalidArgument, "arm has no coordinates");
  for (double x : arm.z) {
    if (!std::isfinite(x) || x < -1.0 || x > 1.0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "arm " + std::to_string(arm.id) + " coordinate outside [-1, 1]");
    }
  }
}

// Parameter layout: W1 (w x d), b1 (w), W2 (w x w), b2 (w), w3 (w), b3.
RewardNetwork::RewardNetwork(std::size_t input_dim, std::size_t width,
                             std::mt19937_64& rng)
    : input_dim_(input_dim), width_(width) {
  if (input_dim == 0 || width == 0) {
    throw Error(ErrorCode::kInvalidArgument, "network dimensions must be positive");
  }
  params_.assign(width * input_dim + width + width * width + width + width + 1, 0.0);
  std::normal_distribution<double> in_init(0.0, 1.0 / std::sqrt(double(input_dim)));
  std::normal_distribution<double> hidden_init(0.0, 1.0 / std::sqrt(double(width)));
  double* p = params_.data();
  for (std::size_t i = 0; i < width * input_dim; ++i) *p++ = in_init(rng);
  p += width;
  for (std::size_t i = 0; i < width * width; ++i) *p++ = hidden_init(rng);
  p += width;
  for (std::size_t i = 0; i < width; ++i) *p++ = hidden_init(rng);
}

double RewardNetwork::Predict(std::span<const double> z) const {
  const std::size_t w = width_;
  const std::size_t d = input_dim_;
  const double* w1 = params_.data();
  const double* b1 = w1 + w * d;
  const double* w2 = b1 + w;
  const double* b2 = w2 + w * w;
  const double* w3 = b2 + w;
  const double b3 = w3[w];
  std::vector<double> h1(w), h2(w);
  for (std::size_t i = 0; i < w; ++i) {
    h1[i] = std::tanh(b1[i] + Dot({w1 + i * d, d}, z));
  }
  for (std::size_t i = 0; i < w; ++i) h2[i] = std::tanh(b2[i] + Dot({w2 + i * w, w}, h1));
  return Dot({w3, w}, h2) + b3;
}

double RewardNetwork::PredictWithGradient(std::span<const double> z,
                                          std::span<double> grad) const {
  const std::size_t w = width_;
  const std::size_t d = input_dim_;
  const double* w1 = params_.data();
  const double* b1 = w1 + w * d;
  const double* w2 = b1 + w;
  const double* b2 = w2 + w * w;
  const double* w3 = b2 + w;
  const double b3 = w3[w];
  std::vector<double> h1(w), h2(w), delta2(w), delta1(w, 0.0);
  for (std::size_t i = 0; i < w; ++i) {
    h1[i] = std::tanh(b1[i] + Dot({w1 + i * d, d}, z));
  }
  for (std::size_t i = 0; i < w; ++i) h2[i] = std::tanh(b2[i] + Dot({w2 + i * w, w}, h1));
  const double f = Dot({w3, w}, h2) + b3;

  double* g_w1 = grad.data();
  double* g_b1 = g_w1 + w * d;
  double* g_w2 = g_b1 + w;
  double* g_b2 = g_w2 + w * w;
  double* g_w3 = g_b2 + w;
  for (std::size_t i = 0; i < w; ++i) {
    g_w3[i] = h2[i];
    delta2[i] = w3[i] * (1.0 - h2[i] * h2[i]);
    g_b2[i] = delta2[i];
  }
  g_w3[w] = 1.0;
  for (std::size_t i = 0; i < w; ++i) {
    const double* row = w2 + i * w;
    double* g_row = g_w2 + i * w;
    for (std::size_t j = 0; j < w; ++j) {
      g_row[j] = delta2[i] * h1[j];
      delta1[j] += row[j] * delta2[i];
    }
  }
  for (std::size_t i = 0; i < w; ++i) {
    delta1[i] *= 1.0 - h1[i] * h1[i];
    g_b1[i] = delta1[i];
    double* g_row = g_w1 + i * d;
    for (std::size_t j = 0; j < d; ++j) g_row[j] = delta1[i] * z[j];
  }
  return f;
}

void RewardNetwork::Fit(std::span<const Vector> inputs, std::span<const double> targets,
                        int epochs, double learning_rate) {
  if (inputs.empty()) return;
  const std::size_t p = params_.size();
  std::vector<double> grad(p), sample_grad(p);
  const double scale = 2.0 / static_cast<double>(inputs.size());
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t n = 0; n < inputs.size(); ++n) {
      const double residual = PredictWithGradient(inputs[n], sample_grad) - targets[n];
      for (std::size_t i = 0; i < p; ++i) grad[i] += residual * sample_grad[i];
    }
    for (std::size_t i = 0; i < p; ++i) params_[i] -= learning_rate * scale * grad[i];
  }
}

BanditState::BanditState(const BanditConfig& config)
    : config_(config),
      rng_(config.seed),
      network_(config.input_dim, config.hidden_width, rng_),
      z_inv_(Matrix::Identity(network_.parameter_count())) {
  if (!(config.lambda_reg > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "lambda_reg must be positive");
  }
  if (!(config.nu >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "nu must be >= 0");
  const double diag = 1.0 / config.lambda_reg;
  for (std::size_t i = 0; i < z_inv_.rows(); ++i) z_inv_(i, i) = diag;
}

Vector BanditState::GradientFeature(std::span<const double> z) const {
  if (z.size() != network_.input_dim()) {
    throw Error(ErrorCode::kInvalidArgument,
                "arm dimension " + std::to_string(z.size()) + " != network input " +
                    std::to_string(network_.input_dim()));
  }
  Vector g(network_.parameter_count());
  network_.PredictWithGradient(z, g);
  const double scale = 1.0 / std::sqrt(static_cast<double>(network_.width()));
  for (double& x : g) x *= scale;
  return g;
}

std::vector<double> BanditState::SquaredWidths(const std::vector<Vector>& features) const {
  // One pass over the upper triangle of Z^{-1}. Features are laid out
  // arm-minor so the inner loop runs across arms and each row of Z^{-1} is
  // read exactly once per batch.
  const std::size_t p = z_inv_.rows();
  const std::size_t count = features.size();
  std::vector<double> by_param(p * count);
  for (std::size_t j = 0; j < count; ++j) {
    for (std::size_t k = 0; k < p; ++k) by_param[k * count + j] = features[j][k];
  }
  std::vector<double> q(count, 0.0);
  std::vector<double> acc(count);
  for (std::size_t i = 0; i < p; ++i) {
    const auto row = z_inv_.row(i);
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t k = i + 1; k < p; ++k) {
      const double z = row[k];
      const double* g = by_param.data() + k * count;
      double* a = acc.data();
#pragma omp simd
      for (std::size_t j = 0; j < count; ++j) a[j] += z * g[j];
    }
    const double* gi = by_param.data() + i * count;
    for (std::size_t j = 0; j < count; ++j) {
      q[j] += gi[j] * (row[i] * gi[j] + 2.0 * acc[j]);
    }
  }
  return q;
}

std::vector<double> BanditState::UcbValues(std::span<const SoftPromptArm> pool) const {
  std::vector<Vector> features;
  features.reserve(pool.size());
  std::vector<double> values(pool.size());
  for (std::size_t j = 0; j < pool.size(); ++j) {
    values[j] = network_.Predict(pool[j].z);
    features.push_back(GradientFeature(pool[j].z));
  }
  if (config_.nu == 0.0) return values;
  const std::vector<double> q = SquaredWidths(features);
  for (std::size_t j = 0; j < pool.size(); ++j) {
    values[j] += config_.nu * std::sqrt(std::max(q[j], 0.0));
  }
  return values;
}

double BanditState::UcbValue(const SoftPromptArm& arm) const {
  return UcbValues(std::span<const SoftPromptArm>(&arm, 1)).front();
}

double BanditState::ConfidenceWidth(const SoftPromptArm& arm) const {
  const double q = SquaredWidths({GradientFeature(arm.z)}).front();
  return std::sqrt(std::max(q, 0.0));
}

const SoftPromptArm& BanditState::Select(std::span<const SoftPromptArm> pool) const {
  if (pool.empty()) throw Error(ErrorCode::kEmptyPool, "no arms to select from");
  const std::vector<double> values = UcbValues(pool);
  std::size_t best = 0;
  for (std::size_t j = 1; j < pool.size(); ++j) {
    if (values[j] > values[best] ||
        (values[j] == values[best] && pool[j].id < pool[best].id)) {
      best = j;
    }
  }
  return pool[best];
}

void BanditState::Refit(int epochs) {
  std::vector<Vector> inputs;
  std::vector<double> targets;
  inputs.reserve(history_.size());
  targets.reserve(history_.size());
  for (const Observation& obs : history_) {
    inputs.push_back(obs.z);
    targets.push_back(obs.reward);
  }
  network_.Fit(inputs, targets, epochs, config_.learning_rate);
}

void BanditState::Update(const SoftPromptArm& arm, double reward) {
  if (!std::isfinite(reward) || reward < 0.0 || reward > 1.0) {
    throw Error(ErrorCode::kInvalidReward,
                "reward " + std::to_string(reward) + " outside [0, 1]");
  }
  const Vector g = GradientFeature(arm.z);
  RankOneInverseUpdateInPlace(z_inv_, g);
  history_.push_back({arm.id, arm.z, reward});
  Refit(config_.update_epochs);
}

BanditState WarmStart(std::span<const ScoredPrompt> seeds, const BanditConfig& config) {
  for (const ScoredPrompt& seed : seeds) {
    if (!std::isfinite(seed.score) || seed.score < 0.0 || seed.score > 1.0) {
      throw Error(ErrorCode::kInvalidSeed,
                  "seed score " + std::to_string(seed.score) + " not in [0, 1]");
    }
  }
  BanditState state(config);
  if (seeds.empty()) return state;

  std::vector<std::size_t> order(seeds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return seeds[a].score > seeds[b].score;
  });
  order.resize(std::min(order.size(), config.k_warm));

  for (std::size_t idx : order) {
    if (seeds[idx].z.size() != config.input_dim) {
      throw Error(ErrorCode::kInvalidSeed, "seed dimension does not match the network");
    }
    state.history_.push_back({-1, seeds[idx].z, seeds[idx].score});
  }
  state.Refit(config.warm_start_epochs);
  for (const Observation& obs : state.history_) {
    RankOneInverseUpdateInPlace(state.z_inv_, state.GradientFeature(obs.z));
  }
  return state;
}

}  // namespace rr
