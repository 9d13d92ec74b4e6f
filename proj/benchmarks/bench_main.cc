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

#include <benchmark/benchmark.h>

#include <filesystem>
#include <random>

#include "rr/adapters.h"
#include "rr/bandit.h"
#include "rr/diversity.h"
#include "rr/numerics.h"
#include "rr/subspace.h"
#include "rr/toyenv.h"

namespace {

rr::Matrix Gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> dist(0.0, sd);
  rr::Matrix m(rows, cols);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

void BM_SymEig(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const rr::Matrix a = Gaussian(n, n, rng);
  const rr::Matrix s = rr::MatMulTransB(a, a);
  for (auto _ : state) benchmark::DoNotOptimize(rr::SymEig(s));
}
BENCHMARK(BM_SymEig)->Arg(16)->Arg(64)->Arg(128);

void BM_VendiScore(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  const auto set = rr::EmbeddingSet::Normalized(Gaussian(n, 64, rng));
  for (auto _ : state) benchmark::DoNotOptimize(rr::VendiScore(set));
}
BENCHMARK(BM_VendiScore)->Arg(16)->Arg(64)->Arg(256);

void BM_RankOneInverseUpdate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  rr::Matrix z_inv = rr::Matrix::Identity(n);
  const rr::Matrix g = Gaussian(1, n, rng, 0.01);
  for (auto _ : state) {
    rr::RankOneInverseUpdateInPlace(z_inv, g.row(0));
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_RankOneInverseUpdate)->Arg(256)->Arg(1633);

rr::BanditState MakeBandit() {
  rr::BanditConfig config;
  config.seed = 4;
  std::vector<rr::ScoredPrompt> seeds;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 10; ++i) {
    rr::Vector z(config.input_dim);
    for (double& v : z) v = u(rng);
    seeds.push_back({z, 0.1 * i});
  }
  return rr::WarmStart(seeds, config);
}

std::vector<rr::SoftPromptArm> MakePool(std::size_t size, std::size_t dim) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<rr::SoftPromptArm> pool;
  for (std::size_t i = 0; i < size; ++i) {
    rr::Vector z(dim);
    for (double& v : z) v = u(rng);
    pool.push_back({static_cast<int>(i), z});
  }
  return pool;
}

void BM_UcbValues(benchmark::State& state) {
  const rr::BanditState bandit = MakeBandit();
  const auto pool = MakePool(static_cast<std::size_t>(state.range(0)), bandit.config().input_dim);
  for (auto _ : state) benchmark::DoNotOptimize(bandit.UcbValues(pool));
}
BENCHMARK(BM_UcbValues)->Arg(50)->Arg(200);

void BM_BanditUpdate(benchmark::State& state) {
  const auto pool = MakePool(16, 16);
  for (auto _ : state) {
    state.PauseTiming();
    rr::BanditState bandit = MakeBandit();
    state.ResumeTiming();
    for (int i = 0; i < 5; ++i) bandit.Update(pool[i], 0.2 * i);
  }
}
BENCHMARK(BM_BanditUpdate)->Unit(benchmark::kMillisecond);

rr::AdapterDelta RandomAdapter(const rr::ModelSignature& sig, std::size_t rank, std::mt19937_64& rng) {
  rr::AdapterDelta delta;
  delta.name = "bench";
  for (const auto& [name, shape] : sig.layers) {
    delta.layers[name] = {Gaussian(rank, shape.d_in, rng, 0.1), Gaussian(shape.d_out, rank, rng, 0.1),
                          1.0};
  }
  return delta;
}

void BM_Materialize(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  rr::ModelSignature sig;
  sig.layers["w"] = {d, d};
  std::mt19937_64 rng(6);
  std::vector<rr::WeightTerm> terms;
  for (int t = 0; t < 7; ++t) {
    terms.push_back({t % 2 == 0 ? -1 : 1, 0.5,
                     std::make_shared<rr::AdapterDelta>(RandomAdapter(sig, 4, rng)), ""});
  }
  const rr::WeightState plan = rr::Compose(sig, "base", terms);
  const rr::Matrix base = Gaussian(d, d, rng);
  for (auto _ : state) benchmark::DoNotOptimize(rr::Materialize(plan, "w", base));
}
BENCHMARK(BM_Materialize)->Arg(32)->Arg(256);

void BM_EigenbasisSimilarity(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(7);
  const rr::Matrix w1 = rr::MatMul(Gaussian(d, 8, rng), Gaussian(8, d, rng));
  const rr::Matrix w2 = rr::MatMul(Gaussian(d, 8, rng), Gaussian(8, d, rng));
  for (auto _ : state) benchmark::DoNotOptimize(rr::EigenbasisSimilarity(w1, w2, 8));
}
BENCHMARK(BM_EigenbasisSimilarity)->Arg(32)->Arg(128);

void BM_AdapterRoundTrip(benchmark::State& state) {
  rr::ModelSignature sig;
  sig.layers["a"] = {256, 256};
  sig.layers["b"] = {256, 256};
  std::mt19937_64 rng(8);
  const rr::AdapterDelta delta = RandomAdapter(sig, 8, rng);
  const auto dir = std::filesystem::temp_directory_path() / "rr_bench_adapter";
  for (auto _ : state) {
    rr::WriteAdapter(delta, dir);
    benchmark::DoNotOptimize(rr::ReadAdapter(dir));
  }
  std::filesystem::remove_all(dir);
}
BENCHMARK(BM_AdapterRoundTrip)->Unit(benchmark::kMicrosecond);

void BM_ToyTrain(benchmark::State& state) {
  const auto env = rr::ToyEnv::Make(0);
  const rr::WeightState plan = rr::Compose(env->signature(), "base", {});
  rr::ToyTrainOptions options;
  options.steps = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(env->Train(plan, env->forget(), options));
}
BENCHMARK(BM_ToyTrain)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
