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

#include "rr/subspace.h"

#include <cmath>
#include <future>
#include <string>
#include <vector>

#include "rr/error.h"

namespace rr {
namespace {

std::vector<std::string> SharedLayers(const AdapterDelta& x, const AdapterDelta& y) {
  std::vector<std::string> shared;
  for (const auto& [name, pair] : x.layers) {
    if (y.layers.count(name)) shared.push_back(name);
  }
  if (shared.empty()) {
    throw Error(ErrorCode::kNoSharedLayers,
                "adapters '" + x.name + "' and '" + y.name + "' share no layers");
  }
  return shared;
}

}  // namespace

Matrix MergedUpdate(const LowRankPair& pair) { return DenseUpdate(pair); }

double EigenbasisSimilarity(const Matrix& w1, const Matrix& w2, std::size_t k,
                            bool normalized) {
  if (w1.rows() != w2.rows()) {
    throw Error(ErrorCode::kShapeMismatch,
                "updates have " + std::to_string(w1.rows()) + " and " +
                    std::to_string(w2.rows()) + " rows");
  }
  const Matrix u1 = TopKLeftSingular(w1, k);
  const Matrix u2 = TopKLeftSingular(w2, k);
  const double kd = static_cast<double>(k);
  const double sim = FrobeniusNorm(MatMulTransA(u1, u2)) / kd;
  return normalized ? sim * std::sqrt(kd) : sim;
}

SimilarityReport Report(const AdapterDelta& retain, const AdapterDelta& forget,
                        std::size_t k, bool normalized) {
  const std::vector<std::string> shared = SharedLayers(retain, forget);
  std::vector<std::future<double>> pending;
  pending.reserve(shared.size());
  for (const std::string& name : shared) {
    pending.push_back(std::async(std::launch::async, [&, &name = name] {
      return EigenbasisSimilarity(MergedUpdate(retain.layers.at(name)),
                                  MergedUpdate(forget.layers.at(name)), k, normalized);
    }));
  }
  SimilarityReport report;
  report.k = k;
  report.normalized = normalized;
  for (std::size_t i = 0; i < shared.size(); ++i) {
    report.per_layer[shared[i]] = pending[i].get();
  }
  const double n = static_cast<double>(shared.size());
  for (const auto& [name, v] : report.per_layer) report.mean += v;
  report.mean /= n;
  double var = 0.0;
  for (const auto& [name, v] : report.per_layer) var += (v - report.mean) * (v - report.mean);
  report.std = std::sqrt(var / n);
  return report;
}

nlohmann::ordered_json ReportToJson(const SimilarityReport& report) {
  nlohmann::ordered_json j;
  j["k"] = report.k;
  j["normalized"] = report.normalized;
  nlohmann::ordered_json per_layer = nlohmann::ordered_json::object();
  for (const auto& [name, v] : report.per_layer) per_layer[name] = v;
  j["per_layer"] = std::move(per_layer);
  j["mean"] = report.mean;
  j["std"] = report.std;
  return j;
}

double OrthoPenalty(const AdapterDelta& retain, const AdapterDelta& forget) {
  double total = 0.0;
  for (const std::string& name : SharedLayers(retain, forget)) {
    const Matrix& ar = retain.layers.at(name).a;
    const Matrix& af = forget.layers.at(name).a;
    if (ar.cols() != af.cols()) {
      throw Error(ErrorCode::kShapeMismatch, "layer '" + name + "' A factors differ in d_in");
    }
    const Matrix overlap = MatMulTransB(ar, af);
    for (double v : overlap.data()) total += std::abs(v);
  }
  return total;
}

}  // namespace rr
