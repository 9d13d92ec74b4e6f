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

#ifndef RR_SUBSPACE_H_
#define RR_SUBSPACE_H_

#include <cstddef>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "rr/adapters.h"
#include "rr/numerics.h"

namespace rr {

inline constexpr std::size_t kDefaultSimilarityK = 8;

// W = scale * B * A.
Matrix MergedUpdate(const LowRankPair& pair);

// (1/k) * ||U1^T U2||_F over the top-k left singular vectors of w1 and w2.
// Identical subspaces give 1/sqrt(k); normalized multiplies by sqrt(k).
// Throws kInvalidRank if k exceeds either matrix's smaller dimension and
// kShapeMismatch if the row counts differ.
double EigenbasisSimilarity(const Matrix& w1, const Matrix& w2, std::size_t k,
                            bool normalized = false);

struct SimilarityReport {
  std::map<std::string, double> per_layer;
  double mean = 0.0;
  double std = 0.0;  // population
  std::size_t k = kDefaultSimilarityK;
  bool normalized = false;
};

// Per-layer similarity over the layers both adapters cover. Throws
// kNoSharedLayers if there are none.
SimilarityReport Report(const AdapterDelta& retain, const AdapterDelta& forget,
                        std::size_t k = kDefaultSimilarityK, bool normalized = false);

// {k, normalized, per_layer, mean, std}
nlohmann::ordered_json ReportToJson(const SimilarityReport& report);

// Sum over shared layers of the entrywise |A_retain * A_forget^T|.
double OrthoPenalty(const AdapterDelta& retain, const AdapterDelta& forget);

}  // namespace rr

#endif  // RR_SUBSPACE_H_
