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

#ifndef RR_ADAPTERS_H_
#define RR_ADAPTERS_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rr/numerics.h"

namespace rr {

// Effective update scale * b * a, with a: rank x d_in and b: d_out x rank.
struct LowRankPair {
  Matrix a;
  Matrix b;
  double scale = 1.0;

  std::size_t rank() const { return a.rows(); }
  std::size_t d_in() const { return a.cols(); }
  std::size_t d_out() const { return b.rows(); }
};

// Throws kShapeMismatch if the factor shapes disagree or scale is not finite.
void ValidatePair(const LowRankPair& pair);

// Dense scale * b * a.
Matrix DenseUpdate(const LowRankPair& pair);

struct AdapterDelta {
  std::string name;
  std::map<std::string, LowRankPair> layers;
};

struct LayerShape {
  std::size_t d_out = 0;
  std::size_t d_in = 0;
  bool operator==(const LayerShape&) const = default;
};

struct ModelSignature {
  std::map<std::string, LayerShape> layers;
};

// {"layers": {"name": {"d_out": .., "d_in": ..}, ...}}
ModelSignature SignatureFromJson(const nlohmann::json& j);
nlohmann::json SignatureToJson(const ModelSignature& sig);
ModelSignature LoadSignature(const std::filesystem::path& path);

// Layers absent from the delta are implicit zero updates; layers absent from
// the signature are rejected with kUnknownLayer.
void Validate(const AdapterDelta& delta, const ModelSignature& sig);

struct WeightTerm {
  int sign = 1;  // +1 adds, -1 subtracts
  double weight = 0.0;
  std::shared_ptr<const AdapterDelta> delta;
  std::string adapter_path;  // where the delta lives on disk, if anywhere
};

// Symbolic base + sum(sign * weight * delta) in application order.
struct WeightState {
  std::string base_ref;
  std::vector<WeightTerm> terms;
  int iteration = 0;

  WeightState With(WeightTerm term) const;
};

// Validates every term against sig. Throws kInvalidArgument for a sign other
// than +-1 or a negative or non-finite weight.
WeightState Compose(const ModelSignature& sig, std::string base_ref,
                    std::vector<WeightTerm> terms);

// base + sum over terms touching layer, accumulated left to right.
Matrix Materialize(const WeightState& state, const std::string& layer,
                   const Matrix& base_weights);

// Merge-plan JSON {base_ref, terms: [{sign, weight, adapter_path}]}. Every
// term must carry an adapter_path.
nlohmann::ordered_json MergePlanToJson(const WeightState& state);
// Relative adapter paths resolve against base_dir. Loaded adapters are
// validated against sig.
WeightState MergePlanFromJson(const nlohmann::json& j, const ModelSignature& sig,
                              const std::filesystem::path& base_dir);
WeightState LoadMergePlan(const std::filesystem::path& path, const ModelSignature& sig);

// Adapter directory: manifest.json plus tensors.bin (float32 LE, A then B
// per layer in name order). Values are stored as float32, so a delta whose
// entries are not float-representable is rounded on write.
void WriteAdapter(const AdapterDelta& delta, const std::filesystem::path& dir);
AdapterDelta ReadAdapter(const std::filesystem::path& dir);

// Rounds every stored value to float32 precision so the in-memory delta
// matches what a write/read cycle would produce.
AdapterDelta RoundToStoragePrecision(AdapterDelta delta);

}  // namespace rr

#endif  // RR_ADAPTERS_H_
