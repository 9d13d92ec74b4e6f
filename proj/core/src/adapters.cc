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

#include "rr/adapters.h"

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "rr/error.h"
#include "rr/files.h"

namespace rr {
namespace {

constexpr int kFormatVersion = 1;
constexpr char kManifestName[] = "manifest.json";
constexpr char kBlobName[] = "tensors.bin";

std::string ShapeString(std::size_t rows, std::size_t cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

void AppendMatrix(const Matrix& m, std::vector<std::uint8_t>& out) {
  for (double v : m.data()) AppendFloat32Le(v, out);
}

Matrix LoadMatrix(const std::vector<std::uint8_t>& blob, std::size_t offset, std::size_t rows,
                  std::size_t cols) {
  Vector values(rows * cols);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = LoadFloat32Le(blob.data() + offset + 4 * i);
  }
  return Matrix(rows, cols, std::move(values));
}

[[noreturn]] void Corrupt(const std::filesystem::path& dir, const std::string& why) {
  throw Error(ErrorCode::kCorruptManifest, (dir / kManifestName).string() + ": " + why);
}

}  // namespace

void ValidatePair(const LowRankPair& pair) {
  if (pair.a.rows() == 0 || pair.a.rows() != pair.b.cols()) {
    throw Error(ErrorCode::kShapeMismatch,
                "a is " + ShapeString(pair.a.rows(), pair.a.cols()) + " but b is " +
                    ShapeString(pair.b.rows(), pair.b.cols()));
  }
  if (!std::isfinite(pair.scale)) {
    throw Error(ErrorCode::kShapeMismatch, "non-finite scale");
  }
}

Matrix DenseUpdate(const LowRankPair& pair) {
  ValidatePair(pair);
  Matrix w = MatMul(pair.b, pair.a);
  if (pair.scale != 1.0) {
    for (double& v : w.data()) v *= pair.scale;
  }
  return w;
}

ModelSignature SignatureFromJson(const nlohmann::json& j) {
  ModelSignature sig;
  try {
    for (const auto& [name, shape] : j.at("layers").items()) {
      sig.layers[name] = {shape.at("d_out").get<std::size_t>(),
                          shape.at("d_in").get<std::size_t>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("model signature: ") + e.what());
  }
  if (sig.layers.empty()) throw Error(ErrorCode::kConfigError, "model signature has no layers");
  for (const auto& [name, shape] : sig.layers) {
    if (shape.d_out == 0 || shape.d_in == 0) {
      throw Error(ErrorCode::kConfigError, "model signature layer " + name + " has a zero dim");
    }
  }
  return sig;
}

nlohmann::json SignatureToJson(const ModelSignature& sig) {
  nlohmann::json layers = nlohmann::json::object();
  for (const auto& [name, shape] : sig.layers) {
    layers[name] = {{"d_out", shape.d_out}, {"d_in", shape.d_in}};
  }
  return {{"layers", layers}};
}

ModelSignature LoadSignature(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ReadTextFile(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, path.string() + ": " + e.what());
  }
  return SignatureFromJson(j);
}

void Validate(const AdapterDelta& delta, const ModelSignature& sig) {
  for (const auto& [name, pair] : delta.layers) {
    const auto it = sig.layers.find(name);
    if (it == sig.layers.end()) {
      throw Error(ErrorCode::kUnknownLayer,
                  "adapter '" + delta.name + "' layer '" + name + "' is not in the signature");
    }
    ValidatePair(pair);
    if (pair.d_in() != it->second.d_in || pair.d_out() != it->second.d_out) {
      throw Error(ErrorCode::kShapeMismatch,
                  "layer '" + name + "' update is " + ShapeString(pair.d_out(), pair.d_in()) +
                      ", signature says " + ShapeString(it->second.d_out, it->second.d_in));
    }
  }
}

WeightState WeightState::With(WeightTerm term) const {
  WeightState next = *this;
  next.terms.push_back(std::move(term));
  return next;
}

WeightState Compose(const ModelSignature& sig, std::string base_ref,
                    std::vector<WeightTerm> terms) {
  for (const WeightTerm& term : terms) {
    if (term.sign != 1 && term.sign != -1) {
      throw Error(ErrorCode::kInvalidArgument, "term sign must be +1 or -1");
    }
    if (!std::isfinite(term.weight) || term.weight < 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "term weight must be finite and >= 0");
    }
    if (!term.delta) throw Error(ErrorCode::kInvalidArgument, "term has no adapter");
    Validate(*term.delta, sig);
  }
  WeightState state;
  state.base_ref = std::move(base_ref);
  state.terms = std::move(terms);
  return state;
}

Matrix Materialize(const WeightState& state, const std::string& layer,
                   const Matrix& base_weights) {
  Matrix w = base_weights;
  for (const WeightTerm& term : state.terms) {
    // A zero weight contributes nothing; skipping keeps signed zeros in base.
    if (term.weight == 0.0) continue;
    const auto it = term.delta->layers.find(layer);
    if (it == term.delta->layers.end()) continue;
    const Matrix d = DenseUpdate(it->second);
    if (d.rows() != w.rows() || d.cols() != w.cols()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "layer '" + layer + "' base is " + ShapeString(w.rows(), w.cols()) +
                      " but update is " + ShapeString(d.rows(), d.cols()));
    }
    const double coef = term.sign * term.weight;
    auto out = w.data();
    const auto in = d.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += coef * in[i];
  }
  return w;
}

nlohmann::ordered_json MergePlanToJson(const WeightState& state) {
  nlohmann::ordered_json terms = nlohmann::ordered_json::array();
  for (const WeightTerm& term : state.terms) {
    if (term.adapter_path.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "term for adapter '" + (term.delta ? term.delta->name : std::string()) +
                      "' has no adapter_path");
    }
    nlohmann::ordered_json t;
    t["sign"] = term.sign;
    t["weight"] = term.weight;
    t["adapter_path"] = term.adapter_path;
    terms.push_back(std::move(t));
  }
  nlohmann::ordered_json plan;
  plan["base_ref"] = state.base_ref;
  plan["terms"] = std::move(terms);
  return plan;
}

WeightState MergePlanFromJson(const nlohmann::json& j, const ModelSignature& sig,
                              const std::filesystem::path& base_dir) {
  std::string base_ref;
  std::vector<WeightTerm> terms;
  try {
    base_ref = j.at("base_ref").get<std::string>();
    for (const auto& t : j.at("terms")) {
      WeightTerm term;
      term.sign = t.at("sign").get<int>();
      term.weight = t.at("weight").get<double>();
      term.adapter_path = t.at("adapter_path").get<std::string>();
      terms.push_back(std::move(term));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("merge plan: ") + e.what());
  }
  for (WeightTerm& term : terms) {
    std::filesystem::path p(term.adapter_path);
    if (p.is_relative()) p = base_dir / p;
    term.delta = std::make_shared<const AdapterDelta>(ReadAdapter(p));
  }
  return Compose(sig, std::move(base_ref), std::move(terms));
}

WeightState LoadMergePlan(const std::filesystem::path& path, const ModelSignature& sig) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ReadTextFile(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, path.string() + ": " + e.what());
  }
  return MergePlanFromJson(j, sig, path.parent_path());
}

void WriteAdapter(const AdapterDelta& delta, const std::filesystem::path& dir) {
  std::vector<std::uint8_t> blob;
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (const auto& [name, pair] : delta.layers) {
    ValidatePair(pair);
    nlohmann::ordered_json entry;
    entry["name"] = name;
    entry["d_in"] = pair.d_in();
    entry["d_out"] = pair.d_out();
    entry["rank"] = pair.rank();
    entry["scale"] = pair.scale;
    entry["a_offset"] = blob.size();
    AppendMatrix(pair.a, blob);
    entry["a_len"] = blob.size() - entry["a_offset"].get<std::size_t>();
    entry["b_offset"] = blob.size();
    AppendMatrix(pair.b, blob);
    entry["b_len"] = blob.size() - entry["b_offset"].get<std::size_t>();
    layers.push_back(std::move(entry));
  }
  nlohmann::ordered_json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["name"] = delta.name;
  manifest["sha256"] = Sha256Hex(blob);
  manifest["layers"] = std::move(layers);
  WriteBinaryFile(dir / kBlobName, blob);
  WriteTextFile(dir / kManifestName, manifest.dump(2) + "\n");
}

AdapterDelta ReadAdapter(const std::filesystem::path& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(ReadTextFile(dir / kManifestName));
  } catch (const nlohmann::json::exception& e) {
    Corrupt(dir, e.what());
  }
  const std::vector<std::uint8_t> blob = ReadBinaryFile(dir / kBlobName);

  struct Entry {
    std::string name;
    std::size_t d_in, d_out, rank, a_offset, a_len, b_offset, b_len;
    double scale;
  };
  AdapterDelta delta;
  std::string sha;
  std::vector<Entry> entries;
  try {
    if (manifest.at("format_version").get<int>() != kFormatVersion) {
      Corrupt(dir, "unsupported format_version");
    }
    delta.name = manifest.at("name").get<std::string>();
    sha = manifest.at("sha256").get<std::string>();
    for (const auto& l : manifest.at("layers")) {
      entries.push_back({l.at("name").get<std::string>(), l.at("d_in").get<std::size_t>(),
                         l.at("d_out").get<std::size_t>(), l.at("rank").get<std::size_t>(),
                         l.at("a_offset").get<std::size_t>(), l.at("a_len").get<std::size_t>(),
                         l.at("b_offset").get<std::size_t>(), l.at("b_len").get<std::size_t>(),
                         l.at("scale").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    Corrupt(dir, e.what());
  }

  for (const Entry& e : entries) {
    const auto beyond = [&](std::size_t offset, std::size_t len) {
      return len > blob.size() || offset > blob.size() - len;
    };
    if (beyond(e.a_offset, e.a_len) || beyond(e.b_offset, e.b_len)) {
      throw Error(ErrorCode::kTruncatedBlob,
                  (dir / kBlobName).string() + " has " + std::to_string(blob.size()) +
                      " bytes; layer '" + e.name + "' needs more");
    }
  }
  if (Sha256Hex(blob) != sha) {
    throw Error(ErrorCode::kChecksumMismatch, (dir / kBlobName).string() +
                                                  " does not match the manifest sha256");
  }
  for (const Entry& e : entries) {
    if (e.rank == 0 || e.a_len != 4 * e.rank * e.d_in || e.b_len != 4 * e.d_out * e.rank) {
      Corrupt(dir, "layer '" + e.name + "' lengths disagree with its shape");
    }
    if (!delta.layers
             .emplace(e.name, LowRankPair{LoadMatrix(blob, e.a_offset, e.rank, e.d_in),
                                          LoadMatrix(blob, e.b_offset, e.d_out, e.rank),
                                          e.scale})
             .second) {
      Corrupt(dir, "duplicate layer '" + e.name + "'");
    }
  }
  return delta;
}

AdapterDelta RoundToStoragePrecision(AdapterDelta delta) {
  for (auto& [name, pair] : delta.layers) {
    for (double& v : pair.a.data()) v = static_cast<float>(v);
    for (double& v : pair.b.data()) v = static_cast<float>(v);
  }
  return delta;
}

}  // namespace rr
