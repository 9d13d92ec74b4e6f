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

#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <random>

#include "merge_properties.h"
#include "oracles.h"
#include "rr/files.h"
#include "test_util.h"

namespace rr {
namespace {

using ::rr::testing::ExpectErrorCode;
using ::rr::testing::RandomMatrix;
using ::rr::testing::RandomPair;
using ::rr::testing::ScratchDir;

ModelSignature TwoLayerSig() {
  ModelSignature sig;
  sig.layers["attn"] = {8, 12};
  sig.layers["mlp"] = {6, 6};
  return sig;
}

std::shared_ptr<const AdapterDelta> MakeDelta(const std::string& name, const ModelSignature& sig,
                                              std::size_t rank, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto delta = std::make_shared<AdapterDelta>();
  delta->name = name;
  for (const auto& [layer, shape] : sig.layers) {
    delta->layers.emplace(layer, RandomPair(shape.d_out, shape.d_in, rank, rng));
  }
  return delta;
}

bool BitwiseEqual(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data().data(), b.data().data(), a.data().size_bytes()) == 0;
}

TEST(ValidateTest, AcceptsExactCover) {
  const ModelSignature sig = TwoLayerSig();
  Validate(*MakeDelta("f", sig, 4, 1), sig);
}

TEST(ValidateTest, RejectsWrongInputDim) {
  ModelSignature sig;
  sig.layers["l"] = {10, 12};
  std::mt19937_64 rng(2);
  AdapterDelta delta{"bad", {{"l", RandomPair(10, 10, 4, rng)}}};
  ExpectErrorCode(ErrorCode::kShapeMismatch, [&] { Validate(delta, sig); });
}

TEST(ValidateTest, RejectsRankDisagreement) {
  std::mt19937_64 rng(3);
  ModelSignature sig;
  sig.layers["l"] = {4, 4};
  AdapterDelta delta{"bad", {{"l", {RandomMatrix(2, 4, rng), RandomMatrix(4, 3, rng), 1.0}}}};
  ExpectErrorCode(ErrorCode::kShapeMismatch, [&] { Validate(delta, sig); });
}

TEST(ValidateTest, RejectsUnknownLayer) {
  const ModelSignature sig = TwoLayerSig();
  std::mt19937_64 rng(4);
  AdapterDelta delta{"extra", {{"lm_head", RandomPair(8, 12, 2, rng)}}};
  ExpectErrorCode(ErrorCode::kUnknownLayer, [&] { Validate(delta, sig); });
}

TEST(ValidateTest, SubsetCoverLeavesOtherLayersAtBase) {
  const ModelSignature sig = TwoLayerSig();
  std::mt19937_64 rng(5);
  auto delta = std::make_shared<AdapterDelta>();
  delta->layers.emplace("attn", RandomPair(8, 12, 2, rng));
  Validate(*delta, sig);
  const WeightState state = Compose(sig, "base", {{1, 1.5, delta, ""}});
  const Matrix base = RandomMatrix(6, 6, rng);
  EXPECT_TRUE(BitwiseEqual(Materialize(state, "mlp", base), base));
}

TEST(ComposeTest, EmptyTermsIsBase) {
  const ModelSignature sig = TwoLayerSig();
  const WeightState state = Compose(sig, "phi0", {});
  EXPECT_TRUE(state.terms.empty());
  std::mt19937_64 rng(6);
  const Matrix base = RandomMatrix(8, 12, rng);
  EXPECT_TRUE(BitwiseEqual(Materialize(state, "attn", base), base));
}

// The published toxicity schedule: -3 F0, then +0.3 R1, -0.2 F1.
TEST(ComposeTest, ToxicitySchedule) {
  const ModelSignature sig = TwoLayerSig();
  const auto f0 = MakeDelta("F0", sig, 4, 10);
  const auto r1 = MakeDelta("R1", sig, 4, 11);
  const auto f1 = MakeDelta("F1", sig, 4, 12);

  const WeightState step1 = Compose(sig, "phi0", {{-1, 3.0, f0, ""}});
  ASSERT_EQ(step1.terms.size(), 1u);
  EXPECT_EQ(step1.terms[0].sign * step1.terms[0].weight, -3.0);

  const WeightState full =
      Compose(sig, "phi0", {{-1, 3.0, f0, ""}, {1, 0.3, r1, ""}, {-1, 0.2, f1, ""}});
  ASSERT_EQ(full.terms.size(), 3u);
  EXPECT_EQ(full.terms[1].sign * full.terms[1].weight, 0.3);
  EXPECT_EQ(full.terms[2].sign * full.terms[2].weight, -0.2);
  EXPECT_EQ(full.terms[2].delta->name, "F1");

  std::mt19937_64 rng(13);
  const Matrix base = RandomMatrix(8, 12, rng);
  const Matrix expected =
      testing::FromEigen(testing::ToEigen(base) - 3.0 * testing::ToEigen(DenseUpdate(f0->layers.at("attn"))) +
                         0.3 * testing::ToEigen(DenseUpdate(r1->layers.at("attn"))) -
                         0.2 * testing::ToEigen(DenseUpdate(f1->layers.at("attn"))));
  EXPECT_LE(testing::MaxAbsDiff(testing::ToEigen(Materialize(full, "attn", base)),
                                testing::ToEigen(expected)),
            1e-10);
}

TEST(ComposeTest, RejectsBadTerms) {
  const ModelSignature sig = TwoLayerSig();
  const auto d = MakeDelta("d", sig, 2, 14);
  ExpectErrorCode(ErrorCode::kInvalidArgument, [&] { Compose(sig, "b", {{0, 1.0, d, ""}}); });
  ExpectErrorCode(ErrorCode::kInvalidArgument, [&] { Compose(sig, "b", {{1, -1.0, d, ""}}); });
  ExpectErrorCode(ErrorCode::kInvalidArgument, [&] { Compose(sig, "b", {{1, NAN, d, ""}}); });
}

TEST(MaterializeTest, OnesUpdateAtWeightTwo) {
  ModelSignature sig;
  sig.layers["l"] = {3, 3};
  auto delta = std::make_shared<AdapterDelta>();
  delta->layers.emplace("l", LowRankPair{Matrix(1, 3, 1.0), Matrix(3, 1, 1.0), 1.0});
  const WeightState state = Compose(sig, "base", {{1, 2.0, delta, ""}});
  std::mt19937_64 rng(15);
  const Matrix base = RandomMatrix(3, 3, rng);
  const Matrix w = Materialize(state, "l", base);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(w(i, j), base(i, j) + 2.0);
  }
}

TEST(MaterializeTest, MatchesDenseOracle) {
  ModelSignature sig;
  sig.layers["l"] = {6, 6};
  std::mt19937_64 rng(16);
  std::vector<WeightTerm> terms;
  for (int t = 0; t < 3; ++t) {
    auto delta = std::make_shared<AdapterDelta>();
    delta->layers.emplace("l", RandomPair(6, 6, 2, rng, 0.5 * (t + 1)));
    terms.push_back({t % 2 == 0 ? -1 : 1, 0.7 * (t + 1), delta, ""});
  }
  const WeightState state = Compose(sig, "base", terms);
  const Matrix base = RandomMatrix(6, 6, rng);
  EXPECT_LE(testing::MaxAbsDiff(testing::ToEigen(Materialize(state, "l", base)),
                                testing::OracleMaterialize(state, "l", base)),
            1e-10);
}

TEST(MaterializeTest, RejectsBaseShapeMismatch) {
  const ModelSignature sig = TwoLayerSig();
  const WeightState state = Compose(sig, "b", {{1, 1.0, MakeDelta("d", sig, 2, 17), ""}});
  ExpectErrorCode(ErrorCode::kShapeMismatch,
                  [&] { Materialize(state, "attn", Matrix(12, 8, 0.0)); });
}

TEST(MergePropertyTest, LinearityScalingAndZeroWeight) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const testing::MergeCaseResult r = testing::RunMergeCase(seed);
    EXPECT_LE(r.linearity_error, 1e-9) << "seed " << seed;
    EXPECT_LE(r.scaling_error, 1e-10) << "seed " << seed;
    EXPECT_LE(r.oracle_error, 1e-10) << "seed " << seed;
    EXPECT_TRUE(r.zero_weight_bitwise) << "seed " << seed;
  }
}

TEST(AdapterIoTest, RoundTripIsBitwise) {
  ScratchDir dir("adapter_rt");
  const ModelSignature sig = TwoLayerSig();
  AdapterDelta delta = *MakeDelta("retain-1", sig, 4, 18);
  delta.layers.at("mlp").scale = 0.125;
  WriteAdapter(delta, dir.path() / "a");
  const AdapterDelta back = ReadAdapter(dir.path() / "a");
  EXPECT_EQ(back.name, delta.name);
  ASSERT_EQ(back.layers.size(), delta.layers.size());
  for (const auto& [name, pair] : delta.layers) {
    const LowRankPair& got = back.layers.at(name);
    EXPECT_TRUE(BitwiseEqual(got.a, pair.a)) << name;
    EXPECT_TRUE(BitwiseEqual(got.b, pair.b)) << name;
    EXPECT_EQ(got.scale, pair.scale);
  }
  WriteAdapter(back, dir.path() / "b");
  EXPECT_EQ(testing::ReadFileBytes(dir.path() / "a" / "tensors.bin"),
            testing::ReadFileBytes(dir.path() / "b" / "tensors.bin"));
  EXPECT_EQ(testing::ReadFileBytes(dir.path() / "a" / "manifest.json"),
            testing::ReadFileBytes(dir.path() / "b" / "manifest.json"));
}

TEST(AdapterIoTest, ManifestLayoutIsFloat32AThenB) {
  ScratchDir dir("adapter_layout");
  AdapterDelta delta{"tiny", {{"l", LowRankPair{Matrix{{1.0, 2.0}}, Matrix{{0.5}, {-1.0}}, 2.0}}}};
  WriteAdapter(delta, dir.path());
  const auto blob = ReadBinaryFile(dir.path() / "tensors.bin");
  ASSERT_EQ(blob.size(), 16u);
  EXPECT_EQ(LoadFloat32Le(blob.data()), 1.0f);
  EXPECT_EQ(LoadFloat32Le(blob.data() + 4), 2.0f);
  EXPECT_EQ(LoadFloat32Le(blob.data() + 8), 0.5f);
  EXPECT_EQ(LoadFloat32Le(blob.data() + 12), -1.0f);
  // 1.0f is 0x3f800000, stored little-endian.
  EXPECT_EQ(blob[0], 0x00);
  EXPECT_EQ(blob[3], 0x3f);
  const auto manifest = nlohmann::json::parse(ReadTextFile(dir.path() / "manifest.json"));
  EXPECT_EQ(manifest["format_version"], 1);
  EXPECT_EQ(manifest["sha256"], Sha256Hex(blob));
  const auto& l = manifest["layers"][0];
  EXPECT_EQ(l["a_offset"], 0);
  EXPECT_EQ(l["a_len"], 8);
  EXPECT_EQ(l["b_offset"], 8);
  EXPECT_EQ(l["b_len"], 8);
  EXPECT_EQ(l["rank"], 1);
  EXPECT_EQ(l["scale"], 2.0);
}

TEST(AdapterIoTest, FlippedByteIsChecksumMismatch) {
  ScratchDir dir("adapter_sha");
  WriteAdapter(*MakeDelta("f", TwoLayerSig(), 2, 19), dir.path());
  auto blob = ReadBinaryFile(dir.path() / "tensors.bin");
  blob[blob.size() / 2] ^= 0x01;
  WriteBinaryFile(dir.path() / "tensors.bin", blob);
  ExpectErrorCode(ErrorCode::kChecksumMismatch, [&] { ReadAdapter(dir.path()); });
}

TEST(AdapterIoTest, ShortBlobIsTruncated) {
  ScratchDir dir("adapter_trunc");
  WriteAdapter(*MakeDelta("f", TwoLayerSig(), 2, 20), dir.path());
  auto blob = ReadBinaryFile(dir.path() / "tensors.bin");
  blob.resize(blob.size() - 4);
  WriteBinaryFile(dir.path() / "tensors.bin", blob);
  ExpectErrorCode(ErrorCode::kTruncatedBlob, [&] { ReadAdapter(dir.path()); });
}

TEST(AdapterIoTest, BadManifestIsCorrupt) {
  ScratchDir dir("adapter_corrupt");
  WriteAdapter(*MakeDelta("f", TwoLayerSig(), 2, 21), dir.path());
  WriteTextFile(dir.path() / "manifest.json", "{\"format_version\": 1,");
  ExpectErrorCode(ErrorCode::kCorruptManifest, [&] { ReadAdapter(dir.path()); });
  WriteTextFile(dir.path() / "manifest.json", "{\"format_version\": 2}");
  ExpectErrorCode(ErrorCode::kCorruptManifest, [&] { ReadAdapter(dir.path()); });
}

TEST(AdapterIoTest, RoundToStoragePrecisionMatchesDisk) {
  ScratchDir dir("adapter_round");
  std::mt19937_64 rng(22);
  AdapterDelta delta{"r", {{"l", {RandomMatrix(2, 5, rng), RandomMatrix(3, 2, rng), 1.0}}}};
  const AdapterDelta rounded = RoundToStoragePrecision(delta);
  WriteAdapter(delta, dir.path());
  const AdapterDelta back = ReadAdapter(dir.path());
  EXPECT_TRUE(BitwiseEqual(back.layers.at("l").a, rounded.layers.at("l").a));
  EXPECT_TRUE(BitwiseEqual(back.layers.at("l").b, rounded.layers.at("l").b));
}

TEST(MergePlanTest, RoundTripThroughJson) {
  ScratchDir dir("plan");
  const ModelSignature sig = TwoLayerSig();
  const auto f0 = MakeDelta("F0", sig, 2, 23);
  const auto r1 = MakeDelta("R1", sig, 2, 24);
  WriteAdapter(*f0, dir.path() / "adapters" / "F0");
  WriteAdapter(*r1, dir.path() / "adapters" / "R1");
  const WeightState state = Compose(
      sig, "phi0", {{-1, 3.0, f0, "adapters/F0"}, {1, 0.3, r1, "adapters/R1"}});
  const auto plan = MergePlanToJson(state);
  EXPECT_EQ(plan.dump(), R"({"base_ref":"phi0","terms":[{"sign":-1,"weight":3.0,"adapter_path":"adapters/F0"},{"sign":1,"weight":0.3,"adapter_path":"adapters/R1"}]})");
  WriteTextFile(dir.path() / "plan.json", plan.dump(2));
  const WeightState back = LoadMergePlan(dir.path() / "plan.json", sig);
  ASSERT_EQ(back.terms.size(), 2u);
  std::mt19937_64 rng(25);
  const Matrix base = RandomMatrix(6, 6, rng);
  EXPECT_TRUE(BitwiseEqual(Materialize(back, "mlp", base), Materialize(state, "mlp", base)));
}

TEST(MergePlanTest, MissingPathIsRejected) {
  const ModelSignature sig = TwoLayerSig();
  const WeightState state = Compose(sig, "phi0", {{-1, 1.0, MakeDelta("F", sig, 2, 26), ""}});
  ExpectErrorCode(ErrorCode::kInvalidArgument, [&] { MergePlanToJson(state); });
}

TEST(SignatureTest, JsonRoundTrip) {
  const ModelSignature sig = TwoLayerSig();
  const ModelSignature back = SignatureFromJson(SignatureToJson(sig));
  EXPECT_EQ(back.layers, sig.layers);
  ExpectErrorCode(ErrorCode::kConfigError,
                  [] { SignatureFromJson(nlohmann::json::parse(R"({"layers": {}})")); });
}

TEST(FilesTest, Sha256KnownVector) {
  EXPECT_EQ(Sha256Hex(std::string_view("abc")),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

}  // namespace
}  // namespace rr
