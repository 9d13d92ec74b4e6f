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

#include "rr/numerics.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.h"
#include "rr/error.h"
#include "test_util.h"

namespace rr {
namespace {

using ::rr::testing::ExpectErrorCode;
using ::rr::testing::MaxAbsDiff;
using ::rr::testing::ToEigen;

TEST(SymEigTest, IdentityHasUnitSpectrum) {
  const EigenResult r = SymEig(Matrix::Identity(3));
  ASSERT_EQ(r.values.size(), 3u);
  for (double v : r.values) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(SymEigTest, DiagonalGivesAxisVectors) {
  const std::vector<double> diag = {1.0, 4.0, 0.0};
  const EigenResult r = SymEig(Matrix::Diagonal(diag));
  EXPECT_DOUBLE_EQ(r.values[0], 4.0);
  EXPECT_DOUBLE_EQ(r.values[1], 1.0);
  EXPECT_DOUBLE_EQ(r.values[2], 0.0);
  EXPECT_DOUBLE_EQ(std::abs(r.vectors(1, 0)), 1.0);
  EXPECT_DOUBLE_EQ(std::abs(r.vectors(0, 1)), 1.0);
  EXPECT_DOUBLE_EQ(std::abs(r.vectors(2, 2)), 1.0);
}

TEST(SymEigTest, RandomSymmetricMatchesOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix s = testing::RandomSymmetric(6, rng);
    const EigenResult r = SymEig(s);
    const std::vector<double> oracle = testing::OracleEigenvalues(s);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(r.values[i], oracle[i], 1e-8);

    const Eigen::MatrixXd v = ToEigen(r.vectors);
    const Eigen::MatrixXd lam = Eigen::VectorXd::Map(r.values.data(), 6).asDiagonal();
    const double norm = FrobeniusNorm(s);
    EXPECT_LE((ToEigen(s) - v * lam * v.transpose()).norm(), 1e-8 * norm);
    EXPECT_LE(MaxAbsDiff(v.transpose() * v, Eigen::MatrixXd::Identity(6, 6)), 1e-8);
  }
}

TEST(SymEigTest, EigenvalueSumEqualsTrace) {
  std::mt19937_64 rng(5);
  for (std::size_t n : {1u, 2u, 7u, 16u, 40u}) {
    const Matrix s = testing::RandomSymmetric(n, rng);
    const EigenResult r = SymEig(s);
    double sum = 0.0;
    for (double v : r.values) sum += v;
    EXPECT_NEAR(sum, Trace(s), 1e-8 * std::max(1.0, std::abs(Trace(s))));
    for (std::size_t i = 1; i < n; ++i) EXPECT_GE(r.values[i - 1], r.values[i]);
  }
}

TEST(SymEigTest, RejectsBadInput) {
  ExpectErrorCode(ErrorCode::kInvalidMatrix, [] { SymEig(Matrix(2, 3)); });
  ExpectErrorCode(ErrorCode::kInvalidMatrix, [] { SymEig(Matrix{{1, 2}, {3, 1}}); });
  ExpectErrorCode(ErrorCode::kInvalidMatrix,
                  [] { SymEig(Matrix{{1, NAN}, {NAN, 1}}); });
}

TEST(SymEigTest, ZeroMatrix) {
  const EigenResult r = SymEig(Matrix(4, 4));
  for (double v : r.values) EXPECT_EQ(v, 0.0);
}

TEST(TopKLeftSingularTest, DiagonalMatrix) {
  const std::vector<double> diag = {3.0, 2.0, 1.0};
  const Matrix u = TopKLeftSingular(Matrix::Diagonal(diag), 2);
  ASSERT_EQ(u.rows(), 3u);
  ASSERT_EQ(u.cols(), 2u);
  EXPECT_NEAR(std::abs(u(0, 0)), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(u(1, 1)), 1.0, 1e-12);
  EXPECT_NEAR(u(2, 0), 0.0, 1e-12);
  EXPECT_NEAR(u(2, 1), 0.0, 1e-12);
}

TEST(TopKLeftSingularTest, RankOneRecoversDirection) {
  const Vector uvec = {1.0, -2.0, 0.5, 3.0};
  const Vector vvec = {0.3, 1.0, -1.0};
  Matrix w(4, 3);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 3; ++j) w(i, j) = uvec[i] * vvec[j];
  }
  const Matrix u = TopKLeftSingular(w, 1);
  const double norm = Norm(uvec);
  const double sign = u(0, 0) > 0 ? 1.0 : -1.0;
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(u(i, 0), sign * uvec[i] / norm, 1e-10);
}

TEST(TopKLeftSingularTest, ProjectorMatchesFullSvd) {
  std::mt19937_64 rng(3);
  for (auto [rows, cols] : {std::pair{8u, 5u}, std::pair{5u, 8u}, std::pair{6u, 6u}}) {
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix w = testing::RandomMatrix(rows, cols, rng);
      const Eigen::MatrixXd u = ToEigen(TopKLeftSingular(w, 3));
      EXPECT_LE(MaxAbsDiff(u * u.transpose(), testing::OracleLeftProjector(w, 3)), 1e-7)
          << rows << "x" << cols;
      EXPECT_LE(MaxAbsDiff(u.transpose() * u, Eigen::MatrixXd::Identity(3, 3)), 1e-8);
    }
  }
}

TEST(TopKLeftSingularTest, RankDeficientCompletionIsDeterministicAndOrthonormal) {
  std::mt19937_64 rng(9);
  const Matrix b = testing::RandomMatrix(12, 2, rng);
  const Matrix a = testing::RandomMatrix(2, 10, rng);
  const Matrix w = MatMul(b, a);
  const Matrix u1 = TopKLeftSingular(w, 6);
  const Matrix u2 = TopKLeftSingular(w, 6);
  EXPECT_EQ(u1, u2);
  const Eigen::MatrixXd u = ToEigen(u1);
  EXPECT_LE(MaxAbsDiff(u.transpose() * u, Eigen::MatrixXd::Identity(6, 6)), 1e-8);
  // The first two columns still span the column space of w.
  const Eigen::MatrixXd p = u.leftCols(2) * u.leftCols(2).transpose();
  EXPECT_LE(MaxAbsDiff(p, testing::OracleLeftProjector(w, 2)), 1e-7);
}

TEST(TopKLeftSingularTest, ZeroMatrixFallsBackToAxes) {
  const Matrix u = TopKLeftSingular(Matrix(4, 4), 2);
  EXPECT_EQ(u(0, 0), 1.0);
  EXPECT_EQ(u(1, 1), 1.0);
}

TEST(TopKLeftSingularTest, RejectsRankOutOfRange) {
  ExpectErrorCode(ErrorCode::kInvalidRank, [] { TopKLeftSingular(Matrix(4, 3), 4); });
  ExpectErrorCode(ErrorCode::kInvalidRank, [] { TopKLeftSingular(Matrix(4, 3), 0); });
}

TEST(RankOneInverseUpdateTest, ClosedForm) {
  const Vector g = {1.0, 0.0};
  const Matrix r = RankOneInverseUpdate(Matrix::Identity(2), g);
  EXPECT_DOUBLE_EQ(r(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(r(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(r(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(r(1, 1), 1.0);
}

TEST(RankOneInverseUpdateTest, ZeroUpdateIsIdentity) {
  std::mt19937_64 rng(1);
  const Matrix z_inv = testing::RandomSpd(5, rng);
  EXPECT_EQ(RankOneInverseUpdate(z_inv, Vector(5, 0.0)), z_inv);
}

TEST(RankOneInverseUpdateTest, MatchesDenseInverse) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix z = testing::RandomSpd(5, rng);
    const Eigen::MatrixXd ez = ToEigen(z);
    Vector g(5);
    for (double& x : g) x = normal(rng);
    const Eigen::VectorXd eg = Eigen::VectorXd::Map(g.data(), 5);
    const Matrix updated = RankOneInverseUpdate(testing::FromEigen(ez.inverse()), g);
    const Eigen::MatrixXd direct = (ez + eg * eg.transpose()).inverse();
    EXPECT_LE(MaxAbsDiff(ToEigen(updated), direct), 1e-6);
    EXPECT_LE(MaxAbsDiff(ToEigen(updated) * (ez + eg * eg.transpose()),
                         Eigen::MatrixXd::Identity(5, 5)),
              1e-6);
    EXPECT_EQ(updated, updated.Transposed());
  }
}

TEST(RankOneInverseUpdateTest, RepeatedUpdatesMatchDirectInversion) {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> normal;
  constexpr std::size_t kDim = 32;
  const double lambda = 1.0;
  Matrix z_inv = Matrix::Identity(kDim);
  Eigen::MatrixXd z = lambda * Eigen::MatrixXd::Identity(kDim, kDim);
  for (int i = 0; i < 100; ++i) {
    Vector g(kDim);
    for (double& x : g) x = normal(rng);
    RankOneInverseUpdateInPlace(z_inv, g);
    const Eigen::VectorXd eg = Eigen::VectorXd::Map(g.data(), kDim);
    z += eg * eg.transpose();
  }
  EXPECT_LE(MaxAbsDiff(ToEigen(z_inv), z.inverse()), 1e-5);
}

TEST(RankOneInverseUpdateTest, NonPositiveDenominatorIsBreakdown) {
  Matrix z_inv = Matrix::Identity(2);
  for (double& x : z_inv.data()) x = -x;
  ExpectErrorCode(ErrorCode::kNumericalBreakdown,
                  [&] { RankOneInverseUpdate(z_inv, Vector{1.0, 0.0}); });
}

}  // namespace
}  // namespace rr
