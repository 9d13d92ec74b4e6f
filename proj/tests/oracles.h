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

// Test-only reference computations. Nothing here calls into the rr numerics
// routines it is used to check.

#ifndef RR_TESTS_ORACLES_H_
#define RR_TESTS_ORACLES_H_

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "rr/adapters.h"
#include "rr/numerics.h"

namespace rr::testing {

inline Eigen::MatrixXd ToEigen(const Matrix& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  }
  return out;
}

inline Matrix FromEigen(const Eigen::MatrixXd& m) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  }
  return out;
}

inline Matrix RandomMatrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                           double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (double& x : m.data()) x = normal(rng);
  return m;
}

inline Matrix RandomSymmetric(std::size_t n, std::mt19937_64& rng) {
  Matrix a = RandomMatrix(n, n, rng);
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
  }
  return s;
}

inline Matrix RandomSpd(std::size_t n, std::mt19937_64& rng) {
  Eigen::MatrixXd a = ToEigen(RandomMatrix(n, n, rng));
  Eigen::MatrixXd s = a * a.transpose() + Eigen::MatrixXd::Identity(n, n);
  return FromEigen(s);
}

// Eigenvalues in descending order from Eigen's self-adjoint solver.
inline std::vector<double> OracleEigenvalues(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(ToEigen(s));
  Eigen::VectorXd ev = solver.eigenvalues();
  std::vector<double> out(ev.data(), ev.data() + ev.size());
  std::sort(out.rbegin(), out.rend());
  return out;
}

// Projector onto the top-k left singular subspace from a full SVD.
inline Eigen::MatrixXd OracleLeftProjector(const Matrix& w, int k) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(ToEigen(w), Eigen::ComputeFullU);
  Eigen::MatrixXd u = svd.matrixU().leftCols(k);
  return u * u.transpose();
}

// exp(-sum p log p) over the eigenvalues of K/n, computed with Eigen and a
// plain loop.
inline double OracleVendi(const Eigen::MatrixXd& kernel) {
  const double n = static_cast<double>(kernel.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(kernel / n);
  double h = 0.0;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    const double p = solver.eigenvalues()(i);
    if (p > 1e-15) h -= p * std::log(p);
  }
  return std::exp(h);
}

// Low-rank pair with float-representable entries so storage round trips are
// exact.
inline LowRankPair RandomPair(std::size_t d_out, std::size_t d_in, std::size_t rank,
                              std::mt19937_64& rng, double scale = 1.0) {
  LowRankPair pair{RandomMatrix(rank, d_in, rng), RandomMatrix(d_out, rank, rng), scale};
  for (Matrix* m : {&pair.a, &pair.b}) {
    std::span<double> data = m->data();
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(data[i]);
  }
  return pair;
}

// base + sum(sign * weight * scale * B * A) with Eigen products.
inline Eigen::MatrixXd OracleMaterialize(const WeightState& state, const std::string& layer,
                                         const Matrix& base) {
  Eigen::MatrixXd w = ToEigen(base);
  for (const WeightTerm& term : state.terms) {
    const auto it = term.delta->layers.find(layer);
    if (it == term.delta->layers.end()) continue;
    w += term.sign * term.weight * it->second.scale * ToEigen(it->second.b) *
         ToEigen(it->second.a);
  }
  return w;
}

inline double MaxAbsDiff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace rr::testing

#endif  // RR_TESTS_ORACLES_H_
