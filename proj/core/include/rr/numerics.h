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

#ifndef RR_NUMERICS_H_
#define RR_NUMERICS_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace rr {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  // Throws kInvalidMatrix when data.size() != rows * cols.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix Identity(std::size_t n);
  static Matrix Diagonal(std::span<const double> diag);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  Vector col(std::size_t c) const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  Matrix Transposed() const;
  bool AllFinite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix MatMul(const Matrix& a, const Matrix& b);
// a * b^T without materializing the transpose.
Matrix MatMulTransB(const Matrix& a, const Matrix& b);
// a^T * b without materializing the transpose.
Matrix MatMulTransA(const Matrix& a, const Matrix& b);
Vector MatVec(const Matrix& a, std::span<const double> x);
double Dot(std::span<const double> a, std::span<const double> b);
double Norm(std::span<const double> a);
double FrobeniusNorm(const Matrix& a);
double Trace(const Matrix& a);

// x^T A x for symmetric A.
double QuadraticForm(const Matrix& a, std::span<const double> x);

struct EigenResult {
  Vector values;   // descending
  Matrix vectors;  // column j pairs with values[j]
};

// Full spectrum of a symmetric matrix by cyclic Jacobi rotations. Stops when
// the off-diagonal Frobenius norm drops below 1e-12 * ||S||_F or after 100
// sweeps. Throws kInvalidMatrix for non-square, non-finite or asymmetric
// (beyond 1e-10 relative) input.
EigenResult SymEig(const Matrix& s);

// Eigenvalues at or below this magnitude are treated as exact zeros by the
// entropy and square-root consumers.
inline constexpr double kEigenZeroFloor = 1e-12;

// Top-k left singular vectors of w as a rows x k matrix with orthonormal
// columns, computed from the smaller Gram matrix. Directions beyond the
// numerical rank are completed by Gram-Schmidt over the axis basis in index
// order. Throws kInvalidRank unless 1 <= k <= min(rows, cols).
Matrix TopKLeftSingular(const Matrix& w, std::size_t k);

// Sherman-Morrison: given Z^{-1}, returns (Z + g g^T)^{-1}, symmetrized.
// Throws kNumericalBreakdown if 1 + g^T Z^{-1} g <= 0.
Matrix RankOneInverseUpdate(const Matrix& z_inv, std::span<const double> g);

// In-place variant used on the bandit hot path.
void RankOneInverseUpdateInPlace(Matrix& z_inv, std::span<const double> g);

}  // namespace rr

#endif  // RR_NUMERICS_H_
