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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rr/error.h"

namespace rr {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorCode::kInvalidMatrix,
                "entry count " + std::to_string(data_.size()) + " != " +
                    std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) {
      throw Error(ErrorCode::kInvalidMatrix, "ragged initializer");
    }
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::Identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::Diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Vector Matrix::col(std::size_t c) const {
  Vector out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

Matrix Matrix::Transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  }
  return t;
}

bool Matrix::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

namespace {

void RequireShape(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::kInvalidMatrix, what);
}

}  // namespace

Matrix MatMul(const Matrix& a, const Matrix& b) {
  RequireShape(a.cols() == b.rows(), "MatMul: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Matrix MatMulTransB(const Matrix& a, const Matrix& b) {
  RequireShape(a.cols() == b.cols(), "MatMulTransB: inner dimensions differ");
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = Dot(a.row(i), b.row(j));
  }
  return out;
}

Matrix MatMulTransA(const Matrix& a, const Matrix& b) {
  RequireShape(a.rows() == b.rows(), "MatMulTransA: inner dimensions differ");
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto a_row = a.row(k);
    auto b_row = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a_row[i];
      if (aki == 0.0) continue;
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aki * b_row[j];
    }
  }
  return out;
}

Vector MatVec(const Matrix& a, std::span<const double> x) {
  RequireShape(a.cols() == x.size(), "MatVec: dimension mismatch");
  Vector out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = Dot(a.row(i), x);
  return out;
}

double Dot(std::span<const double> a, std::span<const double> b) {
  // Four partial sums let the compiler keep several FMA chains in flight.
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

double Norm(std::span<const double> a) { return std::sqrt(Dot(a, a)); }

double FrobeniusNorm(const Matrix& a) { return Norm(a.data()); }

double Trace(const Matrix& a) {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(a.rows(), a.cols()); ++i) t += a(i, i);
  return t;
}

double QuadraticForm(const Matrix& a, std::span<const double> x) {
  RequireShape(a.rows() == a.cols() && a.cols() == x.size(),
               "QuadraticForm: dimension mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    if (x[i] == 0.0) continue;
    total += x[i] * Dot(a.row(i), x);
  }
  return total;
}

EigenResult SymEig(const Matrix& s) {
  if (s.rows() != s.cols()) {
    throw Error(ErrorCode::kInvalidMatrix, "SymEig: matrix is not square");
  }
  if (!s.AllFinite()) {
    throw Error(ErrorCode::kInvalidMatrix, "SymEig: non-finite entry");
  }
  const std::size_t n = s.rows();
  double max_abs = 0.0;
  for (double v : s.data()) max_abs = std::max(max_abs, std::abs(v));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(s(i, j) - s(j, i)) > 1e-10 * std::max(1.0, max_abs)) {
        throw Error(ErrorCode::kInvalidMatrix, "SymEig: matrix is not symmetric");
      }
    }
  }

  Matrix a = s;
  // Work on the exactly symmetric part.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double m = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = m;
      a(j, i) = m;
    }
  }
  Matrix v = Matrix::Identity(n);
  const double threshold = 1e-12 * FrobeniusNorm(a);

  auto off_norm = [&] {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * a(i, j) * a(i, j);
    }
    return std::sqrt(off);
  };

  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_norm() <= threshold) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p);
          const double akq = a(k, q);
          const double new_kp = c * akp - sn * akq;
          const double new_kq = sn * akp + c * akq;
          a(k, p) = new_kp;
          a(p, k) = new_kp;
          a(k, q) = new_kq;
          a(q, k) = new_kq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

  EigenResult result{Vector(n), Matrix(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    result.values[j] = a(order[j], order[j]);
    for (std::size_t k = 0; k < n; ++k) result.vectors(k, j) = v(k, order[j]);
  }
  return result;
}

namespace {

// Removes the components of x along the first `count` columns of basis, twice
// for numerical safety, and returns the remaining norm.
double Orthogonalize(Vector& x, const Matrix& basis, std::size_t count) {
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < count; ++j) {
      double proj = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) proj += basis(i, j) * x[i];
      for (std::size_t i = 0; i < x.size(); ++i) x[i] -= proj * basis(i, j);
    }
  }
  return Norm(x);
}

}  // namespace

Matrix TopKLeftSingular(const Matrix& w, std::size_t k) {
  const std::size_t rows = w.rows();
  const std::size_t cols = w.cols();
  if (k == 0 || k > std::min(rows, cols)) {
    throw Error(ErrorCode::kInvalidRank,
                "k=" + std::to_string(k) + " outside [1, " +
                    std::to_string(std::min(rows, cols)) + "]");
  }
  if (!w.AllFinite()) {
    throw Error(ErrorCode::kInvalidMatrix, "TopKLeftSingular: non-finite entry");
  }

  Matrix u(rows, k);
  std::size_t filled = 0;
  const bool use_row_gram = rows <= cols;
  const EigenResult eig =
      use_row_gram ? SymEig(MatMulTransB(w, w)) : SymEig(MatMulTransA(w, w));
  const double floor = kEigenZeroFloor * std::max(1.0, eig.values.front());

  for (std::size_t j = 0; j < k; ++j) {
    if (eig.values[j] <= floor) break;
    Vector x;
    if (use_row_gram) {
      x = eig.vectors.col(j);
    } else {
      x = MatVec(w, eig.vectors.col(j));
    }
    const double norm = Orthogonalize(x, u, filled);
    if (norm <= 1e-8 * (use_row_gram ? 1.0 : std::sqrt(eig.values[j]))) break;
    for (std::size_t i = 0; i < rows; ++i) u(i, filled) = x[i] / norm;
    ++filled;
  }

  // Complete beyond the numerical rank from the axis basis, in index order.
  for (std::size_t axis = 0; filled < k && axis < rows; ++axis) {
    Vector x(rows, 0.0);
    x[axis] = 1.0;
    const double norm = Orthogonalize(x, u, filled);
    if (norm < 1e-6) continue;
    for (std::size_t i = 0; i < rows; ++i) u(i, filled) = x[i] / norm;
    ++filled;
  }
  return u;
}

void RankOneInverseUpdateInPlace(Matrix& z_inv, std::span<const double> g) {
  const std::size_t n = z_inv.rows();
  if (z_inv.cols() != n || g.size() != n) {
    throw Error(ErrorCode::kInvalidMatrix, "RankOneInverseUpdate: dimension mismatch");
  }
  const Vector zg = MatVec(z_inv, g);
  const double denom = 1.0 + Dot(g, zg);
  if (!(denom > 0.0) || !std::isfinite(denom)) {
    throw Error(ErrorCode::kNumericalBreakdown,
                "1 + g^T Z^{-1} g = " + std::to_string(denom));
  }
  // (zg[i] * zg[j]) / denom is bitwise symmetric in i and j, so an exactly
  // symmetric input stays exactly symmetric.
  for (std::size_t i = 0; i < n; ++i) {
    if (zg[i] == 0.0) continue;
    auto row = z_inv.row(i);
    const double zi = zg[i];
    for (std::size_t j = 0; j < n; ++j) row[j] -= (zi * zg[j]) / denom;
  }
}

Matrix RankOneInverseUpdate(const Matrix& z_inv, std::span<const double> g) {
  Matrix out = z_inv;
  if (out.rows() != out.cols()) {
    throw Error(ErrorCode::kInvalidMatrix, "RankOneInverseUpdate: Z^{-1} is not square");
  }
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t j = i + 1; j < out.cols(); ++j) {
      const double m = 0.5 * (out(i, j) + out(j, i));
      out(i, j) = m;
      out(j, i) = m;
    }
  }
  RankOneInverseUpdateInPlace(out, g);
  return out;
}

}  // namespace rr
