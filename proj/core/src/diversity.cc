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

#include "rr/diversity.h"

#include <cmath>
#include <string>

#include "rr/error.h"

namespace rr {

EmbeddingSet::EmbeddingSet(Matrix rows) : rows_(std::move(rows)) {
  if (rows_.rows() == 0 || rows_.cols() == 0) {
    throw Error(ErrorCode::kInvalidEmbedding, "embedding set is empty");
  }
  if (!rows_.AllFinite()) {
    throw Error(ErrorCode::kInvalidEmbedding, "non-finite embedding entry");
  }
  for (std::size_t i = 0; i < rows_.rows(); ++i) {
    const double norm = Norm(rows_.row(i));
    if (std::abs(norm - 1.0) > 1e-6) {
      throw Error(ErrorCode::kInvalidEmbedding,
                  "row " + std::to_string(i) + " has norm " + std::to_string(norm));
    }
  }
}

EmbeddingSet EmbeddingSet::Normalized(Matrix rows) {
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    auto r = rows.row(i);
    const double norm = Norm(r);
    if (norm == 0.0 || !std::isfinite(norm)) {
      std::fill(r.begin(), r.end(), 0.0);
      if (!r.empty()) r[0] = 1.0;
      continue;
    }
    for (double& x : r) x /= norm;
  }
  return EmbeddingSet(std::move(rows));
}

EmbeddingSet StackEmbeddings(const EmbeddingSet* head, const EmbeddingSet* tail,
                             std::size_t tail_count) {
  const std::size_t head_n = head ? head->n() : 0;
  const std::size_t take = tail ? std::min(tail_count, tail->n()) : 0;
  if (head_n + take == 0) {
    throw Error(ErrorCode::kInvalidEmbedding, "nothing to stack");
  }
  const std::size_t dim = head ? head->dim() : tail->dim();
  if (head && tail && head->dim() != tail->dim()) {
    throw Error(ErrorCode::kInvalidEmbedding, "embedding dimensions differ");
  }
  Matrix out(head_n + take, dim);
  for (std::size_t i = 0; i < head_n; ++i) {
    std::copy(head->row(i).begin(), head->row(i).end(), out.row(i).begin());
  }
  for (std::size_t i = 0; i < take; ++i) {
    auto src = tail->row(tail->n() - take + i);
    std::copy(src.begin(), src.end(), out.row(head_n + i).begin());
  }
  return EmbeddingSet(std::move(out));
}

Matrix SimilarityMatrix(const EmbeddingSet& e) {
  Matrix k = MatMulTransB(e.vectors(), e.vectors());
  // Exact unit diagonal and symmetry regardless of round-off.
  for (std::size_t i = 0; i < k.rows(); ++i) {
    k(i, i) = 1.0;
    for (std::size_t j = i + 1; j < k.cols(); ++j) k(j, i) = k(i, j);
  }
  return k;
}

namespace {

double EntropyExp(const Vector& eigenvalues) {
  double entropy = 0.0;
  for (double lambda : eigenvalues) {
    if (lambda < -1e-8) {
      throw Error(ErrorCode::kInvalidKernel,
                  "negative eigenvalue " + std::to_string(lambda));
    }
    if (lambda < kEigenZeroFloor) continue;
    entropy -= lambda * std::log(lambda);
  }
  return std::exp(entropy);
}

}  // namespace

double VendiScore(const Matrix& kernel) {
  if (kernel.rows() == 0 || kernel.rows() != kernel.cols()) {
    throw Error(ErrorCode::kInvalidKernel, "kernel must be square and non-empty");
  }
  const std::size_t n = kernel.rows();
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(kernel(i, i) - 1.0) > 1e-6) {
      throw Error(ErrorCode::kInvalidKernel, "kernel diagonal must be 1");
    }
  }
  Matrix scaled = kernel;
  for (double& x : scaled.data()) x /= static_cast<double>(n);
  EigenResult eig;
  try {
    eig = SymEig(scaled);
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidKernel, e.what());
  }
  return EntropyExp(eig.values);
}

double VendiScore(const EmbeddingSet& e) {
  if (e.n() <= e.dim()) return VendiScore(SimilarityMatrix(e));
  Matrix cov = MatMulTransA(e.vectors(), e.vectors());
  for (double& x : cov.data()) x /= static_cast<double>(e.n());
  return EntropyExp(SymEig(cov).values);
}

}  // namespace rr
