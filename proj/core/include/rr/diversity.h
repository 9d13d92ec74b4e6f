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

#ifndef RR_DIVERSITY_H_
#define RR_DIVERSITY_H_

#include <cstddef>

#include "rr/numerics.h"

namespace rr {

// n >= 1 embedded items, one unit-L2 row each.
class EmbeddingSet {
 public:
  // Throws kInvalidEmbedding if empty, non-finite or any row norm is off 1 by
  // more than 1e-6.
  explicit EmbeddingSet(Matrix rows);

  // Normalizes every row; an all-zero row becomes the first basis vector.
  static EmbeddingSet Normalized(Matrix rows);

  std::size_t n() const { return rows_.rows(); }
  std::size_t dim() const { return rows_.cols(); }
  const Matrix& vectors() const { return rows_; }
  std::span<const double> row(std::size_t i) const { return rows_.row(i); }

 private:
  Matrix rows_;
};

// Stacks rows of `head` followed by the last `tail_count` rows of `tail`.
// Either side may be absent (nullptr); at least one row must remain.
EmbeddingSet StackEmbeddings(const EmbeddingSet* head, const EmbeddingSet* tail,
                             std::size_t tail_count);

// Cosine kernel K = E E^T.
Matrix SimilarityMatrix(const EmbeddingSet& e);

// exp of the Shannon entropy of the eigenvalues of K / n, with 0 log 0 = 0.
// K must be symmetric PSD with unit diagonal. Eigenvalues in [-1e-8, 1e-12)
// count as zero; anything below -1e-8 throws kInvalidKernel.
double VendiScore(const Matrix& kernel);

// Same quantity computed from the embeddings directly. When n > dim the
// spectrum comes from the dim x dim matrix E^T E / n, which shares the
// non-zero eigenvalues of K / n.
double VendiScore(const EmbeddingSet& e);

}  // namespace rr

#endif  // RR_DIVERSITY_H_
