/*
 * Copyright 2026 The fedsketch Authors
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FEDSKETCH_SKETCH_HPP_
#define FEDSKETCH_SKETCH_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "fedsketch/common.hpp"

namespace fedsketch {

enum class SketchKind { kSRHT, kGaussian, kSparseJL, kIdentity };

std::string_view SketchKindName(SketchKind kind);

std::size_t NextPowerOfTwo(std::size_t d);

// Seeded k x d random projection. Immutable after construction; the action
// is a pure function of (kind, k, d, seed).
//
//   SRHT      S = sqrt(d_pad / k) P H D, with D a random sign diagonal, H the
//             orthonormal Walsh-Hadamard transform of size d_pad, and P a
//             uniform sample of k distinct rows. Inputs are zero-padded from d
//             to d_pad and lifted outputs truncated back to d.
//   Gaussian  i.i.d. N(0, 1/k) entries.
//   SparseJL  CountSketch: column j holds a single +-1 in a uniform row.
//   Identity  S = I_d (k must equal d).
class SketchOperator {
 public:
  SketchOperator(SketchKind kind, std::size_t k, std::size_t d, std::uint64_t seed);

  SketchKind kind() const { return kind_; }
  std::size_t k() const { return k_; }
  std::size_t d() const { return d_; }
  std::size_t padded_dim() const { return d_pad_; }
  std::uint64_t seed() const { return seed_; }

  // SRHT/SparseJL: per-coordinate signs (length d_pad / d).
  std::span<const double> signs() const { return signs_; }
  // SRHT: sampled Hadamard rows in output order. SparseJL: target row of each
  // input column.
  std::span<const std::size_t> rows() const { return rows_; }

  Vector Apply(const Vector& v) const;           // S v
  Matrix ApplyLeft(const Matrix& input) const;   // S * input, input is d x c
  Vector ApplyTranspose(const Vector& u) const;  // S^T u, length d
  Matrix Dense() const;                          // k x d

 private:
  SketchKind kind_;
  std::size_t k_;
  std::size_t d_;
  std::size_t d_pad_;
  std::uint64_t seed_;
  std::vector<double> signs_;
  std::vector<std::size_t> rows_;
  Matrix gaussian_;
};

inline SketchOperator MakeSketch(SketchKind kind, std::size_t k, std::size_t d,
                                 std::uint64_t seed) {
  return SketchOperator(kind, k, d, seed);
}

// In-place unnormalized Walsh-Hadamard transform of each column; the row
// count must be a power of two.
void FastWalshHadamard(Matrix& columns);

// S H S^T, symmetrized.
Matrix SketchHessian(const SketchOperator& sketch, const Matrix& hessian);

// S S^T. Analytic for SRHT ((d_pad / k) I) and Identity.
Matrix Gram(const SketchOperator& sketch);

// Server-side system in sketch space: K = S H S^T + reg S S^T, g_s = S g.
struct SketchedSystem {
  Matrix k_matrix;
  Vector g_s;
  Matrix gram;
};

// Max |mean(S^T S) - I| entry over `trials` independently seeded operators.
// With the scalings above S^T S is already an unbiased estimator of I on the
// first d coordinates for every kind.
double TestUnbiasedness(SketchKind kind, std::size_t k, std::size_t d,
                        std::size_t trials, std::uint64_t seed);

}  // namespace fedsketch

#endif  // FEDSKETCH_SKETCH_HPP_
