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

#include <cmath>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "fedsketch/sketch.hpp"
#include "oracles.hpp"

using namespace fedsketch;
using testing::RelativeError;

namespace {

Matrix RandomMatrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Random rng(seed);
  Matrix m(rows, cols);
  for (auto& v : m.reshaped()) v = rng.Normal();
  return m;
}

double MaxAbs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

constexpr SketchKind kAllKinds[] = {SketchKind::kSRHT, SketchKind::kGaussian,
                                    SketchKind::kSparseJL, SketchKind::kIdentity};

}  // namespace

TEST_CASE("identity sketch leaves inputs unchanged") {
  const SketchOperator s = MakeSketch(SketchKind::kIdentity, 3, 3, 0);
  Vector v(3);
  v << 1.5, -2.0, 0.25;
  CHECK(s.Apply(v) == v);
  const Matrix m = RandomMatrix(3, 4, 1);
  CHECK(s.ApplyLeft(m) == m);
  CHECK(s.ApplyTranspose(v) == v);
  CHECK(Gram(s) == Matrix::Identity(3, 3));
  CHECK(SketchHessian(s, m * m.transpose()) == m * m.transpose());
  CHECK_THROWS_AS(MakeSketch(SketchKind::kIdentity, 2, 3, 0), Error);
}

TEST_CASE("dimension constraints") {
  CHECK(MakeSketch(SketchKind::kSRHT, 4, 6, 0).padded_dim() == 8);
  CHECK(NextPowerOfTwo(1) == 1);
  CHECK(NextPowerOfTwo(64) == 64);
  CHECK(NextPowerOfTwo(65) == 128);
  CHECK_NOTHROW(MakeSketch(SketchKind::kSRHT, 8, 6, 0));
  CHECK_THROWS_AS(MakeSketch(SketchKind::kSRHT, 9, 6, 0), Error);
  CHECK_THROWS_AS(MakeSketch(SketchKind::kGaussian, 7, 6, 0), Error);
  CHECK_THROWS_AS(MakeSketch(SketchKind::kSparseJL, 0, 6, 0), Error);
  const SketchOperator s = MakeSketch(SketchKind::kGaussian, 2, 3, 0);
  CHECK_THROWS_AS(s.Apply(Vector::Zero(4)), Error);
  CHECK_THROWS_AS(SketchHessian(s, Matrix::Identity(4, 4)), Error);
}

TEST_CASE("operators are pure functions of their parameters") {
  for (SketchKind kind : kAllKinds) {
    const std::size_t k = kind == SketchKind::kIdentity ? 6 : 4;
    const Vector e1 = Vector::Unit(6, 0);
    const SketchOperator a = MakeSketch(kind, k, 6, 99);
    const SketchOperator b = MakeSketch(kind, k, 6, 99);
    CHECK(a.Apply(e1) == b.Apply(e1));
    CHECK(a.Apply(e1) == a.Apply(e1));
    CHECK(a.Dense() == b.Dense());
    if (kind != SketchKind::kIdentity) {
      CHECK(MakeSketch(kind, k, 6, 100).Dense() != a.Dense());
    }
  }
}

TEST_CASE("fast SRHT on an 8x3 input matches the dense operator") {
  const SketchOperator s = MakeSketch(SketchKind::kSRHT, 4, 8, 11);
  const Matrix input = RandomMatrix(8, 3, 11);
  const Matrix dense = testing::DenseFromParameters(s);
  CHECK(MaxAbs(s.ApplyLeft(input) - dense * input) <= 1e-12);
}

TEST_CASE("fast/dense equivalence on 50 random triples") {
  Random rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const SketchKind kind = kAllKinds[trial % 4];
    const std::size_t d = 1 + rng.Below(70);
    const std::size_t limit = kind == SketchKind::kSRHT ? NextPowerOfTwo(d) : d;
    const std::size_t k = kind == SketchKind::kIdentity ? d : 1 + rng.Below(limit);
    const std::uint64_t seed = rng.NextU64();
    CAPTURE(trial);
    CAPTURE(d);
    CAPTURE(k);
    const SketchOperator s = MakeSketch(kind, k, d, seed);
    const Matrix dense = testing::DenseFromParameters(s);
    REQUIRE(dense.rows() == static_cast<Eigen::Index>(k));
    const Matrix input = RandomMatrix(static_cast<Eigen::Index>(d), 3, seed);
    CHECK(RelativeError(s.ApplyLeft(input), dense * input) <= 1e-10);
    CHECK(RelativeError(s.Dense(), dense) <= 1e-10);
    const Vector u = RandomMatrix(static_cast<Eigen::Index>(k), 1, seed + 1);
    CHECK(RelativeError(s.ApplyTranspose(u), dense.transpose() * u) <= 1e-10);
    // SRHT regularizes in the padded space; the others use the plain product.
    const Matrix full =
        kind == SketchKind::kSRHT ? testing::DensePaddedSrht(s) : dense;
    CHECK(RelativeError(Gram(s), full * full.transpose()) <= 1e-10);
  }
}

TEST_CASE("full-size SRHT preserves norms") {
  for (std::size_t d : {5u, 8u, 33u}) {
    const std::size_t pad = NextPowerOfTwo(d);
    const SketchOperator s = MakeSketch(SketchKind::kSRHT, pad, d, 3);
    const Vector v = RandomMatrix(static_cast<Eigen::Index>(d), 1, d);
    CHECK(std::abs(s.Apply(v).norm() - v.norm()) <= 1e-12 * v.norm());
  }
}

TEST_CASE("sketched Hessian") {
  const SketchOperator srht = MakeSketch(SketchKind::kSRHT, 5, 16, 4);
  const Matrix reduced = SketchHessian(srht, Matrix::Identity(16, 16));
  CHECK(MaxAbs(reduced - (16.0 / 5.0) * Matrix::Identity(5, 5)) <= 1e-10);

  const Matrix g = RandomMatrix(6, 6, 5);
  const Matrix h = g * g.transpose();
  const SketchOperator gauss = MakeSketch(SketchKind::kGaussian, 3, 6, 5);
  const Matrix dense = gauss.Dense();
  const Matrix triple = dense * h * dense.transpose();
  const Matrix fast = SketchHessian(gauss, h);
  CHECK(RelativeError(fast, triple) <= 1e-12);
  CHECK(fast == fast.transpose());
}

TEST_CASE("Gram matrices") {
  const SketchOperator srht = MakeSketch(SketchKind::kSRHT, 17, 68, 1);
  CHECK(srht.padded_dim() == 128);
  CHECK(MaxAbs(Gram(srht) - (128.0 / 17.0) * Matrix::Identity(17, 17)) <= 1e-12);
  const Matrix dense = testing::DensePaddedSrht(srht);
  CHECK(MaxAbs(dense * dense.transpose() - Gram(srht)) <= 1e-12);
  // The padded operator truncated to d columns is exactly the applied sketch.
  CHECK(MaxAbs(dense.leftCols(68) - testing::DenseFromParameters(srht)) <= 1e-15);
  Random rng(8);
  for (int t = 0; t < 20; ++t) {
    const std::size_t d = 1 + rng.Below(100);
    const std::size_t k = 1 + rng.Below(NextPowerOfTwo(d));
    const SketchOperator s = MakeSketch(SketchKind::kSRHT, k, d, rng.NextU64());
    const double scale = static_cast<double>(s.padded_dim()) / static_cast<double>(k);
    CHECK(MaxAbs(Gram(s) - scale * Matrix::Identity(k, k)) <= 1e-12);
  }
  const SketchOperator gauss = MakeSketch(SketchKind::kGaussian, 3, 8, 2);
  CHECK(MaxAbs(Gram(gauss) - gauss.Dense() * gauss.Dense().transpose()) <= 1e-14);
}

TEST_CASE("sketches are unbiased: E[S^T S] = I") {
  CHECK(TestUnbiasedness(SketchKind::kIdentity, 7, 7, 3, 1) == 0.0);
  CHECK(TestUnbiasedness(SketchKind::kGaussian, 16, 32, 500, 1) <= 0.15);
  CHECK(TestUnbiasedness(SketchKind::kSRHT, 16, 32, 500, 1) <= 0.15);
  CHECK(TestUnbiasedness(SketchKind::kSparseJL, 16, 32, 500, 1) <= 0.15);
}

// The 20-row version of this check lives in the acceptance suite; at 40 rows
// the reference run clears 20/20 on every seed list it tried.
TEST_CASE("SRHT is a subspace embedding for a rank-5 matrix") {
  const Matrix a = RandomMatrix(64, 5, 31);
  const Vector exact = Eigen::SelfAdjointEigenSolver<Matrix>(a.transpose() * a).eigenvalues();
  int good = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Matrix sa = MakeSketch(SketchKind::kSRHT, 40, 64, seed).ApplyLeft(a);
    const Vector approx =
        Eigen::SelfAdjointEigenSolver<Matrix>(sa.transpose() * sa).eigenvalues();
    const double worst = ((approx.array() / exact.array()) - 1.0).abs().maxCoeff();
    good += worst <= 0.5;
  }
  CHECK(good >= 18);
}

TEST_CASE("in-place Walsh-Hadamard matches the Sylvester matrix") {
  const Matrix input = RandomMatrix(16, 2, 4);
  Matrix fast = input;
  FastWalshHadamard(fast);
  CHECK(MaxAbs(fast - 4.0 * testing::DenseHadamard(16) * input) <= 1e-12);
}
