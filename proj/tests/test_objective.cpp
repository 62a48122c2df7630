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
#include "fedsketch/data.hpp"
#include "fedsketch/objective.hpp"
#include "oracles.hpp"

using namespace fedsketch;
using testing::RelativeError;

namespace {

struct Instance {
  Objective obj;
  Dataset data;
  Vector w;
};

Instance RandomInstance(ObjectiveKind kind, std::uint64_t seed) {
  Random rng(seed);
  const std::size_t n = 5 + rng.Below(40);
  const std::size_t dim = 2 + rng.Below(8);
  Instance inst;
  inst.obj.kind = kind;
  inst.obj.lambda = 1e-3 * (1 + rng.Below(100));
  inst.obj.reg_convention = rng.Below(2) == 0 ? RegConvention::kHalf : RegConvention::kFull;
  inst.data = SynthLogistic(n, dim, seed, 0.1);
  if (kind == ObjectiveKind::kRidgeLS) {
    for (Eigen::Index i = 0; i < inst.data.labels.size(); ++i) inst.data.labels[i] = rng.Normal();
  }
  inst.w.resize(static_cast<Eigen::Index>(dim));
  for (auto& v : inst.w) v = 0.5 * rng.Normal();
  return inst;
}

Dataset IdentityData() {
  Dataset d;
  d.features = RowMatrix::Identity(2, 2);
  d.labels = Vector::Ones(2);
  return d;
}

double MaxAbs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("gradient and Hessian agree with central finite differences") {
  for (ObjectiveKind kind : {ObjectiveKind::kLogistic, ObjectiveKind::kRidgeLS}) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const Instance inst = RandomInstance(kind, seed);
      const auto f = [&](const Vector& w) { return Loss(inst.obj, w, inst.data); };
      const auto g = [&](const Vector& w) { return Gradient(inst.obj, w, inst.data); };
      const Vector grad = g(inst.w);
      CHECK(RelativeError(testing::FiniteDifferenceGradient(f, inst.w), grad) <= 1e-5);
      const Matrix hess = Hessian(inst.obj, inst.w, inst.data);
      CHECK(RelativeError(testing::FiniteDifferenceJacobian(g, inst.w), hess) <= 1e-4);
      CHECK(MaxAbs(hess - hess.transpose()) <= 1e-12);
      const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(hess).eigenvalues().minCoeff();
      CHECK(min_eig >= inst.obj.reg() - 1e-10);
    }
  }
}

TEST_CASE("loss closed forms") {
  const Dataset d = SynthLogistic(30, 4, 2, 0.0);
  Objective logistic;
  CHECK(std::abs(Loss(logistic, Vector::Zero(4), d) - std::log(2.0)) <= 1e-15);

  Dataset one;
  one.features = RowMatrix::Constant(1, 1, 1.0);
  one.labels = Vector::Constant(1, -1.0);
  Vector w(1);
  w << 800.0;
  logistic.lambda = 0.0;
  const double value = Loss(logistic, w, one);
  CHECK(std::isfinite(value));
  CHECK(std::abs(value - 800.0) <= 1e-9);
  CHECK(Gradient(logistic, w, one).allFinite());

  Objective ridge{ObjectiveKind::kRidgeLS, 1.0, RegConvention::kHalf};
  CHECK(Loss(ridge, Vector::Zero(2), IdentityData()) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(Loss(ridge, Vector::Zero(3), IdentityData()), Error);
}

TEST_CASE("gradient at w = 0 for logistic") {
  const Dataset d = SynthLogistic(25, 5, 3, 0.2);
  const Objective obj;
  Vector expected = Vector::Zero(5);
  for (Eigen::Index i = 0; i < 25; ++i) expected -= d.labels[i] * d.features.row(i).transpose();
  expected /= 50.0;
  CHECK(MaxAbs(Gradient(obj, Vector::Zero(5), d) - expected) <= 1e-15);
}

TEST_CASE("ridge gradient vanishes at the closed-form minimizer") {
  const Instance inst = RandomInstance(ObjectiveKind::kRidgeLS, 77);
  const Matrix x = inst.data.features;
  const double n = static_cast<double>(x.rows());
  Matrix system = x.transpose() * x / n;
  system.diagonal().array() += inst.obj.reg();
  const Vector w = system.fullPivLu().solve(x.transpose() * inst.data.labels / n);
  CHECK(Gradient(inst.obj, w, inst.data).norm() <= 1e-10);
}

TEST_CASE("logistic Hessian at w = 0 is X^T X/(4n) + reg I") {
  const Dataset d = SynthLogistic(40, 6, 8, 0.0);
  const Objective obj{ObjectiveKind::kLogistic, 0.01, RegConvention::kFull};
  Matrix expected = d.features.transpose() * d.features / 160.0;
  expected.diagonal().array() += 0.02;
  CHECK(MaxAbs(Hessian(obj, Vector::Zero(6), d) - expected) <= 1e-14);
  CHECK(MaxAbs(HessianSqrt(obj, Vector::Zero(6), d) -
               Matrix(d.features) / (2.0 * std::sqrt(40.0))) <= 1e-15);
}

TEST_CASE("Hessian square root reproduces the Hessian") {
  for (ObjectiveKind kind : {ObjectiveKind::kLogistic, ObjectiveKind::kRidgeLS}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const Instance inst = RandomInstance(kind, 100 + seed);
      const Matrix a = HessianSqrt(inst.obj, inst.w, inst.data);
      CHECK(a.rows() == inst.data.features.rows());
      const Matrix hess = Hessian(inst.obj, inst.w, inst.data);
      Matrix rebuilt = a.transpose() * a;
      rebuilt.diagonal().array() += inst.obj.reg();
      CHECK(MaxAbs(rebuilt - hess) <= 1e-10 * (1.0 + MaxAbs(hess)));
      const Matrix explicit_loss = testing::ExplicitLossHessian(inst.obj, inst.w, inst.data);
      CHECK(MaxAbs(a.transpose() * a - explicit_loss) <= 1e-12 * (1.0 + MaxAbs(explicit_loss)));
      CHECK(MaxAbs(LossHessian(inst.obj, inst.w, inst.data) - explicit_loss) <= 1e-12);
    }
  }
}

TEST_CASE("Hessian square root on an explicit 3x2 instance") {
  Dataset d;
  d.features.resize(3, 2);
  d.features << 1.0, 2.0, -0.5, 0.25, 3.0, -1.0;
  d.labels.resize(3);
  d.labels << 1, -1, 1;
  Vector w(2);
  w << 0.3, -0.2;
  const Objective obj;
  Matrix expected(3, 2);
  for (int i = 0; i < 3; ++i) {
    const double z = d.labels[i] * (d.features(i, 0) * w[0] + d.features(i, 1) * w[1]);
    const double s = 1.0 / (1.0 + std::exp(-z));
    const double scale = std::sqrt(s * (1.0 - s) / 3.0);
    expected(i, 0) = scale * d.features(i, 0);
    expected(i, 1) = scale * d.features(i, 1);
  }
  CHECK(MaxAbs(HessianSqrt(obj, w, d) - expected) <= 1e-15);
}

TEST_CASE("smoothness constants") {
  const Objective ridge{ObjectiveKind::kRidgeLS, 0.1, RegConvention::kHalf};
  const SmoothnessConstants c = EstimateConstants(ridge, IdentityData());
  CHECK(c.l1 == doctest::Approx(0.6).epsilon(1e-6));
  CHECK(c.gamma == 0.1);
  const Objective logistic{ObjectiveKind::kLogistic, 0.1, RegConvention::kFull};
  const SmoothnessConstants c2 = EstimateConstants(logistic, IdentityData());
  CHECK(c2.gamma == doctest::Approx(0.2));
  CHECK(c2.l1 == doctest::Approx(0.125 + 0.2).epsilon(1e-6));
}

TEST_CASE("power iteration finds the top eigenvalue of a known spectrum") {
  Random rng(9);
  Matrix g(5, 5);
  for (auto& v : g.reshaped()) v = rng.Normal();
  const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
  Vector spectrum(5);
  spectrum << 4.0, 2.0, 1.0, 0.5, 0.1;
  const Matrix a = q * spectrum.asDiagonal() * q.transpose();
  const PowerIterationResult r =
      PowerIteration([&](const Vector& v) { return Vector(a * v); }, 5, 0x5eed);
  const double exact = Eigen::SelfAdjointEigenSolver<Matrix>(a).eigenvalues().maxCoeff();
  CHECK(std::abs(r.eigenvalue - exact) <= 1e-5 * exact);
  CHECK(r.iterations <= 500);
  CHECK_THROWS_AS(
      PowerIteration([](const Vector& v) { return Vector(v * std::nan("")); }, 3, 1), Error);
}

TEST_CASE("Newton oracle") {
  SUBCASE("ridge needs one step") {
    const Instance inst = RandomInstance(ObjectiveKind::kRidgeLS, 5);
    const NewtonResult r = NewtonOracle(inst.obj, inst.data);
    CHECK(r.converged);
    CHECK(r.iterations == 1);
    CHECK(r.grad_norm <= 1e-10);
  }
  SUBCASE("logistic on a small synthetic problem") {
    const Dataset d = SynthLogistic(200, 10, 3, 0.1);
    const Objective obj;
    const NewtonResult r = NewtonOracle(obj, d, 1e-10);
    CHECK(r.converged);
    CHECK(r.iterations <= 15);
    CHECK(r.grad_norm <= 1e-10);
    // The pure Newton sequence from w = 0 reaches the same point.
    const auto iterates = testing::CentralizedNewtonIterates(obj, d, 25);
    CHECK((iterates.back() - r.w_star).norm() <= 1e-8);
    const NewtonResult again = NewtonOracle(obj, d, 1e-10);
    CHECK(again.w_star == r.w_star);
    const double best = Loss(obj, r.w_star, d);
    Random rng(21);
    for (int t = 0; t < 100; ++t) {
      Vector w(10);
      for (auto& v : w) v = rng.Normal();
      CHECK(best <= Loss(obj, w, d));
    }
  }
  SUBCASE("unreachable tolerance reports the failure") {
    const Dataset d = SynthLogistic(50, 4, 1, 0.1);
    const NewtonResult r = NewtonOracle(Objective{}, d, 1e-10, 1);
    CHECK_FALSE(r.converged);
    CHECK(r.grad_norm > 1e-10);
  }
}

TEST_CASE("Full convention at lambda equals Half at 2 lambda exactly") {
  for (ObjectiveKind kind : {ObjectiveKind::kLogistic, ObjectiveKind::kRidgeLS}) {
    const Instance inst = RandomInstance(kind, 55);
    const Objective full{kind, 0.004, RegConvention::kFull};
    const Objective half{kind, 0.008, RegConvention::kHalf};
    CHECK(Gradient(full, inst.w, inst.data) == Gradient(half, inst.w, inst.data));
    CHECK(Hessian(full, inst.w, inst.data) == Hessian(half, inst.w, inst.data));
    CHECK(Loss(full, inst.w, inst.data) == Loss(half, inst.w, inst.data));
  }
}
