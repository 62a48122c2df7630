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

#ifndef FEDSKETCH_OBJECTIVE_HPP_
#define FEDSKETCH_OBJECTIVE_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>

#include "fedsketch/common.hpp"
#include "fedsketch/data.hpp"

namespace fedsketch {

enum class ObjectiveKind { kLogistic, kRidgeLS };

// kHalf: (lambda/2)||w||^2, kFull: lambda ||w||^2.
enum class RegConvention { kHalf, kFull };

struct Objective {
  ObjectiveKind kind = ObjectiveKind::kLogistic;
  double lambda = 1e-3;
  RegConvention reg_convention = RegConvention::kHalf;

  // Coefficient of w in the gradient (and of I in the Hessian).
  double reg() const { return reg_convention == RegConvention::kHalf ? lambda : 2.0 * lambda; }
};

void ValidateObjective(const Objective& obj);

double Loss(const Objective& obj, const Vector& w, const Dataset& data);
Vector Gradient(const Objective& obj, const Vector& w, const Dataset& data);

// Regularized Hessian (loss curvature + reg * I).
Matrix Hessian(const Objective& obj, const Vector& w, const Dataset& data);

// Unregularized loss Hessian.
Matrix LossHessian(const Objective& obj, const Vector& w, const Dataset& data);

// n x M matrix A with A^T A equal to the unregularized loss Hessian. Row i is
// the data row scaled by sqrt(curvature_i / n).
Matrix HessianSqrt(const Objective& obj, const Vector& w, const Dataset& data);

struct SmoothnessConstants {
  double l1 = 0.0;     // smoothness of the regularized objective
  double gamma = 0.0;  // strong convexity, equal to obj.reg()
};

struct PowerIterationResult {
  double eigenvalue = 0.0;
  int iterations = 0;
};

// Largest eigenvalue of a symmetric PSD operator by power iteration with a
// seeded start vector; stops at relative change <= rel_tol.
PowerIterationResult PowerIteration(
    const std::function<Vector(const Vector&)>& apply, std::size_t dim,
    std::uint64_t seed, double rel_tol = 1e-6, int max_iter = 500);

SmoothnessConstants EstimateConstants(const Objective& obj, const Dataset& data);

struct NewtonResult {
  Vector w_star;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Damped Newton from w = 0 with Armijo backtracking (factor 1/2, c = 1e-4).
// A run that hits max_iter returns its best iterate with converged == false.
NewtonResult NewtonOracle(const Objective& obj, const Dataset& data,
                          double tol = 1e-10, int max_iter = 100);

// Cholesky solve of a symmetric positive-definite system. On failure retries
// once with jitter_scale * trace / dim added to the diagonal, then throws
// `failure`.
Vector SolveSpd(const Matrix& system, const Vector& rhs, ErrorCode failure,
                double jitter_scale = 1e-12);

}  // namespace fedsketch

#endif  // FEDSKETCH_OBJECTIVE_HPP_
