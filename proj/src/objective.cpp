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

#include "fedsketch/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fedsketch {
namespace {

void CheckDims(const Vector& w, const Dataset& data) {
  if (static_cast<std::size_t>(w.size()) != data.feature_dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "weight dim " + std::to_string(w.size()) + " vs feature dim " +
                    std::to_string(data.feature_dim()));
  }
  if (data.labels.size() != data.features.rows() || data.features.rows() == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "dataset rows and labels disagree");
  }
}

// log(1 + exp(-z)) without overflow.
double LogisticLoss(double z) {
  return std::log1p(std::exp(-std::abs(z))) + std::max(0.0, -z);
}

// sigma(-z) = 1 / (1 + exp(z)).
double SigmoidNeg(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

// sigma(z) * sigma(-z).
double LogisticCurvature(double z) {
  const double e = std::exp(-std::abs(z));
  return e / ((1.0 + e) * (1.0 + e));
}

Vector Margins(const Vector& w, const Dataset& data) {
  return (data.features * w).cwiseProduct(data.labels);
}

// Per-row curvature weights c_i of the unregularized loss Hessian
// (1/n) sum_i c_i x_i x_i^T.
Vector CurvatureWeights(const Objective& obj, const Vector& w, const Dataset& data) {
  const Eigen::Index n = data.features.rows();
  if (obj.kind == ObjectiveKind::kRidgeLS) return Vector::Ones(n);
  const Vector z = Margins(w, data);
  Vector c(n);
  for (Eigen::Index i = 0; i < n; ++i) c[i] = LogisticCurvature(z[i]);
  return c;
}

}  // namespace

void ValidateObjective(const Objective& obj) {
  if (!(obj.lambda > 0.0) || !std::isfinite(obj.lambda)) {
    throw Error(ErrorCode::kValidationError, "lambda must be positive and finite");
  }
}

double Loss(const Objective& obj, const Vector& w, const Dataset& data) {
  CheckDims(w, data);
  const double n = static_cast<double>(data.features.rows());
  double data_term = 0.0;
  if (obj.kind == ObjectiveKind::kLogistic) {
    const Vector z = Margins(w, data);
    for (Eigen::Index i = 0; i < z.size(); ++i) data_term += LogisticLoss(z[i]);
    data_term /= n;
  } else {
    data_term = (data.features * w - data.labels).squaredNorm() / (2.0 * n);
  }
  return data_term + 0.5 * obj.reg() * w.squaredNorm();
}

Vector Gradient(const Objective& obj, const Vector& w, const Dataset& data) {
  CheckDims(w, data);
  const double n = static_cast<double>(data.features.rows());
  Vector coeff;
  if (obj.kind == ObjectiveKind::kLogistic) {
    const Vector z = Margins(w, data);
    coeff.resize(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      coeff[i] = -data.labels[i] * SigmoidNeg(z[i]);
    }
  } else {
    coeff = data.features * w - data.labels;
  }
  return data.features.transpose() * coeff / n + obj.reg() * w;
}

Matrix LossHessian(const Objective& obj, const Vector& w, const Dataset& data) {
  CheckDims(w, data);
  const double n = static_cast<double>(data.features.rows());
  const Vector c = CurvatureWeights(obj, w, data);
  const Matrix weighted = c.asDiagonal() * data.features;
  Matrix h = data.features.transpose() * weighted / n;
  return 0.5 * (h + h.transpose());
}

Matrix Hessian(const Objective& obj, const Vector& w, const Dataset& data) {
  Matrix h = LossHessian(obj, w, data);
  h.diagonal().array() += obj.reg();
  return h;
}

Matrix HessianSqrt(const Objective& obj, const Vector& w, const Dataset& data) {
  CheckDims(w, data);
  const double n = static_cast<double>(data.features.rows());
  const Vector scale = (CurvatureWeights(obj, w, data) / n).cwiseSqrt();
  return scale.asDiagonal() * data.features;
}

PowerIterationResult PowerIteration(
    const std::function<Vector(const Vector&)>& apply, std::size_t dim,
    std::uint64_t seed, double rel_tol, int max_iter) {
  Random rng(seed);
  Vector v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = rng.Normal();
  v.normalize();

  PowerIterationResult result;
  double previous = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    const Vector u = apply(v);
    const double rayleigh = v.dot(u);
    const double norm = u.norm();
    if (!std::isfinite(rayleigh) || !std::isfinite(norm)) {
      throw Error(ErrorCode::kPowerIterationDivergence,
                  "non-finite value at iteration " + std::to_string(it));
    }
    result.eigenvalue = rayleigh;
    result.iterations = it;
    if (norm == 0.0) return result;  // zero operator
    if (it > 1 && std::abs(rayleigh - previous) <= rel_tol * std::abs(rayleigh)) {
      return result;
    }
    previous = rayleigh;
    v = u / norm;
  }
  return result;
}

SmoothnessConstants EstimateConstants(const Objective& obj, const Dataset& data) {
  const double n = static_cast<double>(data.features.rows());
  const auto gram_apply = [&](const Vector& v) -> Vector {
    return data.features.transpose() * (data.features * v) / n;
  };
  const auto power = PowerIteration(gram_apply, data.feature_dim(), 0x5eed);
  const double loss_factor = obj.kind == ObjectiveKind::kLogistic ? 0.25 : 1.0;
  return {loss_factor * power.eigenvalue + obj.reg(), obj.reg()};
}

Vector SolveSpd(const Matrix& system, const Vector& rhs, ErrorCode failure,
                double jitter_scale) {
  if (system.rows() != system.cols() || system.rows() != rhs.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "system and right-hand side disagree");
  }
  Eigen::LLT<Matrix> llt(system);
  if (llt.info() == Eigen::Success) {
    Vector x = llt.solve(rhs);
    if (x.allFinite()) return x;
  }
  Matrix jittered = system;
  const double dim = static_cast<double>(system.rows());
  jittered.diagonal().array() += jitter_scale * system.trace() / dim;
  llt.compute(jittered);
  if (llt.info() == Eigen::Success) {
    Vector x = llt.solve(rhs);
    if (x.allFinite()) return x;
  }
  throw Error(failure, "Cholesky failed after diagonal jitter");
}

NewtonResult NewtonOracle(const Objective& obj, const Dataset& data, double tol,
                          int max_iter) {
  if (!(tol > 0.0)) throw Error(ErrorCode::kValidationError, "tol must be positive");
  constexpr double kArmijoC = 1e-4;
  constexpr int kMaxHalvings = 60;

  Vector w = Vector::Zero(static_cast<Eigen::Index>(data.feature_dim()));
  NewtonResult best;
  best.w_star = w;
  best.grad_norm = std::numeric_limits<double>::infinity();

  for (int it = 0;; ++it) {
    const Vector g = Gradient(obj, w, data);
    const double grad_norm = g.norm();
    if (grad_norm < best.grad_norm) {
      best.w_star = w;
      best.grad_norm = grad_norm;
      best.iterations = it;
    }
    if (grad_norm <= tol) {
      best.converged = true;
      return best;
    }
    if (it == max_iter) return best;

    const Vector step = SolveSpd(Hessian(obj, w, data), g, ErrorCode::kSingularHessian);
    const double f0 = Loss(obj, w, data);
    const double slope = -g.dot(step);
    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h <= kMaxHalvings; ++h, t *= 0.5) {
      if (Loss(obj, w - t * step, data) <= f0 + kArmijoC * t * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // Near the optimum the predicted decrease drops below the roundoff of
      // the loss; the unit step is then in the quadratic-convergence region.
      if (-slope > 1e-15 * std::max(1.0, std::abs(f0))) return best;
      t = 1.0;
    }
    w -= t * step;
  }
}

}  // namespace fedsketch
