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

#include "fedsketch/sketch.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace fedsketch {

std::string_view SketchKindName(SketchKind kind) {
  switch (kind) {
    case SketchKind::kSRHT: return "srht";
    case SketchKind::kGaussian: return "gaussian";
    case SketchKind::kSparseJL: return "sparsejl";
    case SketchKind::kIdentity: return "identity";
  }
  return "unknown";
}

std::size_t NextPowerOfTwo(std::size_t d) {
  std::size_t p = 1;
  while (p < d) p <<= 1;
  return p;
}

void FastWalshHadamard(Matrix& columns) {
  const Eigen::Index n = columns.rows();
  if (n == 0 || (n & (n - 1)) != 0) {
    throw Error(ErrorCode::kInvalidDimensions, "Hadamard size must be a power of two");
  }
  for (Eigen::Index c = 0; c < columns.cols(); ++c) {
    double* y = columns.col(c).data();
    for (Eigen::Index h = 1; h < n; h *= 2) {
      for (Eigen::Index i = 0; i < n; i += 2 * h) {
        for (Eigen::Index j = i; j < i + h; ++j) {
          const double a = y[j];
          const double b = y[j + h];
          y[j] = a + b;
          y[j + h] = a - b;
        }
      }
    }
  }
}

SketchOperator::SketchOperator(SketchKind kind, std::size_t k, std::size_t d,
                               std::uint64_t seed)
    : kind_(kind), k_(k), d_(d), d_pad_(d), seed_(seed) {
  if (d == 0 || k == 0) {
    throw Error(ErrorCode::kInvalidDimensions, "sketch needs k >= 1 and d >= 1");
  }
  Random rng(seed);
  switch (kind) {
    case SketchKind::kIdentity:
      if (k != d) {
        throw Error(ErrorCode::kInvalidDimensions,
                    "identity sketch needs k == d, got k=" + std::to_string(k) +
                        ", d=" + std::to_string(d));
      }
      break;
    case SketchKind::kSRHT: {
      d_pad_ = NextPowerOfTwo(d);
      if (k > d_pad_) {
        throw Error(ErrorCode::kInvalidDimensions,
                    "SRHT needs k <= d_pad=" + std::to_string(d_pad_));
      }
      signs_.resize(d_pad_);
      for (double& s : signs_) s = rng.Sign();
      // Partial Fisher-Yates: the first k slots are a uniform k-subset.
      std::vector<std::size_t> pool(d_pad_);
      std::iota(pool.begin(), pool.end(), std::size_t{0});
      for (std::size_t i = 0; i < k; ++i) {
        std::swap(pool[i], pool[i + rng.Below(d_pad_ - i)]);
      }
      rows_.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
      break;
    }
    case SketchKind::kGaussian: {
      if (k > d) throw Error(ErrorCode::kInvalidDimensions, "Gaussian sketch needs k <= d");
      const double scale = 1.0 / std::sqrt(static_cast<double>(k));
      gaussian_.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
      for (Eigen::Index r = 0; r < gaussian_.rows(); ++r) {
        for (Eigen::Index c = 0; c < gaussian_.cols(); ++c) {
          gaussian_(r, c) = scale * rng.Normal();
        }
      }
      break;
    }
    case SketchKind::kSparseJL: {
      if (k > d) throw Error(ErrorCode::kInvalidDimensions, "SparseJL sketch needs k <= d");
      rows_.resize(d);
      signs_.resize(d);
      for (std::size_t j = 0; j < d; ++j) {
        rows_[j] = rng.Below(k);
        signs_[j] = rng.Sign();
      }
      break;
    }
  }
}

Matrix SketchOperator::ApplyLeft(const Matrix& input) const {
  if (static_cast<std::size_t>(input.rows()) != d_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "sketch input has " + std::to_string(input.rows()) + " rows, expected " +
                    std::to_string(d_));
  }
  const auto k = static_cast<Eigen::Index>(k_);
  switch (kind_) {
    case SketchKind::kIdentity:
      return input;
    case SketchKind::kGaussian:
      return gaussian_ * input;
    case SketchKind::kSparseJL: {
      Matrix out = Matrix::Zero(k, input.cols());
      for (std::size_t j = 0; j < d_; ++j) {
        out.row(static_cast<Eigen::Index>(rows_[j])) +=
            signs_[j] * input.row(static_cast<Eigen::Index>(j));
      }
      return out;
    }
    case SketchKind::kSRHT: {
      Matrix padded = Matrix::Zero(static_cast<Eigen::Index>(d_pad_), input.cols());
      for (std::size_t j = 0; j < d_; ++j) {
        padded.row(static_cast<Eigen::Index>(j)) =
            signs_[j] * input.row(static_cast<Eigen::Index>(j));
      }
      FastWalshHadamard(padded);
      // sqrt(d_pad / k) * (1 / sqrt(d_pad)) for the unnormalized transform.
      const double scale = 1.0 / std::sqrt(static_cast<double>(k_));
      Matrix out(k, input.cols());
      for (Eigen::Index r = 0; r < k; ++r) {
        out.row(r) = scale * padded.row(static_cast<Eigen::Index>(rows_[r]));
      }
      return out;
    }
  }
  return {};
}

Vector SketchOperator::Apply(const Vector& v) const {
  return ApplyLeft(Matrix(v)).col(0);
}

Vector SketchOperator::ApplyTranspose(const Vector& u) const {
  if (static_cast<std::size_t>(u.size()) != k_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "lift input has " + std::to_string(u.size()) + " entries, expected " +
                    std::to_string(k_));
  }
  const auto d = static_cast<Eigen::Index>(d_);
  switch (kind_) {
    case SketchKind::kIdentity:
      return u;
    case SketchKind::kGaussian:
      return gaussian_.transpose() * u;
    case SketchKind::kSparseJL: {
      Vector out(d);
      for (Eigen::Index j = 0; j < d; ++j) {
        out[j] = signs_[j] * u[static_cast<Eigen::Index>(rows_[j])];
      }
      return out;
    }
    case SketchKind::kSRHT: {
      Matrix scattered = Matrix::Zero(static_cast<Eigen::Index>(d_pad_), 1);
      for (std::size_t r = 0; r < k_; ++r) {
        scattered(static_cast<Eigen::Index>(rows_[r]), 0) = u[static_cast<Eigen::Index>(r)];
      }
      FastWalshHadamard(scattered);
      const double scale = 1.0 / std::sqrt(static_cast<double>(k_));
      Vector out(d);
      for (Eigen::Index j = 0; j < d; ++j) out[j] = scale * signs_[j] * scattered(j, 0);
      return out;
    }
  }
  return {};
}

Matrix SketchOperator::Dense() const {
  return ApplyLeft(Matrix::Identity(static_cast<Eigen::Index>(d_),
                                    static_cast<Eigen::Index>(d_)));
}

Matrix SketchHessian(const SketchOperator& sketch, const Matrix& hessian) {
  if (hessian.rows() != hessian.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "Hessian must be square");
  }
  const Matrix left = sketch.ApplyLeft(hessian);                   // S H
  const Matrix both = sketch.ApplyLeft(left.transpose());         // S (S H)^T
  return 0.5 * (both + both.transpose());
}

Matrix Gram(const SketchOperator& sketch) {
  const auto k = static_cast<Eigen::Index>(sketch.k());
  switch (sketch.kind()) {
    case SketchKind::kIdentity:
      return Matrix::Identity(k, k);
    case SketchKind::kSRHT:
      return (static_cast<double>(sketch.padded_dim()) / static_cast<double>(sketch.k())) *
             Matrix::Identity(k, k);
    default: {
      const Matrix dense = sketch.Dense();
      return dense * dense.transpose();
    }
  }
}

double TestUnbiasedness(SketchKind kind, std::size_t k, std::size_t d,
                        std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw Error(ErrorCode::kInvalidDimensions, "need at least one trial");
  const auto dim = static_cast<Eigen::Index>(d);
  Matrix sum = Matrix::Zero(dim, dim);
  for (std::size_t t = 0; t < trials; ++t) {
    const SketchOperator sketch(kind, k, d, DeriveSeed(seed, t));
    const Matrix dense = sketch.Dense();
    sum.noalias() += dense.transpose() * dense;
  }
  const Matrix mean = sum / static_cast<double>(trials);
  return (mean - Matrix::Identity(dim, dim)).cwiseAbs().maxCoeff();
}

}  // namespace fedsketch
