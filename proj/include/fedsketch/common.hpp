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

#ifndef FEDSKETCH_COMMON_HPP_
#define FEDSKETCH_COMMON_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace fedsketch {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class ErrorCode {
  // data
  kMalformedLine,
  kNonIncreasingIndex,
  kMoreThanTwoClasses,
  kEmptyInput,
  kInvalidNoise,
  kTooManyClients,
  // shared
  kDimensionMismatch,
  kInvalidDimensions,
  // objective
  kPowerIterationDivergence,
  kSingularHessian,
  kDidNotConverge,
  // fedsim
  kInvalidConstants,
  kWeightMismatch,
  kSingularSketchedSystem,
  kNonFiniteIterate,
  kLineSearchFailed,
  // cli
  kParseError,
  kUnknownKey,
  kMissingRequired,
  kValidationError,
  kIoError,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every failure in the library surfaces as this exception; `code()` names the
// failure class so callers (and the CLI) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

// SplitMix64 finalizer. Used to derive independent child seeds from a master
// seed (per round, per client) without correlating streams.
constexpr std::uint64_t MixSeed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t DeriveSeed(std::uint64_t parent,
                                   std::uint64_t stream) noexcept {
  return MixSeed(MixSeed(parent) ^ (stream * 0xd1b54a32d192ed03ULL + 1));
}

// Portable random stream over SplitMix64. The std distributions are
// implementation-defined, so variates are derived here by hand and outputs
// stay identical across standard libraries.
class Random {
 public:
  explicit Random(std::uint64_t seed) : state_(seed) {}

  std::uint64_t NextU64() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1) with 53 random bits.
  double Uniform() noexcept {
    return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer on [0, bound) by rejection (no modulo bias).
  std::uint64_t Below(std::uint64_t bound) noexcept {
    const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % bound;
    std::uint64_t x;
    do {
      x = NextU64();
    } while (x >= limit);
    return x % bound;
  }

  double Sign() noexcept { return (NextU64() >> 63) ? 1.0 : -1.0; }

  // Standard normal via Box-Muller; the second variate is cached.
  double Normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = Uniform();
    while (u1 <= 0.0) u1 = Uniform();
    const double u2 = Uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace fedsketch

#endif  // FEDSKETCH_COMMON_HPP_
