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

#include "fedsketch/common.hpp"

namespace fedsketch {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kNonIncreasingIndex: return "NonIncreasingIndex";
    case ErrorCode::kMoreThanTwoClasses: return "MoreThanTwoClasses";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kInvalidNoise: return "InvalidNoise";
    case ErrorCode::kTooManyClients: return "TooManyClients";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidDimensions: return "InvalidDimensions";
    case ErrorCode::kPowerIterationDivergence: return "PowerIterationDivergence";
    case ErrorCode::kSingularHessian: return "SingularHessian";
    case ErrorCode::kDidNotConverge: return "DidNotConverge";
    case ErrorCode::kInvalidConstants: return "InvalidConstants";
    case ErrorCode::kWeightMismatch: return "WeightMismatch";
    case ErrorCode::kSingularSketchedSystem: return "SingularSketchedSystem";
    case ErrorCode::kNonFiniteIterate: return "NonFiniteIterate";
    case ErrorCode::kLineSearchFailed: return "LineSearchFailed";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kUnknownKey: return "UnknownKey";
    case ErrorCode::kMissingRequired: return "MissingRequired";
    case ErrorCode::kValidationError: return "ValidationError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace fedsketch
