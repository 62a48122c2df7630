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

#ifndef FEDSKETCH_DATA_HPP_
#define FEDSKETCH_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <vector>

#include "fedsketch/common.hpp"

namespace fedsketch {

// Dense binary-classification data: n rows of M features, labels in {-1, +1}.
struct Dataset {
  RowMatrix features;
  Vector labels;

  std::size_t row_count() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t feature_dim() const { return static_cast<std::size_t>(features.cols()); }
};

struct ClientDataset {
  int client_id = 0;
  Dataset data;
  double weight = 0.0;  // n_j / N
};

enum class PartitionKind { kUniformRandom, kSortedByLabelShards };

struct PartitionScheme {
  PartitionKind kind = PartitionKind::kUniformRandom;
  std::uint64_t seed = 0;
};

// Throws kDimensionMismatch / kMalformedLine if the invariants do not hold.
void ValidateDataset(const Dataset& data);

// Reads LIBSVM text ("<label> <idx>:<val> ..."). The two distinct raw label
// values map to -1 (smaller) and +1 (larger). If only one value occurs it maps
// to +1 when positive and -1 otherwise. feature_dim overrides the inferred
// dimension and must be at least the largest index present.
Dataset ParseLibsvm(std::istream& in,
                    std::optional<std::size_t> feature_dim = std::nullopt);
Dataset ParseLibsvmFile(const std::filesystem::path& path,
                        std::optional<std::size_t> feature_dim = std::nullopt);

// Writes LIBSVM text with +1/-1 labels; zero entries are omitted.
void WriteLibsvm(std::ostream& out, const Dataset& data);

// Standard-normal rows, labels sign(x . w_true) flipped with probability
// noise. w_true is the first M normals of the seeded stream.
Dataset SynthLogistic(std::size_t n, std::size_t dim, std::uint64_t seed,
                      double noise);
Vector SynthTrueWeights(std::size_t dim, std::uint64_t seed);

std::vector<ClientDataset> Partition(const Dataset& data, std::size_t clients,
                                     const PartitionScheme& scheme);

// Row subset in the given order.
Dataset SelectRows(const Dataset& data, const std::vector<std::size_t>& rows);

}  // namespace fedsketch

#endif  // FEDSKETCH_DATA_HPP_
