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

#include "fedsketch/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <set>
#include <string>
#include <utility>

namespace fedsketch {
namespace {

struct SparseRow {
  double raw_label = 0.0;
  std::vector<std::pair<std::size_t, double>> entries;  // 0-based index
};

bool ParseDouble(std::string_view token, double& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

Error LineError(ErrorCode code, std::size_t line_no, const std::string& what) {
  return Error(code, "line " + std::to_string(line_no) + ": " + what);
}

std::vector<std::string_view> SplitWhitespace(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

}  // namespace

void ValidateDataset(const Dataset& data) {
  if (data.features.rows() < 1 || data.features.cols() < 1) {
    throw Error(ErrorCode::kInvalidDimensions, "dataset needs n >= 1 and M >= 1");
  }
  if (data.labels.size() != data.features.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "label count differs from row count");
  }
  for (Eigen::Index i = 0; i < data.labels.size(); ++i) {
    if (data.labels[i] != 1.0 && data.labels[i] != -1.0) {
      throw Error(ErrorCode::kMalformedLine,
                  "label at row " + std::to_string(i) + " is not +-1");
    }
  }
  if (!data.features.allFinite()) {
    throw Error(ErrorCode::kMalformedLine, "non-finite feature value");
  }
}

Dataset ParseLibsvm(std::istream& in, std::optional<std::size_t> feature_dim) {
  std::vector<SparseRow> rows;
  std::set<double> raw_labels;
  std::size_t max_index = 0;
  std::string line;
  std::size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = SplitWhitespace(line);
    if (tokens.empty()) continue;

    SparseRow row;
    if (!ParseDouble(tokens[0], row.raw_label)) {
      throw LineError(ErrorCode::kMalformedLine, line_no,
                      "bad label '" + std::string(tokens[0]) + "'");
    }
    raw_labels.insert(row.raw_label);
    if (raw_labels.size() > 2) {
      throw LineError(ErrorCode::kMoreThanTwoClasses, line_no,
                      "a third distinct label value appeared");
    }

    std::size_t previous = 0;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const std::string_view tok = tokens[t];
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos || colon == 0) {
        throw LineError(ErrorCode::kMalformedLine, line_no,
                        "bad token '" + std::string(tok) + "'");
      }
      std::size_t index = 0;
      const char* idx_end = tok.data() + colon;
      auto [ptr, ec] = std::from_chars(tok.data(), idx_end, index);
      if (ec != std::errc() || ptr != idx_end || index == 0) {
        throw LineError(ErrorCode::kMalformedLine, line_no,
                        "bad index in '" + std::string(tok) + "'");
      }
      double value = 0.0;
      if (!ParseDouble(tok.substr(colon + 1), value)) {
        throw LineError(ErrorCode::kMalformedLine, line_no,
                        "bad value in '" + std::string(tok) + "'");
      }
      if (index <= previous) {
        throw LineError(ErrorCode::kNonIncreasingIndex, line_no,
                        "index " + std::to_string(index) + " follows " +
                            std::to_string(previous));
      }
      previous = index;
      max_index = std::max(max_index, index);
      row.entries.emplace_back(index - 1, value);
    }
    rows.push_back(std::move(row));
  }

  if (rows.empty()) throw Error(ErrorCode::kEmptyInput, "no data lines");

  std::size_t dim = max_index;
  if (feature_dim) {
    if (*feature_dim < max_index) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "feature_dim " + std::to_string(*feature_dim) +
                      " is below the largest index " + std::to_string(max_index));
    }
    dim = *feature_dim;
  }
  if (dim == 0) {
    throw Error(ErrorCode::kEmptyInput, "no features present and no feature_dim given");
  }

  const double low = *raw_labels.begin();
  const double high = *raw_labels.rbegin();
  auto map_label = [&](double raw) {
    if (raw_labels.size() == 1) return raw > 0.0 ? 1.0 : -1.0;
    return raw == low ? -1.0 : (raw == high ? 1.0 : 0.0);
  };

  Dataset data;
  data.features = RowMatrix::Zero(static_cast<Eigen::Index>(rows.size()),
                                  static_cast<Eigen::Index>(dim));
  data.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    data.labels[r] = map_label(rows[i].raw_label);
    for (const auto& [col, value] : rows[i].entries) {
      data.features(r, static_cast<Eigen::Index>(col)) = value;
    }
  }
  return data;
}

Dataset ParseLibsvmFile(const std::filesystem::path& path,
                        std::optional<std::size_t> feature_dim) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return ParseLibsvm(in, feature_dim);
}

void WriteLibsvm(std::ostream& out, const Dataset& data) {
  char buf[64];
  for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
    out << (data.labels[i] > 0 ? "+1" : "-1");
    for (Eigen::Index j = 0; j < data.features.cols(); ++j) {
      const double v = data.features(i, j);
      if (v == 0.0) continue;
      auto res = std::to_chars(buf, buf + sizeof(buf), v,
                               std::chars_format::general, 17);
      out << ' ' << (j + 1) << ':' << std::string_view(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

Vector SynthTrueWeights(std::size_t dim, std::uint64_t seed) {
  Random rng(seed);
  Vector w(static_cast<Eigen::Index>(dim));
  for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = rng.Normal();
  return w;
}

Dataset SynthLogistic(std::size_t n, std::size_t dim, std::uint64_t seed,
                      double noise) {
  if (n < 1 || dim < 1) {
    throw Error(ErrorCode::kInvalidDimensions, "synth needs n >= 1 and M >= 1");
  }
  if (!(noise >= 0.0 && noise < 0.5)) {
    throw Error(ErrorCode::kInvalidNoise, "noise must lie in [0, 0.5)");
  }
  // Same stream as SynthTrueWeights: the first M normals are w_true.
  Random rng(seed);
  Vector w_true(static_cast<Eigen::Index>(dim));
  for (Eigen::Index j = 0; j < w_true.size(); ++j) w_true[j] = rng.Normal();

  Dataset data;
  data.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  data.labels.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.features.cols(); ++j) {
      data.features(i, j) = rng.Normal();
    }
  }
  Random flips(DeriveSeed(seed, 1));
  for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
    double label = data.features.row(i).dot(w_true) >= 0.0 ? 1.0 : -1.0;
    if (flips.Uniform() < noise) label = -label;
    data.labels[i] = label;
  }
  return data;
}

Dataset SelectRows(const Dataset& data, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), data.features.cols());
  out.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = static_cast<Eigen::Index>(rows[i]);
    out.features.row(static_cast<Eigen::Index>(i)) = data.features.row(src);
    out.labels[static_cast<Eigen::Index>(i)] = data.labels[src];
  }
  return out;
}

namespace {

void Shuffle(std::vector<std::size_t>& items, Random& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[rng.Below(i)]);
  }
}

// Contiguous split of [0, total) into `parts` chunks whose sizes differ by at
// most one; the first total % parts chunks get the extra element.
std::vector<std::pair<std::size_t, std::size_t>> EvenChunks(std::size_t total,
                                                            std::size_t parts) {
  std::vector<std::pair<std::size_t, std::size_t>> chunks;
  std::size_t begin = 0;
  for (std::size_t p = 0; p < parts; ++p) {
    const std::size_t size = total / parts + (p < total % parts ? 1 : 0);
    chunks.emplace_back(begin, begin + size);
    begin += size;
  }
  return chunks;
}

}  // namespace

std::vector<ClientDataset> Partition(const Dataset& data, std::size_t clients,
                                     const PartitionScheme& scheme) {
  const std::size_t n = data.row_count();
  if (clients < 1) throw Error(ErrorCode::kInvalidDimensions, "need at least one client");
  if (clients > n) {
    throw Error(ErrorCode::kTooManyClients,
                std::to_string(clients) + " clients for " + std::to_string(n) + " rows");
  }

  Random rng(scheme.seed);
  std::vector<std::vector<std::size_t>> assignment(clients);

  if (scheme.kind == PartitionKind::kUniformRandom) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Shuffle(order, rng);
    const auto chunks = EvenChunks(n, clients);
    for (std::size_t c = 0; c < clients; ++c) {
      assignment[c].assign(order.begin() + static_cast<std::ptrdiff_t>(chunks[c].first),
                           order.begin() + static_cast<std::ptrdiff_t>(chunks[c].second));
    }
  } else {
    // Every client owns two non-empty shards.
    if (2 * clients > n) {
      throw Error(ErrorCode::kTooManyClients,
                  "label shards need n >= 2m; got m=" + std::to_string(clients) +
                      ", n=" + std::to_string(n));
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return data.labels[static_cast<Eigen::Index>(a)] <
             data.labels[static_cast<Eigen::Index>(b)];
    });
    const auto shards = EvenChunks(n, 2 * clients);
    std::vector<std::size_t> shard_ids(2 * clients);
    std::iota(shard_ids.begin(), shard_ids.end(), std::size_t{0});
    Shuffle(shard_ids, rng);
    for (std::size_t c = 0; c < clients; ++c) {
      for (std::size_t s : {shard_ids[2 * c], shard_ids[2 * c + 1]}) {
        assignment[c].insert(
            assignment[c].end(),
            order.begin() + static_cast<std::ptrdiff_t>(shards[s].first),
            order.begin() + static_cast<std::ptrdiff_t>(shards[s].second));
      }
    }
  }

  std::vector<ClientDataset> out;
  out.reserve(clients);
  for (std::size_t c = 0; c < clients; ++c) {
    std::sort(assignment[c].begin(), assignment[c].end());
    ClientDataset client;
    client.client_id = static_cast<int>(c);
    client.data = SelectRows(data, assignment[c]);
    client.weight = static_cast<double>(assignment[c].size()) / static_cast<double>(n);
    out.push_back(std::move(client));
  }
  return out;
}

}  // namespace fedsketch
