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

#include <set>
#include <sstream>

#include "doctest.h"
#include "fedsketch/data.hpp"
#include "oracles.hpp"

using namespace fedsketch;

namespace {

Dataset Parse(const std::string& text, std::optional<std::size_t> dim = std::nullopt) {
  std::istringstream in(text);
  return ParseLibsvm(in, dim);
}

ErrorCode ParseError(const std::string& text) {
  try {
    Parse(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a parse error");
  return ErrorCode::kIoError;
}

}  // namespace

TEST_CASE("parse_libsvm transcribes the sparse format densely") {
  const Dataset d = Parse("+1 1:0.5 3:-2.0\n-1 2:1.0");
  REQUIRE(d.row_count() == 2);
  REQUIRE(d.feature_dim() == 3);
  RowMatrix expected(2, 3);
  expected << 0.5, 0, -2, 0, 1, 0;
  CHECK(d.features == expected);
  CHECK(d.labels[0] == 1.0);
  CHECK(d.labels[1] == -1.0);
}

TEST_CASE("raw labels canonicalize: smaller -> -1, larger -> +1") {
  SUBCASE("covtype style {1,2}") {
    const Dataset d = Parse("2 1:1\n1 1:2\n2 2:1\n");
    CHECK(d.labels[0] == 1.0);
    CHECK(d.labels[1] == -1.0);
    CHECK(d.labels[2] == 1.0);
  }
  SUBCASE("phishing style {0,1}") {
    const Dataset d = Parse("0 1:1\n1 1:2\n");
    CHECK(d.labels[0] == -1.0);
    CHECK(d.labels[1] == 1.0);
  }
  SUBCASE("single class keeps its sign") {
    CHECK(Parse("-1 1:1\n-1 1:3\n").labels.maxCoeff() == -1.0);
    CHECK(Parse("3 1:1\n").labels[0] == 1.0);
  }
}

TEST_CASE("label mapping does not depend on line order") {
  const std::vector<std::string> lines = {"2 1:0.1", "1 2:0.2", "1 1:0.3 2:1", "2 2:0.4"};
  std::vector<std::size_t> order = {0, 1, 2, 3};
  Random rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.Below(i)]);
    std::string text;
    for (std::size_t i : order) text += lines[i] + "\n";
    const Dataset d = Parse(text);
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const double expected = lines[order[pos]].front() == '2' ? 1.0 : -1.0;
      CHECK(d.labels[static_cast<Eigen::Index>(pos)] == expected);
    }
  }
}

TEST_CASE("parse errors name the failure class") {
  CHECK(ParseError("1 a:b\n") == ErrorCode::kMalformedLine);
  CHECK(ParseError("1 1:x\n") == ErrorCode::kMalformedLine);
  CHECK(ParseError("1 0:1\n") == ErrorCode::kMalformedLine);
  CHECK(ParseError("abc 1:1\n") == ErrorCode::kMalformedLine);
  CHECK(ParseError("1 3:1 2:1\n") == ErrorCode::kNonIncreasingIndex);
  CHECK(ParseError("1 2:1 2:1\n") == ErrorCode::kNonIncreasingIndex);
  CHECK(ParseError("1 1:1\n2 1:1\n3 1:1\n") == ErrorCode::kMoreThanTwoClasses);
  CHECK(ParseError("") == ErrorCode::kEmptyInput);
  CHECK(ParseError("\n  \n") == ErrorCode::kEmptyInput);
}

TEST_CASE("feature dimension override pads trailing zeros") {
  const Dataset d = Parse("1 1:1\r\n-1 2:2\r\n", 5);
  CHECK(d.feature_dim() == 5);
  CHECK(d.features.rightCols(3).isZero());
  CHECK_THROWS_AS(Parse("1 4:1\n", 3), Error);
}

TEST_CASE("LIBSVM write/parse round-trips synthetic data exactly") {
  const Dataset d = SynthLogistic(50, 7, 11, 0.1);
  std::stringstream text;
  WriteLibsvm(text, d);
  const Dataset back = ParseLibsvm(text, d.feature_dim());
  CHECK(back.features == d.features);
  CHECK(back.labels == d.labels);
}

TEST_CASE("synth_logistic is deterministic in its arguments") {
  const Dataset a = SynthLogistic(4, 2, 7, 0.0);
  const Dataset b = SynthLogistic(4, 2, 7, 0.0);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  const Dataset c = SynthLogistic(4, 2, 8, 0.0);
  CHECK(c.features != a.features);
}

TEST_CASE("synth_logistic label noise matches the flip rate") {
  // Agreement ~ Binomial(1000, 0.95)/1000: sd 0.0069, so [0.92, 0.98] is a
  // +-4.3 sd window.
  const Dataset d = SynthLogistic(1000, 64, 1, 0.05);
  const Vector w = SynthTrueWeights(64, 1);
  int agree = 0;
  for (Eigen::Index i = 0; i < d.features.rows(); ++i) {
    const double clean = d.features.row(i).dot(w) >= 0 ? 1.0 : -1.0;
    agree += clean == d.labels[i];
  }
  const double fraction = agree / 1000.0;
  CHECK(fraction >= 0.92);
  CHECK(fraction <= 0.98);
}

TEST_CASE("synth_logistic edge cases") {
  const Dataset d = SynthLogistic(1, 1, 0, 0.0);
  const double w = SynthTrueWeights(1, 0)[0];
  CHECK(d.labels[0] == (d.features(0, 0) * w >= 0 ? 1.0 : -1.0));
  CHECK_THROWS_AS(SynthLogistic(10, 2, 0, 0.5), Error);
  CHECK_THROWS_AS(SynthLogistic(10, 2, 0, -0.1), Error);
  try {
    SynthLogistic(10, 2, 0, 0.7);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidNoise);
  }
}

TEST_CASE("partition: single client holds everything") {
  const Dataset d = SynthLogistic(20, 3, 2, 0.0);
  const auto clients = Partition(d, 1, {});
  REQUIRE(clients.size() == 1);
  CHECK(clients[0].weight == 1.0);
  CHECK(clients[0].data.features == d.features);
}

TEST_CASE("partition: uniform sizes differ by at most one") {
  const Dataset d = SynthLogistic(10, 2, 2, 0.0);
  const auto clients = Partition(d, 3, {PartitionKind::kUniformRandom, 5});
  std::multiset<std::size_t> sizes;
  for (const auto& c : clients) sizes.insert(c.data.row_count());
  CHECK(sizes == std::multiset<std::size_t>{3, 3, 4});
}

TEST_CASE("partition: Table-2 scale client count (m = 1000)") {
  const Dataset d = SynthLogistic(5000, 18, 4, 0.0);
  const auto clients = Partition(d, 1000, {PartitionKind::kUniformRandom, 1});
  CHECK(clients.size() == 1000);
  for (const auto& c : clients) CHECK(c.data.row_count() == 5);
}

TEST_CASE("partition is a true partition for both schemes") {
  const Dataset d = SynthLogistic(100, 4, 9, 0.1);
  const auto global = testing::SortedRows(d);
  for (PartitionKind kind : {PartitionKind::kUniformRandom, PartitionKind::kSortedByLabelShards}) {
    for (std::size_t m : {1u, 2u, 7u, 50u, 100u}) {
      if (kind == PartitionKind::kSortedByLabelShards && 2 * m > 100) {
        CHECK_THROWS_AS(Partition(d, m, {kind, 3}), Error);
        continue;
      }
      const auto clients = Partition(d, m, {kind, 3});
      REQUIRE(clients.size() == m);
      double weight_sum = 0.0;
      std::size_t rows = 0;
      for (std::size_t j = 0; j < m; ++j) {
        CHECK(clients[j].client_id == static_cast<int>(j));
        CHECK(clients[j].data.row_count() >= 1);
        weight_sum += clients[j].weight;
        rows += clients[j].data.row_count();
      }
      CHECK(rows == 100);
      CHECK(std::abs(weight_sum - 1.0) <= 1e-12);
      CHECK(testing::SortedRows(testing::Pool(clients)) == global);
    }
  }
}

TEST_CASE("partition is deterministic in its seed") {
  const Dataset d = SynthLogistic(60, 3, 1, 0.0);
  for (PartitionKind kind : {PartitionKind::kUniformRandom, PartitionKind::kSortedByLabelShards}) {
    const auto a = Partition(d, 6, {kind, 42});
    const auto b = Partition(d, 6, {kind, 42});
    const auto c = Partition(d, 6, {kind, 43});
    bool any_difference = false;
    for (std::size_t j = 0; j < a.size(); ++j) {
      CHECK(a[j].data.features == b[j].data.features);
      any_difference |= a[j].data.features.rows() != c[j].data.features.rows() ||
                        a[j].data.features != c[j].data.features;
    }
    CHECK(any_difference);
  }
}

TEST_CASE("label shards skew the label mix per client") {
  const Dataset d = SynthLogistic(400, 3, 5, 0.0);
  const auto clients = Partition(d, 10, {PartitionKind::kSortedByLabelShards, 1});
  // Each shard is label-pure except the one straddling the boundary, so at
  // most one shard per client can mix labels.
  int pure = 0;
  for (const auto& c : clients) {
    const auto pos = (c.data.labels.array() > 0).count();
    pure += pos == 0 || pos == c.data.labels.size();
  }
  CHECK(pure >= 4);
  CHECK_THROWS_AS(Partition(d, 401, {}), Error);
}
