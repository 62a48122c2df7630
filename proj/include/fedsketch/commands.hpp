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

#ifndef FEDSKETCH_COMMANDS_HPP_
#define FEDSKETCH_COMMANDS_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fedsketch/experiment.hpp"

namespace fedsketch {

struct OracleRecord {
  std::string cache_key;  // hex content hash of (dataset, objective, oracle settings)
  Vector w_star;
  double grad_norm = 0.0;
  double loss_star = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct OracleOutcome {
  OracleRecord record;
  bool from_cache = false;
  std::filesystem::path json_path;
};

// 64-bit FNV-1a over the dataset bytes and objective/oracle fields, hex.
std::string OracleCacheKey(const Dataset& data, const ExperimentSpec& spec);

std::filesystem::path OracleCacheDir(const ExperimentSpec& spec);

// Computes (or loads from the cache) w*; writes <prefix>_oracle.json.
// Throws kDidNotConverge with the best gradient norm when Newton stalls.
OracleOutcome CmdOracle(const ExperimentSpec& spec);

struct RunOutcome {
  std::vector<std::filesystem::path> csv_paths;  // one per algorithm, spec order
  std::filesystem::path json_path;
};

// <prefix>_<algorithm>.csv per algorithm plus <prefix>_run.json.
RunOutcome CmdRun(const ExperimentSpec& spec);

// <prefix>_sweep.csv with k,seed,final_gap,uplink_total.
std::filesystem::path CmdSweepSketch(const ExperimentSpec& spec);

// <prefix>_bench.csv with algorithm,k,median_round_seconds.
std::filesystem::path CmdBenchTime(const ExperimentSpec& spec);

inline constexpr std::string_view kRunCsvHeader =
    "round,loss,gap,grad_norm,uplink_floats,downlink_floats,wall_seconds";

// Shortest form with 17 significant digits, locale independent.
std::string FormatReal(double value);

// Writes via a temporary file and rename; creates parent directories.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view contents);

std::string MetricsCsv(const std::vector<RoundMetrics>& history);

}  // namespace fedsketch

#endif  // FEDSKETCH_COMMANDS_HPP_
