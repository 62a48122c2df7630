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

#ifndef FEDSKETCH_EXPERIMENT_HPP_
#define FEDSKETCH_EXPERIMENT_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "fedsketch/data.hpp"
#include "fedsketch/fedsim.hpp"
#include "fedsketch/objective.hpp"

namespace fedsketch {

enum class DataSource { kSynth, kLibsvm };

struct SynthParams {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  double noise = 0.0;
};

// Fully resolved experiment description. See README.md for the text format.
struct ExperimentSpec {
  DataSource source = DataSource::kSynth;
  std::filesystem::path libsvm_path;
  std::optional<std::size_t> feature_dim;
  SynthParams synth;

  Objective objective;

  std::size_t clients = 1;
  PartitionScheme partition;

  std::vector<AlgorithmConfig> algorithms;

  std::vector<std::size_t> sweep_k;
  int sweep_repeats = 10;
  int sweep_rounds = 20;
  bool sweep_identity_at_full = true;

  int bench_rounds = 5;

  double oracle_tolerance = 1e-10;
  int oracle_max_iter = 100;
  std::filesystem::path oracle_cache_dir;  // empty: <prefix dir>/.oracle-cache

  std::string output_prefix = "out/run";
  std::uint64_t master_seed = 0;
  int threads = 1;

  // Model dimension M, resolved at load time.
  std::size_t model_dim = 0;
};

// Parses `section.key = value` lines; '#' starts a comment. Unknown keys,
// duplicates, and out-of-range values are errors. `base_dir` resolves
// relative dataset paths.
ExperimentSpec ParseSpec(std::istream& in,
                         const std::filesystem::path& base_dir = std::filesystem::path("."));
ExperimentSpec LoadSpec(const std::filesystem::path& path);

// Canonical text form; ParseSpec(DumpSpec(s)) reproduces s.
std::string DumpSpec(const ExperimentSpec& spec);

// Re-checks every cross-field constraint (sketch sizes against M, clients
// against n, ...). Called by ParseSpec and again after CLI overrides.
void ValidateSpec(ExperimentSpec& spec);

Dataset LoadDataset(const ExperimentSpec& spec);

// Sketch family used by sketch-size sweeps: the FLeNS kind, with Identity
// replaced by SRHT (Identity only exists at k = M).
SketchKind SweepSketchKind(const AlgorithmConfig& flens);

}  // namespace fedsketch

#endif  // FEDSKETCH_EXPERIMENT_HPP_
