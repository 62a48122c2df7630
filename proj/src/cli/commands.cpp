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

#include "fedsketch/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"

namespace fedsketch {
namespace {

using nlohmann::json;

class Fnv1a {
 public:
  void Bytes(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  template <typename T>
  void Value(const T& v) {
    Bytes(&v, sizeof(T));
  }
  std::string Hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash_));
    return buf;
  }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

std::filesystem::path WithSuffix(const ExperimentSpec& spec, std::string_view suffix) {
  return std::filesystem::path(spec.output_prefix + std::string(suffix));
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string_view ObjectiveKindName(ObjectiveKind kind) {
  return kind == ObjectiveKind::kLogistic ? "logistic" : "ridge";
}

json RecordToJson(const OracleRecord& r, const ExperimentSpec& spec) {
  json j;
  j["cache_key"] = r.cache_key;
  j["objective"] = {
      {"kind", ObjectiveKindName(spec.objective.kind)},
      {"lambda", spec.objective.lambda},
      {"reg_convention",
       spec.objective.reg_convention == RegConvention::kHalf ? "half" : "full"}};
  j["tolerance"] = spec.oracle_tolerance;
  j["max_iter"] = spec.oracle_max_iter;
  j["w_star"] = std::vector<double>(r.w_star.data(), r.w_star.data() + r.w_star.size());
  j["grad_norm"] = r.grad_norm;
  j["loss_star"] = r.loss_star;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  return j;
}

OracleRecord RecordFromJson(const json& j) {
  OracleRecord r;
  r.cache_key = j.at("cache_key").get<std::string>();
  const auto w = j.at("w_star").get<std::vector<double>>();
  r.w_star = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
  r.grad_norm = j.at("grad_norm").get<double>();
  r.loss_star = j.at("loss_star").get<double>();
  r.iterations = j.at("iterations").get<int>();
  r.converged = j.at("converged").get<bool>();
  return r;
}

const AlgorithmConfig* FindAlgorithm(const ExperimentSpec& spec, Algorithm algorithm) {
  for (const auto& cfg : spec.algorithms) {
    if (cfg.algorithm == algorithm) return &cfg;
  }
  return nullptr;
}

json SpecToJson(const ExperimentSpec& spec) {
  json j = json::object();
  std::istringstream lines(DumpSpec(spec));
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) j[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return j;
}

double Median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

std::string FormatReal(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void WriteFileAtomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCode::kIoError, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string MetricsCsv(const std::vector<RoundMetrics>& history) {
  std::string out(kRunCsvHeader);
  out += '\n';
  for (const RoundMetrics& m : history) {
    out += std::to_string(m.round) + ',' + FormatReal(m.loss) + ',' + FormatReal(m.gap) + ',' +
           FormatReal(m.grad_norm) + ',' + std::to_string(m.uplink_floats) + ',' +
           std::to_string(m.downlink_floats) + ',' + FormatReal(m.wall_seconds) + '\n';
  }
  return out;
}

std::string OracleCacheKey(const Dataset& data, const ExperimentSpec& spec) {
  Fnv1a h;
  constexpr std::string_view kTag = "fedsketch-oracle-v1";
  h.Bytes(kTag.data(), kTag.size());
  h.Value(static_cast<std::uint64_t>(data.row_count()));
  h.Value(static_cast<std::uint64_t>(data.feature_dim()));
  h.Bytes(data.features.data(), sizeof(double) * static_cast<std::size_t>(data.features.size()));
  h.Bytes(data.labels.data(), sizeof(double) * static_cast<std::size_t>(data.labels.size()));
  h.Value(static_cast<int>(spec.objective.kind));
  h.Value(spec.objective.lambda);
  h.Value(static_cast<int>(spec.objective.reg_convention));
  h.Value(spec.oracle_tolerance);
  h.Value(spec.oracle_max_iter);
  return h.Hex();
}

std::filesystem::path OracleCacheDir(const ExperimentSpec& spec) {
  if (!spec.oracle_cache_dir.empty()) return spec.oracle_cache_dir;
  const std::filesystem::path prefix(spec.output_prefix);
  return (prefix.has_parent_path() ? prefix.parent_path() : std::filesystem::path(".")) /
         ".oracle-cache";
}

OracleOutcome CmdOracle(const ExperimentSpec& spec) {
  const Dataset data = LoadDataset(spec);
  OracleOutcome outcome;
  outcome.json_path = WithSuffix(spec, "_oracle.json");
  const std::string key = OracleCacheKey(data, spec);
  const auto cache_path = OracleCacheDir(spec) / ("oracle-" + key + ".json");

  if (std::filesystem::exists(cache_path)) {
    const std::string text = ReadFile(cache_path);
    outcome.record = RecordFromJson(json::parse(text));
    outcome.from_cache = true;
    WriteFileAtomic(outcome.json_path, text);
    return outcome;
  }

  const NewtonResult newton =
      NewtonOracle(spec.objective, data, spec.oracle_tolerance, spec.oracle_max_iter);
  if (!newton.converged) {
    throw Error(ErrorCode::kDidNotConverge,
                "best gradient norm " + FormatReal(newton.grad_norm) + " after " +
                    std::to_string(spec.oracle_max_iter) + " iterations");
  }
  OracleRecord& r = outcome.record;
  r.cache_key = key;
  r.w_star = newton.w_star;
  r.grad_norm = newton.grad_norm;
  r.loss_star = Loss(spec.objective, newton.w_star, data);
  r.iterations = newton.iterations;
  r.converged = true;
  const std::string text = RecordToJson(r, spec).dump(2) + "\n";
  WriteFileAtomic(cache_path, text);
  WriteFileAtomic(outcome.json_path, text);
  return outcome;
}

RunOutcome CmdRun(const ExperimentSpec& spec) {
  const OracleOutcome oracle = CmdOracle(spec);
  const Dataset data = LoadDataset(spec);
  const auto clients = Partition(data, spec.clients, spec.partition);
  const SmoothnessConstants constants = EstimateConstants(spec.objective, data);

  RunOutcome outcome;
  json outputs = json::array();
  for (const AlgorithmConfig& cfg : spec.algorithms) {
    const auto history = RunExperiment(spec.objective, clients, cfg, oracle.record.w_star);
    const auto path =
        WithSuffix(spec, "_" + std::string(AlgorithmName(cfg.algorithm)) + ".csv");
    WriteFileAtomic(path, MetricsCsv(history));
    outcome.csv_paths.push_back(path);
    outputs.push_back({{"algorithm", AlgorithmName(cfg.algorithm)},
                       {"csv", path.filename().string()},
                       {"rounds", history.size() - 1},
                       {"final_gap", history.back().gap}});
  }

  json sidecar;
  sidecar["spec"] = SpecToJson(spec);
  sidecar["dataset"] = {{"rows", data.row_count()}, {"feature_dim", data.feature_dim()}};
  sidecar["oracle"] = {{"cache_key", oracle.record.cache_key},
                       {"grad_norm", oracle.record.grad_norm},
                       {"loss_star", oracle.record.loss_star},
                       {"iterations", oracle.record.iterations},
                       {"converged", oracle.record.converged}};
  sidecar["constants"] = {{"L1", constants.l1}, {"gamma", constants.gamma}};
  sidecar["outputs"] = outputs;
  outcome.json_path = WithSuffix(spec, "_run.json");
  WriteFileAtomic(outcome.json_path, sidecar.dump(2) + "\n");
  return outcome;
}

std::filesystem::path CmdSweepSketch(const ExperimentSpec& spec) {
  if (spec.sweep_k.size() < 2) {
    throw Error(ErrorCode::kValidationError, "sweep.k must list at least two sketch sizes");
  }
  const OracleOutcome oracle = CmdOracle(spec);
  const Dataset data = LoadDataset(spec);
  const auto clients = Partition(data, spec.clients, spec.partition);

  AlgorithmConfig flens;
  flens.algorithm = Algorithm::kFLeNS;
  flens.threads = spec.threads;
  if (const AlgorithmConfig* found = FindAlgorithm(spec, Algorithm::kFLeNS)) flens = *found;
  const SketchKind kind = SweepSketchKind(flens);

  std::string csv = "k,seed,final_gap,uplink_total\n";
  for (std::size_t k : spec.sweep_k) {
    for (int r = 0; r < spec.sweep_repeats; ++r) {
      AlgorithmConfig cfg = flens;
      cfg.sketch.k = k;
      cfg.sketch.kind =
          spec.sweep_identity_at_full && k == spec.model_dim ? SketchKind::kIdentity : kind;
      cfg.seed = spec.master_seed + static_cast<std::uint64_t>(r);
      cfg.max_rounds = spec.sweep_rounds;
      cfg.gap_tolerance = 0.0;
      const auto history = RunExperiment(spec.objective, clients, cfg, oracle.record.w_star);
      std::uint64_t uplink = 0;
      for (const auto& m : history) uplink += m.uplink_floats;
      csv += std::to_string(k) + ',' + std::to_string(cfg.seed) + ',' +
             FormatReal(history.back().gap) + ',' + std::to_string(uplink) + '\n';
    }
  }
  const auto path = WithSuffix(spec, "_sweep.csv");
  WriteFileAtomic(path, csv);
  return path;
}

std::filesystem::path CmdBenchTime(const ExperimentSpec& spec) {
  const OracleOutcome oracle = CmdOracle(spec);
  const Dataset data = LoadDataset(spec);
  const auto clients = Partition(data, spec.clients, spec.partition);

  std::string csv = "algorithm,k,median_round_seconds\n";
  for (const AlgorithmConfig& base : spec.algorithms) {
    std::vector<std::size_t> ks = spec.sweep_k;
    if (ks.empty()) ks.push_back(base.sketch.k);
    for (std::size_t k : ks) {
      AlgorithmConfig cfg = base;
      cfg.sketch.k = k;
      if (cfg.sketch.kind == SketchKind::kIdentity && cfg.algorithm == Algorithm::kFLeNS &&
          k != spec.model_dim) {
        cfg.sketch.kind = SketchKind::kSRHT;
      }
      cfg.max_rounds = spec.bench_rounds;
      cfg.gap_tolerance = 0.0;
      const auto history = RunExperiment(spec.objective, clients, cfg, oracle.record.w_star);
      std::vector<double> seconds;
      for (std::size_t i = 1; i < history.size(); ++i) seconds.push_back(history[i].wall_seconds);
      csv += std::string(AlgorithmName(cfg.algorithm)) + ',' + std::to_string(k) + ',' +
             FormatReal(Median(seconds)) + '\n';
    }
  }
  const auto path = WithSuffix(spec, "_bench.csv");
  WriteFileAtomic(path, csv);
  return path;
}

}  // namespace fedsketch
