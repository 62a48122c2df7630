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

#include "fedsketch/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>

namespace fedsketch {
namespace {

std::string Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

struct Entry {
  std::string value;
  std::size_t line = 0;
  bool used = false;
};

class KeyTable {
 public:
  void Insert(const std::string& key, std::string value, std::size_t line) {
    auto [it, inserted] = entries_.try_emplace(key, Entry{std::move(value), line, false});
    if (!inserted) {
      throw Error(ErrorCode::kParseError, "line " + std::to_string(line) + ": duplicate key '" +
                                              key + "' (first on line " +
                                              std::to_string(it->second.line) + ")");
    }
  }

  const Entry* Take(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  const Entry& Require(const std::string& key) {
    const Entry* e = Take(key);
    if (e == nullptr) throw Error(ErrorCode::kMissingRequired, "missing key '" + key + "'");
    return *e;
  }

  // Keys (not yet consumed) starting with `prefix`.
  std::vector<std::string> Pending(std::string_view prefix) const {
    std::vector<std::string> keys;
    for (const auto& [key, entry] : entries_) {
      if (!entry.used && key.starts_with(prefix)) keys.push_back(key);
    }
    return keys;
  }

  void RejectUnused() const {
    for (const auto& [key, entry] : entries_) {
      if (!entry.used) {
        throw Error(ErrorCode::kUnknownKey,
                    "line " + std::to_string(entry.line) + ": unknown key '" + key + "'");
      }
    }
  }

 private:
  std::map<std::string, Entry> entries_;
};

Error BadValue(const std::string& key, const Entry& e, const std::string& expected) {
  return Error(ErrorCode::kValidationError, "line " + std::to_string(e.line) + ": " + key +
                                                " = '" + e.value + "': expected " + expected);
}

double ToDouble(const std::string& key, const Entry& e) {
  double out = 0.0;
  std::string_view s = e.value;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(out)) {
    throw BadValue(key, e, "a finite number");
  }
  return out;
}

std::uint64_t ToUnsigned(const std::string& key, const std::string& text, const Entry& e) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw BadValue(key, e, "a non-negative integer");
  }
  return out;
}

std::uint64_t ToUnsigned(const std::string& key, const Entry& e) {
  return ToUnsigned(key, e.value, e);
}

int ToCount(const std::string& key, const Entry& e) {
  const auto v = ToUnsigned(key, e);
  if (v > 1'000'000'000ULL) throw BadValue(key, e, "an integer below 1e9");
  return static_cast<int>(v);
}

bool ToBool(const std::string& key, const Entry& e) {
  if (e.value == "true") return true;
  if (e.value == "false") return false;
  throw BadValue(key, e, "true or false");
}

std::vector<std::string> SplitList(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) items.push_back(Trim(item));
  return items;
}

std::string FormatDouble(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

constexpr std::string_view kAlgorithmFields[] = {
    "step_size", "step_rule",   "momentum",      "update_point", "sketch.kind",
    "sketch.k",  "sketch.reseed", "max_rounds", "gap_tolerance"};

void ApplyAlgorithmField(AlgorithmConfig& cfg, std::string_view field, const std::string& key,
                         const Entry& e) {
  const std::string& v = e.value;
  if (field == "step_size") {
    if (v == "auto") {
      cfg.step_size.reset();
    } else {
      cfg.step_size = ToDouble(key, e);
    }
  } else if (field == "step_rule") {
    if (v == "fixed") cfg.step_rule = StepRule::kFixed;
    else if (v == "armijo") cfg.step_rule = StepRule::kArmijo;
    else throw BadValue(key, e, "fixed or armijo");
  } else if (field == "momentum") {
    if (v == "ratio") {
      cfg.momentum = {MomentumKind::kConditionRatio, 0.0};
    } else if (v == "off") {
      cfg.momentum = {MomentumKind::kOff, 0.0};
    } else {
      const double beta = ToDouble(key, e);
      if (!(beta >= 0.0 && beta < 1.0)) throw BadValue(key, e, "ratio, off, or 0 <= beta < 1");
      cfg.momentum = {MomentumKind::kConstant, beta};
    }
  } else if (field == "update_point") {
    if (v == "from_v") cfg.update_point = UpdatePoint::kFromV;
    else if (v == "from_w") cfg.update_point = UpdatePoint::kFromW;
    else throw BadValue(key, e, "from_v or from_w");
  } else if (field == "sketch.kind") {
    if (v == "srht") cfg.sketch.kind = SketchKind::kSRHT;
    else if (v == "gaussian") cfg.sketch.kind = SketchKind::kGaussian;
    else if (v == "sparsejl") cfg.sketch.kind = SketchKind::kSparseJL;
    else if (v == "identity") cfg.sketch.kind = SketchKind::kIdentity;
    else throw BadValue(key, e, "srht, gaussian, sparsejl, or identity");
  } else if (field == "sketch.k") {
    const auto k = ToUnsigned(key, e);
    if (k == 0) throw BadValue(key, e, "k >= 1");
    cfg.sketch.k = static_cast<std::size_t>(k);
  } else if (field == "sketch.reseed") {
    if (v == "per_round") cfg.sketch.reseed = Reseed::kPerRound;
    else if (v == "fixed") cfg.sketch.reseed = Reseed::kFixed;
    else throw BadValue(key, e, "per_round or fixed");
  } else if (field == "max_rounds") {
    cfg.max_rounds = ToCount(key, e);
  } else if (field == "gap_tolerance") {
    cfg.gap_tolerance = ToDouble(key, e);
    if (cfg.gap_tolerance < 0.0) throw BadValue(key, e, "a non-negative number");
  }
}

void ApplyAlgorithmFields(KeyTable& table, AlgorithmConfig& cfg, const std::string& prefix) {
  for (std::string_view field : kAlgorithmFields) {
    const std::string key = prefix + std::string(field);
    if (const Entry* e = table.Take(key)) ApplyAlgorithmField(cfg, field, key, *e);
  }
}

std::string MomentumText(const MomentumPolicy& m) {
  switch (m.kind) {
    case MomentumKind::kConditionRatio: return "ratio";
    case MomentumKind::kOff: return "off";
    case MomentumKind::kConstant: return FormatDouble(m.beta);
  }
  return "ratio";
}

std::size_t MaxSketchRows(SketchKind kind, std::size_t dim) {
  switch (kind) {
    case SketchKind::kSRHT: return NextPowerOfTwo(dim);
    case SketchKind::kIdentity: return dim;
    default: return dim;
  }
}

void CheckSketchSize(std::string_view what, SketchKind kind, std::size_t k, std::size_t dim) {
  if (k > MaxSketchRows(kind, dim)) {
    throw Error(ErrorCode::kValidationError,
                std::string(what) + ": sketch size k=" + std::to_string(k) + " exceeds " +
                    std::to_string(MaxSketchRows(kind, dim)) + " for " +
                    std::string(SketchKindName(kind)) + " on dimension " + std::to_string(dim));
  }
}

}  // namespace

SketchKind SweepSketchKind(const AlgorithmConfig& flens) {
  return flens.sketch.kind == SketchKind::kIdentity ? SketchKind::kSRHT : flens.sketch.kind;
}

void ValidateSpec(ExperimentSpec& spec) {
  ValidateObjective(spec.objective);
  std::size_t n = 0;
  if (spec.source == DataSource::kSynth) {
    if (spec.synth.n < 1 || spec.synth.dim < 1) {
      throw Error(ErrorCode::kValidationError, "synth n and dim must be >= 1");
    }
    if (!(spec.synth.noise >= 0.0 && spec.synth.noise < 0.5)) {
      throw Error(ErrorCode::kValidationError, "synth noise must lie in [0, 0.5)");
    }
    n = spec.synth.n;
    spec.model_dim = spec.synth.dim;
  } else {
    if (!std::filesystem::exists(spec.libsvm_path)) {
      throw Error(ErrorCode::kValidationError,
                  "dataset file does not exist: " + spec.libsvm_path.string());
    }
    const Dataset data = ParseLibsvmFile(spec.libsvm_path, spec.feature_dim);
    n = data.row_count();
    spec.model_dim = data.feature_dim();
  }
  const std::size_t dim = spec.model_dim;

  if (spec.clients < 1 || spec.clients > n) {
    throw Error(ErrorCode::kValidationError, "partition.clients must lie in [1, n=" +
                                                 std::to_string(n) + "]");
  }
  if (spec.partition.kind == PartitionKind::kSortedByLabelShards && 2 * spec.clients > n) {
    throw Error(ErrorCode::kValidationError, "label_shards needs n >= 2 * clients");
  }
  const std::size_t smallest_client =
      spec.partition.kind == PartitionKind::kUniformRandom
          ? n / spec.clients
          : 2 * (n / (2 * spec.clients));

  if (spec.algorithms.empty()) {
    throw Error(ErrorCode::kValidationError, "algorithm.names must list at least one algorithm");
  }
  for (std::size_t i = 0; i < spec.algorithms.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (spec.algorithms[i].algorithm == spec.algorithms[j].algorithm) {
        throw Error(ErrorCode::kValidationError, "algorithm listed twice");
      }
    }
  }
  for (AlgorithmConfig& cfg : spec.algorithms) {
    cfg.seed = spec.master_seed;
    cfg.threads = spec.threads;
    const std::string name(AlgorithmName(cfg.algorithm));
    if (cfg.algorithm == Algorithm::kFLeNS) {
      if (cfg.sketch.kind == SketchKind::kIdentity) cfg.sketch.k = dim;
      CheckSketchSize(name, cfg.sketch.kind, cfg.sketch.k, dim);
    } else if (cfg.algorithm == Algorithm::kFedNS && cfg.sketch.kind != SketchKind::kIdentity) {
      CheckSketchSize(name + " (smallest client)", cfg.sketch.kind, cfg.sketch.k,
                      smallest_client);
    }
    ValidateConfig(cfg);
  }
  const auto flens = std::find_if(
      spec.algorithms.begin(), spec.algorithms.end(),
      [](const AlgorithmConfig& c) { return c.algorithm == Algorithm::kFLeNS; });
  const SketchKind sweep_kind = flens == spec.algorithms.end() ? SketchKind::kSRHT
                                                                : SweepSketchKind(*flens);
  for (std::size_t k : spec.sweep_k) {
    if (k == 0) throw Error(ErrorCode::kValidationError, "sweep.k entries must be >= 1");
    CheckSketchSize("sweep", sweep_kind, k, dim);
  }
  if (spec.sweep_repeats < 1) throw Error(ErrorCode::kValidationError, "sweep.repeats >= 1");
  if (spec.sweep_rounds < 1) throw Error(ErrorCode::kValidationError, "sweep.rounds >= 1");
  if (spec.bench_rounds < 5) throw Error(ErrorCode::kValidationError, "bench.rounds >= 5");
  if (!(spec.oracle_tolerance > 0.0)) {
    throw Error(ErrorCode::kValidationError, "oracle.tolerance must be positive");
  }
  if (spec.oracle_max_iter < 1) throw Error(ErrorCode::kValidationError, "oracle.max_iter >= 1");
  if (spec.threads < 1) throw Error(ErrorCode::kValidationError, "experiment.threads >= 1");
  if (spec.output_prefix.empty()) throw Error(ErrorCode::kValidationError, "empty output.prefix");
}

ExperimentSpec ParseSpec(std::istream& in, const std::filesystem::path& base_dir) {
  KeyTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string trimmed = Trim(line);
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": expected 'section.key = value'");
    }
    const std::string key = Trim(std::string_view(trimmed).substr(0, eq));
    const std::string value = Trim(std::string_view(trimmed).substr(eq + 1));
    if (key.find('.') == std::string::npos || key.front() == '.' || key.back() == '.') {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": key '" + key + "' lacks a section");
    }
    if (value.empty()) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": empty value for '" + key + "'");
    }
    table.Insert(key, value, line_no);
  }

  ExperimentSpec spec;

  // dataset
  {
    const std::string key = "dataset.source";
    const Entry& e = table.Require(key);
    if (e.value == "synth") {
      spec.source = DataSource::kSynth;
      spec.synth.n = ToUnsigned("dataset.synth.n", table.Require("dataset.synth.n"));
      spec.synth.dim = ToUnsigned("dataset.synth.dim", table.Require("dataset.synth.dim"));
      if (const Entry* s = table.Take("dataset.synth.seed")) {
        spec.synth.seed = ToUnsigned("dataset.synth.seed", *s);
      }
      if (const Entry* s = table.Take("dataset.synth.noise")) {
        spec.synth.noise = ToDouble("dataset.synth.noise", *s);
      }
    } else if (e.value == "libsvm") {
      spec.source = DataSource::kLibsvm;
      std::filesystem::path p = table.Require("dataset.path").value;
      spec.libsvm_path = p.is_absolute() ? p : base_dir / p;
      if (const Entry* f = table.Take("dataset.feature_dim")) {
        spec.feature_dim = ToUnsigned("dataset.feature_dim", *f);
      }
    } else {
      throw BadValue(key, e, "synth or libsvm");
    }
  }

  // objective
  if (const Entry* e = table.Take("objective.kind")) {
    if (e->value == "logistic") spec.objective.kind = ObjectiveKind::kLogistic;
    else if (e->value == "ridge") spec.objective.kind = ObjectiveKind::kRidgeLS;
    else throw BadValue("objective.kind", *e, "logistic or ridge");
  }
  spec.objective.lambda = ToDouble("objective.lambda", table.Require("objective.lambda"));
  if (const Entry* e = table.Take("objective.reg_convention")) {
    if (e->value == "half") spec.objective.reg_convention = RegConvention::kHalf;
    else if (e->value == "full") spec.objective.reg_convention = RegConvention::kFull;
    else throw BadValue("objective.reg_convention", *e, "half or full");
  }

  // partition
  spec.clients = ToUnsigned("partition.clients", table.Require("partition.clients"));
  if (const Entry* e = table.Take("partition.scheme")) {
    if (e->value == "uniform") spec.partition.kind = PartitionKind::kUniformRandom;
    else if (e->value == "label_shards") spec.partition.kind = PartitionKind::kSortedByLabelShards;
    else throw BadValue("partition.scheme", *e, "uniform or label_shards");
  }
  if (const Entry* e = table.Take("partition.seed")) {
    spec.partition.seed = ToUnsigned("partition.seed", *e);
  }

  // algorithms: shared `algorithm.<field>` defaults, then per-name overrides
  AlgorithmConfig base;
  ApplyAlgorithmFields(table, base, "algorithm.");
  std::vector<std::string> names = {"flens", "fednewton", "fedns", "fedgd"};
  if (const Entry* e = table.Take("algorithm.names")) names = SplitList(e->value);
  for (const std::string& name : names) {
    const auto algorithm = ParseAlgorithm(name);
    if (!algorithm) {
      throw Error(ErrorCode::kValidationError,
                  "unknown algorithm '" + name + "' (flens, fednewton, fedns, fedgd)");
    }
    AlgorithmConfig cfg = base;
    cfg.algorithm = *algorithm;
    ApplyAlgorithmFields(table, cfg, "algorithm." + name + ".");
    spec.algorithms.push_back(cfg);
  }

  // sweep / bench / oracle / output / experiment
  if (const Entry* e = table.Take("sweep.k")) {
    for (const std::string& item : SplitList(e->value)) {
      spec.sweep_k.push_back(ToUnsigned("sweep.k", item, *e));
    }
  }
  if (const Entry* e = table.Take("sweep.repeats")) spec.sweep_repeats = ToCount("sweep.repeats", *e);
  if (const Entry* e = table.Take("sweep.rounds")) spec.sweep_rounds = ToCount("sweep.rounds", *e);
  if (const Entry* e = table.Take("sweep.identity_at_full")) {
    spec.sweep_identity_at_full = ToBool("sweep.identity_at_full", *e);
  }
  if (const Entry* e = table.Take("bench.rounds")) spec.bench_rounds = ToCount("bench.rounds", *e);
  if (const Entry* e = table.Take("oracle.tolerance")) {
    spec.oracle_tolerance = ToDouble("oracle.tolerance", *e);
  }
  if (const Entry* e = table.Take("oracle.max_iter")) {
    spec.oracle_max_iter = ToCount("oracle.max_iter", *e);
  }
  if (const Entry* e = table.Take("oracle.cache_dir")) spec.oracle_cache_dir = e->value;
  if (const Entry* e = table.Take("output.prefix")) spec.output_prefix = e->value;
  if (const Entry* e = table.Take("experiment.seed")) {
    spec.master_seed = ToUnsigned("experiment.seed", *e);
  }
  if (const Entry* e = table.Take("experiment.threads")) {
    spec.threads = ToCount("experiment.threads", *e);
  }

  table.RejectUnused();
  ValidateSpec(spec);
  return spec;
}

ExperimentSpec LoadSpec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open spec " + path.string());
  return ParseSpec(in, path.parent_path().empty() ? std::filesystem::path(".")
                                                  : path.parent_path());
}

std::string DumpSpec(const ExperimentSpec& spec) {
  std::ostringstream out;
  if (spec.source == DataSource::kSynth) {
    out << "dataset.source = synth\n"
        << "dataset.synth.n = " << spec.synth.n << '\n'
        << "dataset.synth.dim = " << spec.synth.dim << '\n'
        << "dataset.synth.seed = " << spec.synth.seed << '\n'
        << "dataset.synth.noise = " << FormatDouble(spec.synth.noise) << '\n';
  } else {
    out << "dataset.source = libsvm\n"
        << "dataset.path = " << std::filesystem::absolute(spec.libsvm_path).string() << '\n';
    if (spec.feature_dim) out << "dataset.feature_dim = " << *spec.feature_dim << '\n';
  }
  out << "objective.kind = "
      << (spec.objective.kind == ObjectiveKind::kLogistic ? "logistic" : "ridge") << '\n'
      << "objective.lambda = " << FormatDouble(spec.objective.lambda) << '\n'
      << "objective.reg_convention = "
      << (spec.objective.reg_convention == RegConvention::kHalf ? "half" : "full") << '\n'
      << "partition.clients = " << spec.clients << '\n'
      << "partition.scheme = "
      << (spec.partition.kind == PartitionKind::kUniformRandom ? "uniform" : "label_shards")
      << '\n'
      << "partition.seed = " << spec.partition.seed << '\n';

  out << "algorithm.names = ";
  for (std::size_t i = 0; i < spec.algorithms.size(); ++i) {
    out << (i ? "," : "") << AlgorithmName(spec.algorithms[i].algorithm);
  }
  out << '\n';
  for (const AlgorithmConfig& cfg : spec.algorithms) {
    const std::string p = "algorithm." + std::string(AlgorithmName(cfg.algorithm)) + ".";
    out << p << "step_size = " << (cfg.step_size ? FormatDouble(*cfg.step_size) : "auto") << '\n'
        << p << "step_rule = " << (cfg.step_rule == StepRule::kFixed ? "fixed" : "armijo") << '\n'
        << p << "momentum = " << MomentumText(cfg.momentum) << '\n'
        << p << "update_point = "
        << (cfg.update_point == UpdatePoint::kFromV ? "from_v" : "from_w") << '\n'
        << p << "sketch.kind = " << SketchKindName(cfg.sketch.kind) << '\n'
        << p << "sketch.k = " << cfg.sketch.k << '\n'
        << p << "sketch.reseed = "
        << (cfg.sketch.reseed == Reseed::kPerRound ? "per_round" : "fixed") << '\n'
        << p << "max_rounds = " << cfg.max_rounds << '\n'
        << p << "gap_tolerance = " << FormatDouble(cfg.gap_tolerance) << '\n';
  }
  if (!spec.sweep_k.empty()) {
    out << "sweep.k = ";
    for (std::size_t i = 0; i < spec.sweep_k.size(); ++i) out << (i ? "," : "") << spec.sweep_k[i];
    out << '\n';
  }
  out << "sweep.repeats = " << spec.sweep_repeats << '\n'
      << "sweep.rounds = " << spec.sweep_rounds << '\n'
      << "sweep.identity_at_full = " << (spec.sweep_identity_at_full ? "true" : "false") << '\n'
      << "bench.rounds = " << spec.bench_rounds << '\n'
      << "oracle.tolerance = " << FormatDouble(spec.oracle_tolerance) << '\n'
      << "oracle.max_iter = " << spec.oracle_max_iter << '\n';
  if (!spec.oracle_cache_dir.empty()) {
    out << "oracle.cache_dir = " << spec.oracle_cache_dir.string() << '\n';
  }
  out << "output.prefix = " << spec.output_prefix << '\n'
      << "experiment.seed = " << spec.master_seed << '\n'
      << "experiment.threads = " << spec.threads << '\n';
  return out.str();
}

Dataset LoadDataset(const ExperimentSpec& spec) {
  if (spec.source == DataSource::kSynth) {
    return SynthLogistic(spec.synth.n, spec.synth.dim, spec.synth.seed, spec.synth.noise);
  }
  return ParseLibsvmFile(spec.libsvm_path, spec.feature_dim);
}

}  // namespace fedsketch
