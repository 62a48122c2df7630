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

// fedsketch: command-line front end for the federated optimization lab.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "fedsketch/commands.hpp"
#include "fedsketch/data.hpp"
#include "fedsketch/experiment.hpp"

namespace {

using namespace fedsketch;

struct SpecFlags {
  std::string spec_path;
  std::optional<std::string> out_prefix;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> reg_convention;
};

void AddSpecFlags(CLI::App* cmd, SpecFlags& flags) {
  cmd->add_option("--spec", flags.spec_path, "experiment spec file")->required();
  cmd->add_option("--out", flags.out_prefix, "output path prefix (overrides output.prefix)");
  cmd->add_option("--seed", flags.seed, "master seed (overrides experiment.seed)");
  cmd->add_option("--reg-convention", flags.reg_convention,
                  "half: (lambda/2)||w||^2, full: lambda||w||^2")
      ->check(CLI::IsMember({"half", "full"}));
}

ExperimentSpec ResolveSpec(const SpecFlags& flags) {
  ExperimentSpec spec = LoadSpec(flags.spec_path);
  if (flags.out_prefix) spec.output_prefix = *flags.out_prefix;
  if (flags.seed) spec.master_seed = *flags.seed;
  if (flags.reg_convention) {
    spec.objective.reg_convention =
        *flags.reg_convention == "half" ? RegConvention::kHalf : RegConvention::kFull;
  }
  ValidateSpec(spec);
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Federated second-order optimization lab: FLeNS, FedNewton, FedNS and FedGD on a\n"
      "deterministic single-process simulator.\n\n"
      "LIBSVM labels: the two distinct raw values map to -1 (smaller) and +1 (larger),\n"
      "so {1,2}, {0,1} and {-1,+1} files all canonicalize the same way."};
  app.require_subcommand(1);

  SpecFlags run_flags, sweep_flags, bench_flags, oracle_flags;
  auto* run = app.add_subcommand("run", "run every configured algorithm; one CSV each");
  AddSpecFlags(run, run_flags);
  auto* sweep = app.add_subcommand("sweep-sketch", "FLeNS final gap across sweep.k");
  AddSpecFlags(sweep, sweep_flags);
  auto* bench = app.add_subcommand("bench-time", "median wall time per round vs k");
  AddSpecFlags(bench, bench_flags);
  auto* oracle = app.add_subcommand("oracle", "compute (or load cached) w* by Newton");
  AddSpecFlags(oracle, oracle_flags);

  std::size_t gen_n = 0, gen_dim = 0;
  std::uint64_t gen_seed = 0;
  double gen_noise = 0.0;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-data", "write a synthetic logistic dataset as LIBSVM");
  gen->add_option("--n", gen_n, "rows")->required();
  gen->add_option("--dim", gen_dim, "features")->required();
  gen->add_option("--seed", gen_seed, "seed");
  gen->add_option("--noise", gen_noise, "label flip probability in [0, 0.5)");
  gen->add_option("--out", gen_out, "output file (default: stdout)");

  std::string check_path;
  std::optional<std::size_t> check_dim;
  auto* check = app.add_subcommand("parse-check", "validate a LIBSVM file");
  check->add_option("path", check_path, "LIBSVM file ('-' for stdin)")->required();
  check->add_option("--feature-dim", check_dim, "override the feature dimension");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto outcome = CmdRun(ResolveSpec(run_flags));
      for (const auto& p : outcome.csv_paths) std::cout << p.string() << '\n';
      std::cout << outcome.json_path.string() << '\n';
    } else if (*sweep) {
      std::cout << CmdSweepSketch(ResolveSpec(sweep_flags)).string() << '\n';
    } else if (*bench) {
      std::cout << CmdBenchTime(ResolveSpec(bench_flags)).string() << '\n';
    } else if (*oracle) {
      const auto outcome = CmdOracle(ResolveSpec(oracle_flags));
      std::cerr << (outcome.from_cache ? "oracle: served from cache\n" : "oracle: computed\n");
      std::cout << outcome.json_path.string() << '\n';
    } else if (*gen) {
      const Dataset data = SynthLogistic(gen_n, gen_dim, gen_seed, gen_noise);
      if (gen_out.empty()) {
        WriteLibsvm(std::cout, data);
      } else {
        std::ostringstream text;
        WriteLibsvm(text, data);
        WriteFileAtomic(gen_out, text.str());
      }
    } else if (*check) {
      const Dataset data =
          check_path == "-" ? ParseLibsvm(std::cin, check_dim) : ParseLibsvmFile(check_path, check_dim);
      const auto positives = (data.labels.array() > 0).count();
      std::cout << "rows=" << data.row_count() << " features=" << data.feature_dim()
                << " positive=" << positives
                << " negative=" << data.row_count() - static_cast<std::size_t>(positives) << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
