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

#ifndef FEDSKETCH_FEDSIM_HPP_
#define FEDSKETCH_FEDSIM_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fedsketch/common.hpp"
#include "fedsketch/data.hpp"
#include "fedsketch/objective.hpp"
#include "fedsketch/sketch.hpp"

namespace fedsketch {

enum class Algorithm { kFLeNS, kFedNewton, kFedNS, kFedGD };

std::string_view AlgorithmName(Algorithm algorithm);
std::optional<Algorithm> ParseAlgorithm(std::string_view name);

enum class StepRule { kFixed, kArmijo };
enum class MomentumKind { kConditionRatio, kConstant, kOff };
enum class UpdatePoint { kFromV, kFromW };
enum class Reseed { kPerRound, kFixed };

struct MomentumPolicy {
  MomentumKind kind = MomentumKind::kConditionRatio;
  double beta = 0.0;  // used by kConstant
};

struct SketchConfig {
  SketchKind kind = SketchKind::kSRHT;
  std::size_t k = 16;
  Reseed reseed = Reseed::kPerRound;
};

struct AlgorithmConfig {
  Algorithm algorithm = Algorithm::kFLeNS;
  // Unset: 1/L1 for FedGD, 1 for the Newton-type methods.
  std::optional<double> step_size;
  StepRule step_rule = StepRule::kFixed;
  MomentumPolicy momentum;  // FLeNS only
  SketchConfig sketch;      // FLeNS and FedNS
  UpdatePoint update_point = UpdatePoint::kFromV;
  int max_rounds = 30;
  double gap_tolerance = 0.0;  // <= 0 disables early stopping
  std::uint64_t seed = 0;      // root of all per-round sketch seeds
  int threads = 1;             // client-side parallelism
};

void ValidateConfig(const AlgorithmConfig& cfg);

struct FederatedState {
  Vector w;
  Vector w_prev;
  int round = 0;
  double beta = 0.0;

  static FederatedState Initial(std::size_t dim);
};

struct RoundMetrics {
  int round = 0;
  double loss = 0.0;
  double gap = 0.0;
  double grad_norm = 0.0;
  std::uint64_t uplink_floats = 0;    // all clients -> server
  std::uint64_t downlink_floats = 0;  // server -> all clients
  double wall_seconds = 0.0;
};

// Quantities every step needs besides the state.
struct RoundContext {
  SmoothnessConstants constants;
  double loss_star = 0.0;
};

struct StepResult {
  FederatedState state;
  RoundMetrics metrics;
};

double MomentumCoefficient(const MomentumPolicy& policy, double l1, double gamma,
                           int round);

// Weighted objective over all clients, reduced in ascending client_id order.
double GlobalLoss(const Objective& obj, std::span<const ClientDataset> clients,
                  const Vector& w);
Vector GlobalGradient(const Objective& obj, std::span<const ClientDataset> clients,
                      const Vector& w);

struct SketchedUpdate {
  Matrix hessian;   // k x k, S * (loss Hessian) * S^T
  Vector gradient;  // k, S * (regularized gradient)
};

SketchedUpdate ClientFlens(const ClientDataset& client, const Objective& obj,
                           const Vector& v, const SketchOperator& sketch);

SketchedUpdate ServerAggregate(std::span<const SketchedUpdate> parts,
                               std::span<const double> weights);

std::uint64_t RoundSeed(const AlgorithmConfig& cfg, int round);

StepResult FlensStep(const FederatedState& state, std::span<const ClientDataset> clients,
                     const Objective& obj, const AlgorithmConfig& cfg,
                     const RoundContext& ctx);
StepResult FedNewtonStep(const FederatedState& state,
                         std::span<const ClientDataset> clients, const Objective& obj,
                         const AlgorithmConfig& cfg, const RoundContext& ctx);
StepResult FedNSStep(const FederatedState& state, std::span<const ClientDataset> clients,
                     const Objective& obj, const AlgorithmConfig& cfg,
                     const RoundContext& ctx);
StepResult FedGDStep(const FederatedState& state, std::span<const ClientDataset> clients,
                     const Objective& obj, const AlgorithmConfig& cfg,
                     const RoundContext& ctx);

// Dispatches on cfg.algorithm.
StepResult Step(const FederatedState& state, std::span<const ClientDataset> clients,
                const Objective& obj, const AlgorithmConfig& cfg, const RoundContext& ctx);

struct CommunicationCost {
  std::uint64_t uplink_per_client = 0;
  std::uint64_t downlink_per_client = 0;
  std::uint64_t uplink_total = 0;
  std::uint64_t downlink_total = 0;
};

// Floats per round. FLeNS counts the broadcast sketch seed as one downlink
// scalar.
CommunicationCost AccountFloats(Algorithm algorithm, std::uint64_t dim, std::uint64_t k,
                                std::uint64_t clients);

using RoundObserver = std::function<void(const FederatedState&, const RoundMetrics&)>;

// Runs from w = 0 and returns one entry per round, starting with round 0.
std::vector<RoundMetrics> RunExperiment(const Objective& obj,
                                        std::span<const ClientDataset> clients,
                                        const AlgorithmConfig& cfg, const Vector& w_star,
                                        const RoundObserver& observer = {});

}  // namespace fedsketch

#endif  // FEDSKETCH_FEDSIM_HPP_
