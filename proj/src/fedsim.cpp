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

#include "fedsketch/fedsim.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <utility>

namespace fedsketch {
namespace {

using Clock = std::chrono::steady_clock;

// Runs fn(i) for every client index. Results must be written to slots owned
// by i; reductions happen afterwards in index order.
template <typename Fn>
void ForEachClient(std::size_t count, int threads, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < count; i += workers) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<double> Weights(std::span<const ClientDataset> clients) {
  std::vector<double> w;
  w.reserve(clients.size());
  for (const auto& c : clients) w.push_back(c.weight);
  return w;
}

std::size_t ModelDim(std::span<const ClientDataset> clients) {
  if (clients.empty()) throw Error(ErrorCode::kInvalidDimensions, "no clients");
  return clients.front().data.feature_dim();
}

double ResolvedStepSize(const AlgorithmConfig& cfg, const RoundContext& ctx) {
  if (cfg.step_size) return *cfg.step_size;
  return cfg.algorithm == Algorithm::kFedGD ? 1.0 / ctx.constants.l1 : 1.0;
}

// Applies w+ = base - mu * direction. Under Armijo, halves mu until the global
// loss does not exceed loss(current); returns nullopt if that never happens.
std::optional<Vector> TryStep(const Vector& base, const Vector& current,
                              const Vector& direction, std::span<const ClientDataset> clients,
                              const Objective& obj, const AlgorithmConfig& cfg,
                              const RoundContext& ctx) {
  double mu = ResolvedStepSize(cfg, ctx);
  if (cfg.step_rule == StepRule::kFixed) {
    Vector next = base - mu * direction;
    if (!next.allFinite()) {
      throw Error(ErrorCode::kNonFiniteIterate, "iterate has non-finite entries");
    }
    return next;
  }
  constexpr int kMaxHalvings = 30;
  const double reference = GlobalLoss(obj, clients, current);
  for (int h = 0; h <= kMaxHalvings; ++h, mu *= 0.5) {
    Vector next = base - mu * direction;
    if (!next.allFinite()) continue;
    if (GlobalLoss(obj, clients, next) <= reference) return next;
  }
  return std::nullopt;
}

Vector TakeStep(const Vector& base, const Vector& current, const Vector& direction,
                std::span<const ClientDataset> clients, const Objective& obj,
                const AlgorithmConfig& cfg, const RoundContext& ctx) {
  auto next = TryStep(base, current, direction, clients, obj, cfg, ctx);
  if (!next) throw Error(ErrorCode::kLineSearchFailed, "no decrease after 30 halvings");
  return *std::move(next);
}

RoundMetrics Measure(const FederatedState& next, std::span<const ClientDataset> clients,
                     const Objective& obj, const RoundContext& ctx) {
  RoundMetrics m;
  m.round = next.round;
  m.loss = GlobalLoss(obj, clients, next.w);
  m.gap = m.loss - ctx.loss_star;
  m.grad_norm = GlobalGradient(obj, clients, next.w).norm();
  return m;
}

StepResult Finish(const FederatedState& state, Vector next_w, double beta,
                  std::span<const ClientDataset> clients, const Objective& obj,
                  const RoundContext& ctx, Clock::time_point start,
                  std::uint64_t uplink, std::uint64_t downlink) {
  const double wall = std::chrono::duration<double>(Clock::now() - start).count();
  StepResult result;
  result.state.w_prev = state.w;
  result.state.w = std::move(next_w);
  result.state.round = state.round + 1;
  result.state.beta = beta;
  result.metrics = Measure(result.state, clients, obj, ctx);
  result.metrics.uplink_floats = uplink;
  result.metrics.downlink_floats = downlink;
  result.metrics.wall_seconds = wall;
  return result;
}

void CheckState(const FederatedState& state, std::size_t dim) {
  if (static_cast<std::size_t>(state.w.size()) != dim ||
      static_cast<std::size_t>(state.w_prev.size()) != dim) {
    throw Error(ErrorCode::kDimensionMismatch, "state dimension differs from data");
  }
}

}  // namespace

std::string_view AlgorithmName(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kFLeNS: return "flens";
    case Algorithm::kFedNewton: return "fednewton";
    case Algorithm::kFedNS: return "fedns";
    case Algorithm::kFedGD: return "fedgd";
  }
  return "unknown";
}

std::optional<Algorithm> ParseAlgorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::kFLeNS, Algorithm::kFedNewton, Algorithm::kFedNS,
                      Algorithm::kFedGD}) {
    if (AlgorithmName(a) == name) return a;
  }
  return std::nullopt;
}

void ValidateConfig(const AlgorithmConfig& cfg) {
  if (cfg.step_size && !(*cfg.step_size > 0.0 && std::isfinite(*cfg.step_size))) {
    throw Error(ErrorCode::kValidationError, "step size must be positive");
  }
  if (cfg.momentum.kind == MomentumKind::kConstant &&
      !(cfg.momentum.beta >= 0.0 && cfg.momentum.beta < 1.0)) {
    throw Error(ErrorCode::kValidationError, "constant momentum needs 0 <= beta < 1");
  }
  if (cfg.max_rounds < 0) throw Error(ErrorCode::kValidationError, "max_rounds < 0");
  if (cfg.sketch.k == 0) throw Error(ErrorCode::kValidationError, "sketch k must be >= 1");
}

FederatedState FederatedState::Initial(std::size_t dim) {
  FederatedState s;
  s.w = Vector::Zero(static_cast<Eigen::Index>(dim));
  s.w_prev = s.w;
  return s;
}

double MomentumCoefficient(const MomentumPolicy& policy, double l1, double gamma,
                           int /*round*/) {
  switch (policy.kind) {
    case MomentumKind::kOff:
      return 0.0;
    case MomentumKind::kConstant:
      return policy.beta;
    case MomentumKind::kConditionRatio:
      if (!(gamma > 0.0) || l1 < gamma) {
        throw Error(ErrorCode::kInvalidConstants,
                    "need L1 >= gamma > 0, got L1=" + std::to_string(l1) +
                        ", gamma=" + std::to_string(gamma));
      }
      return (l1 - gamma) / (l1 + gamma);
  }
  return 0.0;
}

double GlobalLoss(const Objective& obj, std::span<const ClientDataset> clients,
                  const Vector& w) {
  double total = 0.0;
  for (const auto& c : clients) total += c.weight * Loss(obj, w, c.data);
  return total;
}

Vector GlobalGradient(const Objective& obj, std::span<const ClientDataset> clients,
                      const Vector& w) {
  Vector total = Vector::Zero(w.size());
  for (const auto& c : clients) total += c.weight * Gradient(obj, w, c.data);
  return total;
}

SketchedUpdate ClientFlens(const ClientDataset& client, const Objective& obj,
                           const Vector& v, const SketchOperator& sketch) {
  // (S A^T)(S A^T)^T = S (A^T A) S^T without forming the M x M Hessian.
  const Matrix sqrt_t = HessianSqrt(obj, v, client.data).transpose();  // M x n_j
  const Matrix projected = sketch.ApplyLeft(sqrt_t);                   // k x n_j
  SketchedUpdate out;
  out.hessian = projected * projected.transpose();
  out.hessian = 0.5 * (out.hessian + out.hessian.transpose()).eval();
  out.gradient = sketch.Apply(Gradient(obj, v, client.data));
  return out;
}

SketchedUpdate ServerAggregate(std::span<const SketchedUpdate> parts,
                               std::span<const double> weights) {
  if (parts.empty() || parts.size() != weights.size()) {
    throw Error(ErrorCode::kWeightMismatch, "one weight per client part required");
  }
  double weight_sum = 0.0;
  for (double w : weights) weight_sum += w;
  if (std::abs(weight_sum - 1.0) > 1e-12) {
    throw Error(ErrorCode::kWeightMismatch,
                "weights sum to " + std::to_string(weight_sum));
  }
  SketchedUpdate total;
  total.hessian = Matrix::Zero(parts[0].hessian.rows(), parts[0].hessian.cols());
  total.gradient = Vector::Zero(parts[0].gradient.size());
  for (std::size_t j = 0; j < parts.size(); ++j) {
    if (parts[j].hessian.rows() != total.hessian.rows() ||
        parts[j].hessian.cols() != total.hessian.cols() ||
        parts[j].gradient.size() != total.gradient.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "client parts differ in shape");
    }
    total.hessian += weights[j] * parts[j].hessian;
    total.gradient += weights[j] * parts[j].gradient;
  }
  return total;
}

std::uint64_t RoundSeed(const AlgorithmConfig& cfg, int round) {
  const int stream = cfg.sketch.reseed == Reseed::kPerRound ? round : 0;
  return DeriveSeed(cfg.seed, static_cast<std::uint64_t>(stream));
}

StepResult FlensStep(const FederatedState& state, std::span<const ClientDataset> clients,
                     const Objective& obj, const AlgorithmConfig& cfg,
                     const RoundContext& ctx) {
  const auto start = Clock::now();
  const std::size_t dim = ModelDim(clients);
  CheckState(state, dim);

  double beta =
      MomentumCoefficient(cfg.momentum, ctx.constants.l1, ctx.constants.gamma, state.round);
  // An identity sketch always spans the full model.
  const std::size_t k = cfg.sketch.kind == SketchKind::kIdentity ? dim : cfg.sketch.k;
  const SketchOperator sketch(cfg.sketch.kind, k, dim, RoundSeed(cfg, state.round));
  const auto weights = Weights(clients);

  // One client exchange: sketched Newton direction at v, lifted to R^M.
  const auto direction_at = [&](const Vector& v) {
    std::vector<SketchedUpdate> parts(clients.size());
    ForEachClient(clients.size(), cfg.threads, [&](std::size_t j) {
      parts[j] = ClientFlens(clients[j], obj, v, sketch);
    });
    SketchedUpdate system = ServerAggregate(parts, weights);
    // Regularizer stays exact: S (reg I) S^T = reg * gram.
    system.hessian += obj.reg() * Gram(sketch);
    const Vector delta_s =
        SolveSpd(system.hessian, system.gradient, ErrorCode::kSingularSketchedSystem);
    return sketch.ApplyTranspose(delta_s);
  };

  const Vector v = state.w + beta * (state.w - state.w_prev);
  const Vector& base = cfg.update_point == UpdatePoint::kFromV ? v : state.w;
  std::optional<Vector> next =
      TryStep(base, state.w, direction_at(v), clients, obj, cfg, ctx);
  int exchanges = 1;
  if (!next && beta != 0.0) {
    // Momentum restart: the lookahead admits no decrease, so redo the round
    // from w itself, where the sketched direction is a descent direction.
    beta = 0.0;
    next = TryStep(state.w, state.w, direction_at(state.w), clients, obj, cfg, ctx);
    ++exchanges;
  }
  if (!next) throw Error(ErrorCode::kLineSearchFailed, "no decrease after 30 halvings");

  const auto cost = AccountFloats(Algorithm::kFLeNS, dim, k, clients.size());
  return Finish(state, *std::move(next), beta, clients, obj, ctx, start,
                exchanges * cost.uplink_total, exchanges * cost.downlink_total);
}

StepResult FedNewtonStep(const FederatedState& state,
                         std::span<const ClientDataset> clients, const Objective& obj,
                         const AlgorithmConfig& cfg, const RoundContext& ctx) {
  const auto start = Clock::now();
  const std::size_t dim = ModelDim(clients);
  CheckState(state, dim);

  std::vector<SketchedUpdate> parts(clients.size());
  ForEachClient(clients.size(), cfg.threads, [&](std::size_t j) {
    parts[j].hessian = Hessian(obj, state.w, clients[j].data);
    parts[j].gradient = Gradient(obj, state.w, clients[j].data);
  });
  const SketchedUpdate total = ServerAggregate(parts, Weights(clients));
  const Vector direction =
      SolveSpd(total.hessian, total.gradient, ErrorCode::kSingularHessian);
  Vector next = TakeStep(state.w, state.w, direction, clients, obj, cfg, ctx);

  const auto cost = AccountFloats(Algorithm::kFedNewton, dim, 0, clients.size());
  return Finish(state, std::move(next), 0.0, clients, obj, ctx, start, cost.uplink_total,
                cost.downlink_total);
}

StepResult FedNSStep(const FederatedState& state, std::span<const ClientDataset> clients,
                     const Objective& obj, const AlgorithmConfig& cfg,
                     const RoundContext& ctx) {
  const auto start = Clock::now();
  const std::size_t dim = ModelDim(clients);
  CheckState(state, dim);
  const std::uint64_t round_seed = RoundSeed(cfg, state.round);

  // Each client sketches its own n_j rows with an independent seed.
  std::vector<Matrix> blocks(clients.size());
  std::vector<Vector> grads(clients.size());
  std::vector<std::uint64_t> rows_sent(clients.size());
  ForEachClient(clients.size(), cfg.threads, [&](std::size_t j) {
    const ClientDataset& client = clients[j];
    const std::size_t n_j = client.data.row_count();
    const std::size_t k = cfg.sketch.kind == SketchKind::kIdentity ? n_j : cfg.sketch.k;
    const SketchOperator sketch(
        cfg.sketch.kind, k, n_j,
        DeriveSeed(round_seed, static_cast<std::uint64_t>(client.client_id) + 1));
    blocks[j] = sketch.ApplyLeft(HessianSqrt(obj, state.w, client.data));  // k x M
    grads[j] = Gradient(obj, state.w, client.data);
    rows_sent[j] = k;
  });

  Matrix hessian = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  Vector gradient = Vector::Zero(static_cast<Eigen::Index>(dim));
  std::uint64_t uplink = 0;
  double weight_sum = 0.0;
  for (std::size_t j = 0; j < clients.size(); ++j) {
    hessian.noalias() += clients[j].weight * (blocks[j].transpose() * blocks[j]);
    gradient += clients[j].weight * grads[j];
    weight_sum += clients[j].weight;
    uplink += AccountFloats(Algorithm::kFedNS, dim, rows_sent[j], 1).uplink_per_client;
  }
  if (std::abs(weight_sum - 1.0) > 1e-12) {
    throw Error(ErrorCode::kWeightMismatch, "client weights do not sum to 1");
  }
  hessian = 0.5 * (hessian + hessian.transpose()).eval();
  hessian.diagonal().array() += obj.reg();

  const Vector direction = SolveSpd(hessian, gradient, ErrorCode::kSingularHessian);
  Vector next = TakeStep(state.w, state.w, direction, clients, obj, cfg, ctx);

  const auto cost = AccountFloats(Algorithm::kFedNS, dim, cfg.sketch.k, clients.size());
  return Finish(state, std::move(next), 0.0, clients, obj, ctx, start, uplink,
                cost.downlink_total);
}

StepResult FedGDStep(const FederatedState& state, std::span<const ClientDataset> clients,
                     const Objective& obj, const AlgorithmConfig& cfg,
                     const RoundContext& ctx) {
  const auto start = Clock::now();
  const std::size_t dim = ModelDim(clients);
  CheckState(state, dim);

  std::vector<Vector> grads(clients.size());
  ForEachClient(clients.size(), cfg.threads, [&](std::size_t j) {
    grads[j] = Gradient(obj, state.w, clients[j].data);
  });
  Vector gradient = Vector::Zero(static_cast<Eigen::Index>(dim));
  for (std::size_t j = 0; j < clients.size(); ++j) gradient += clients[j].weight * grads[j];
  Vector next = TakeStep(state.w, state.w, gradient, clients, obj, cfg, ctx);

  const auto cost = AccountFloats(Algorithm::kFedGD, dim, 0, clients.size());
  return Finish(state, std::move(next), 0.0, clients, obj, ctx, start, cost.uplink_total,
                cost.downlink_total);
}

StepResult Step(const FederatedState& state, std::span<const ClientDataset> clients,
                const Objective& obj, const AlgorithmConfig& cfg, const RoundContext& ctx) {
  switch (cfg.algorithm) {
    case Algorithm::kFLeNS: return FlensStep(state, clients, obj, cfg, ctx);
    case Algorithm::kFedNewton: return FedNewtonStep(state, clients, obj, cfg, ctx);
    case Algorithm::kFedNS: return FedNSStep(state, clients, obj, cfg, ctx);
    case Algorithm::kFedGD: return FedGDStep(state, clients, obj, cfg, ctx);
  }
  throw Error(ErrorCode::kValidationError, "unknown algorithm");
}

CommunicationCost AccountFloats(Algorithm algorithm, std::uint64_t dim, std::uint64_t k,
                                std::uint64_t clients) {
  CommunicationCost cost;
  switch (algorithm) {
    case Algorithm::kFLeNS:
      cost.uplink_per_client = k * k + k;
      cost.downlink_per_client = dim + 1;
      break;
    case Algorithm::kFedNewton:
      cost.uplink_per_client = dim * dim + dim;
      cost.downlink_per_client = dim;
      break;
    case Algorithm::kFedNS:
      cost.uplink_per_client = k * dim + dim;
      cost.downlink_per_client = dim;
      break;
    case Algorithm::kFedGD:
      cost.uplink_per_client = dim;
      cost.downlink_per_client = dim;
      break;
  }
  cost.uplink_total = cost.uplink_per_client * clients;
  cost.downlink_total = cost.downlink_per_client * clients;
  return cost;
}

std::vector<RoundMetrics> RunExperiment(const Objective& obj,
                                        std::span<const ClientDataset> clients,
                                        const AlgorithmConfig& cfg, const Vector& w_star,
                                        const RoundObserver& observer) {
  ValidateObjective(obj);
  ValidateConfig(cfg);
  const std::size_t dim = ModelDim(clients);
  if (static_cast<std::size_t>(w_star.size()) != dim) {
    throw Error(ErrorCode::kDimensionMismatch, "w* dimension differs from data");
  }

  Dataset pooled;  // constants only depend on the pooled Gram spectrum
  {
    std::size_t n = 0;
    for (const auto& c : clients) n += c.data.row_count();
    pooled.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    pooled.labels.resize(static_cast<Eigen::Index>(n));
    Eigen::Index row = 0;
    for (const auto& c : clients) {
      const Eigen::Index rows = c.data.features.rows();
      pooled.features.middleRows(row, rows) = c.data.features;
      pooled.labels.segment(row, rows) = c.data.labels;
      row += rows;
    }
  }

  RoundContext ctx;
  ctx.constants = EstimateConstants(obj, pooled);
  ctx.loss_star = GlobalLoss(obj, clients, w_star);

  FederatedState state = FederatedState::Initial(dim);
  std::vector<RoundMetrics> history;
  history.reserve(static_cast<std::size_t>(cfg.max_rounds) + 1);
  RoundMetrics initial;
  initial.loss = GlobalLoss(obj, clients, state.w);
  initial.gap = initial.loss - ctx.loss_star;
  initial.grad_norm = GlobalGradient(obj, clients, state.w).norm();
  history.push_back(initial);
  if (observer) observer(state, initial);

  for (int t = 0; t < cfg.max_rounds; ++t) {
    if (cfg.gap_tolerance > 0.0 && history.back().gap <= cfg.gap_tolerance) break;
    StepResult result;
    try {
      result = Step(state, clients, obj, cfg, ctx);
    } catch (const Error& e) {
      throw Error(e.code(), "round " + std::to_string(t + 1) + " (" +
                                std::string(AlgorithmName(cfg.algorithm)) + "): " + e.detail());
    }
    state = std::move(result.state);
    history.push_back(result.metrics);
    if (observer) observer(state, result.metrics);
  }
  return history;
}

}  // namespace fedsketch
