// Copyright 2026 The mgdrec Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Stochastic multi-subgradient descent with gradient normalization, plus the
// weighted-sum and single-objective baselines, over any problem that exposes
// per-objective losses and gradients on mini-batches.
//
// Per batch: every objective's gradient is divided by its empirical maximum
// loss (the full-data loss at the starting parameters), the weights alpha of
// the minimum-norm convex combination are solved, clamped to the configured
// bounds, and the parameters take a plain SGD step along the combination.

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mgdrec/errors.hpp"
#include "mgdrec/model.hpp"
#include "mgdrec/moo_core.hpp"
#include "mgdrec/qcop.hpp"
#include "mgdrec/random.hpp"

namespace mgdrec {

template <class P>
concept MultiObjectiveProblem = requires(const P& p, const Vector& w, std::span<const std::size_t> batch) {
  { p.num_objectives() } -> std::convertible_to<std::size_t>;
  { p.num_samples() } -> std::convertible_to<std::size_t>;
  { p.losses_and_gradients(w, batch) } -> std::same_as<std::vector<LossGrad>>;
  { p.full_losses(w) } -> std::same_as<std::vector<double>>;
};

enum class TrainMode { Smsgda, WeightedSum, Single };

inline std::string to_string(TrainMode m) {
  switch (m) {
    case TrainMode::Smsgda: return "smsgda";
    case TrainMode::WeightedSum: return "ws";
    case TrainMode::Single: return "single";
  }
  return "?";
}

inline TrainMode train_mode_from_string(const std::string& s) {
  if (s == "smsgda") return TrainMode::Smsgda;
  if (s == "ws") return TrainMode::WeightedSum;
  if (s == "single") return TrainMode::Single;
  throw ValidationError("unknown mode '" + s + "' (expected smsgda, ws or single)");
}

struct AlphaBounds {
  double lo = 0.0;
  double hi = 1.0;
};

struct StopRule {
  enum class Kind { EpochBudget, Plateau, GradNorm };
  Kind kind = Kind::EpochBudget;
  std::size_t patience = 3;
  double delta = 1e-4;
  double epsilon = 1e-6;
};

struct TrainConfig {
  TrainMode mode = TrainMode::Smsgda;
  std::size_t epochs = 50;
  std::size_t batch_size = 128;
  double learning_rate = 10.0;
  std::uint64_t seed = 0;
  bool normalize = true;
  std::vector<AlphaBounds> alpha_bounds;  // one per objective; empty means [0, 1] everywhere
  StopRule stop;
  std::size_t eval_interval = 0;  // batches between evaluations; 0 = once per epoch
  std::vector<double> weights;    // weighted-sum mode only
  std::optional<std::size_t> archive_capacity = 32;

  void validate(std::size_t n_objectives) const {
    if (n_objectives == 0) throw ContractViolation("train: empty objective set");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("learning_rate must be > 0");
    if (epochs < 1) throw ValidationError("epochs must be >= 1");
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (mode == TrainMode::Single && n_objectives != 1) {
      throw ValidationError("single mode needs exactly one objective");
    }
    if (mode == TrainMode::WeightedSum) {
      if (weights.size() != n_objectives) throw ValidationError("weights: one weight per objective required");
      double sum = 0.0;
      for (double w : weights) {
        if (!(w >= 0.0)) throw ValidationError("weights must be non-negative");
        sum += w;
      }
      if (std::abs(sum - 1.0) > kSimplexTolerance) throw ValidationError("weights must sum to 1");
    } else if (!weights.empty()) {
      throw ValidationError("weights are only valid in ws mode");
    }
    if (!alpha_bounds.empty()) {
      if (alpha_bounds.size() != n_objectives) throw ValidationError("alpha_bounds: one pair per objective required");
      double lo = 0.0, hi = 0.0;
      for (const auto& b : alpha_bounds) {
        if (!(b.lo >= 0.0 && b.hi <= 1.0 && b.lo <= b.hi)) throw ValidationError("alpha bounds must satisfy 0<=lo<=hi<=1");
        lo += b.lo;
        hi += b.hi;
      }
      if (lo > 1.0 + kSimplexTolerance || hi < 1.0 - kSimplexTolerance) {
        throw ValidationError("alpha bounds admit no point on the simplex");
      }
    }
    if (stop.kind == StopRule::Kind::Plateau && stop.patience < 1) throw ValidationError("plateau patience must be >= 1");
  }
};

/// Clamps each alpha to its bounds and spreads the surplus or deficit over
/// the unclamped entries in proportion to their mass.
inline AlphaVector constrain_alpha(const AlphaVector& alpha, std::span<const AlphaBounds> bounds) {
  if (bounds.empty()) return alpha;
  require(bounds.size() == alpha.size(), "constrain_alpha: bounds length mismatch");
  const auto n = alpha.size();
  std::vector<double> a = alpha.values();
  std::vector<bool> fixed(n, false);
  for (std::size_t pass = 0; pass <= n; ++pass) {
    bool violated = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (fixed[i]) continue;
      if (a[i] < bounds[i].lo) {
        a[i] = bounds[i].lo;
        fixed[i] = violated = true;
      } else if (a[i] > bounds[i].hi) {
        a[i] = bounds[i].hi;
        fixed[i] = violated = true;
      }
    }
    double fixed_mass = 0.0, free_mass = 0.0;
    std::size_t free_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (fixed[i]) {
        fixed_mass += a[i];
      } else {
        free_mass += a[i];
        ++free_count;
      }
    }
    if (free_count == 0) break;
    const double target = 1.0 - fixed_mass;
    for (std::size_t i = 0; i < n; ++i) {
      if (fixed[i]) continue;
      a[i] = free_mass > 0.0 ? a[i] * target / free_mass : target / static_cast<double>(free_count);
    }
    if (!violated) break;
  }

  double sum = std::accumulate(a.begin(), a.end(), 0.0);
  bool feasible = std::abs(sum - 1.0) <= kSimplexTolerance;
  for (std::size_t i = 0; i < n && feasible; ++i) {
    feasible = a[i] >= bounds[i].lo - kSimplexTolerance && a[i] <= bounds[i].hi + kSimplexTolerance;
  }
  if (!feasible) {
    // Every entry ended up pinned; shift uniformly inside the box until the mass is 1.
    auto mass = [&](double shift) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += std::clamp(alpha[i] + shift, bounds[i].lo, bounds[i].hi);
      return s;
    };
    double lo = -1.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (mass(mid) < 1.0 ? lo : hi) = mid;
    }
    for (std::size_t i = 0; i < n; ++i) a[i] = std::clamp(alpha[i] + 0.5 * (lo + hi), bounds[i].lo, bounds[i].hi);
    sum = std::accumulate(a.begin(), a.end(), 0.0);
  }
  for (double& x : a) x = std::max(0.0, x / sum);
  return AlphaVector(std::move(a));
}

struct Evaluation {
  std::vector<double> metrics;            // maximize-oriented, one per archive axis
  std::vector<double> validation_losses;  // raw, one per objective; may be empty
};

struct StepInfo {
  std::size_t epoch = 0;
  std::size_t step = 0;
  std::vector<double> losses;
  std::vector<double> normalized_losses;
  AlphaVector alpha;
  double grad_norm = 0.0;
};

struct TrainHooks {
  std::function<Evaluation(const Vector&)> evaluate;
  std::vector<std::string> metric_names;
  std::function<void(const StepInfo&, const Vector&)> on_step;  // params after the update
};

struct TrainState {
  Vector params;
  std::vector<double> empirical_max_losses;
  std::vector<double> denominators;  // empirical max, or 1.0 where degenerate
  ParetoArchive archive{{Orientation::Maximize}};
  std::map<std::string, Vector> snapshots;
  std::size_t epoch = 0;  // completed epochs
  std::size_t step = 0;
  std::size_t evaluations = 0;
  AlphaVector last_alpha;
  double last_grad_norm = std::numeric_limits<double>::infinity();
  double best_validation_loss = std::numeric_limits<double>::infinity();
  std::size_t flat_evaluations = 0;
  std::string stop_reason;
};

struct RunLog {
  std::vector<nlohmann::json> records;
  std::vector<std::string> warnings;

  std::string to_jsonl() const {
    std::string out;
    for (const auto& r : records) out += r.dump() + '\n';
    return out;
  }
};

/// Full-data loss of every objective at `params`.
template <MultiObjectiveProblem P>
std::vector<double> compute_empirical_max_losses(const P& problem, const Vector& params) {
  auto losses = problem.full_losses(params);
  require(losses.size() == problem.num_objectives(), "compute_empirical_max_losses: wrong loss count");
  return losses;
}

/// True once the configured rule fires. The epoch budget always applies.
inline bool check_stop(const TrainState& state, const TrainConfig& config) {
  if (state.epoch >= config.epochs) return true;
  switch (config.stop.kind) {
    case StopRule::Kind::EpochBudget: return false;
    case StopRule::Kind::Plateau: return state.flat_evaluations >= config.stop.patience;
    case StopRule::Kind::GradNorm: return state.last_grad_norm < config.stop.epsilon;
  }
  return false;
}

namespace detail {

inline nlohmann::json archive_status(InsertStatus s) {
  switch (s) {
    case InsertStatus::Accepted: return "accepted";
    case InsertStatus::Rejected: return "rejected";
    case InsertStatus::AcceptedEvicting: return "accepted_evicting";
  }
  return "?";
}

inline std::string payload_name(std::size_t epoch, std::size_t step) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "e%04zu-s%07zu", epoch, step);
  return buf;
}

template <MultiObjectiveProblem P>
void run_evaluation(TrainState& state, const TrainConfig& config, const TrainHooks& hooks, RunLog& log,
                    std::size_t n_objectives) {
  if (!hooks.evaluate) return;
  ++state.evaluations;
  const Evaluation ev = hooks.evaluate(state.params);
  nlohmann::json rec{{"type", "eval"}, {"epoch", state.epoch}, {"step", state.step}, {"metrics", ev.metrics}};

  if (!ev.validation_losses.empty()) {
    require(ev.validation_losses.size() == n_objectives, "evaluate hook: wrong validation loss count");
    double cd = 0.0;
    for (std::size_t i = 0; i < n_objectives; ++i) {
      cd += state.last_alpha[i] * ev.validation_losses[i] / state.denominators[i];
    }
    rec["validation_losses"] = ev.validation_losses;
    rec["common_descent_loss"] = cd;
    if (cd < state.best_validation_loss - config.stop.delta) {
      state.best_validation_loss = cd;
      state.flat_evaluations = 0;
    } else {
      ++state.flat_evaluations;
    }
  }

  bool finite = !ev.metrics.empty();
  for (double m : ev.metrics) finite = finite && std::isfinite(m);
  if (finite) {
    const auto payload = payload_name(state.epoch, state.step);
    const auto outcome = state.archive.insert(ev.metrics, payload);
    rec["payload"] = payload;
    rec["archive"] = archive_status(outcome.status);
    if (outcome.status != InsertStatus::Rejected) state.snapshots[payload] = state.params;
    auto evicted = nlohmann::json::array();
    for (const auto& e : outcome.evicted) {
      state.snapshots.erase(e.payload);
      evicted.push_back(e.payload);
    }
    rec["evicted"] = evicted;
  }
  log.records.push_back(std::move(rec));
}

}  // namespace detail

/// Runs the configured trainer from `init`. Mode Smsgda solves alpha per
/// batch (closed form for two objectives, Frank-Wolfe otherwise); mode
/// WeightedSum keeps alpha at `config.weights`; mode Single uses alpha = 1.
template <MultiObjectiveProblem P>
TrainState train(const P& problem, const TrainConfig& config, Vector init, const TrainHooks& hooks, RunLog& log) {
  const std::size_t n = problem.num_objectives();
  config.validate(n);
  require(problem.num_samples() >= 1, "train: problem has no samples");

  TrainState state;
  state.params = std::move(init);
  if (hooks.evaluate) {
    auto names = hooks.metric_names;
    state.archive = ParetoArchive(std::vector<Orientation>(names.empty() ? 1 : names.size(), Orientation::Maximize),
                                  config.archive_capacity, names);
  }

  state.empirical_max_losses = compute_empirical_max_losses(problem, state.params);
  state.denominators.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double l = state.empirical_max_losses[i];
    if (!std::isfinite(l)) throw NumericalAbort("initial loss of objective " + std::to_string(i) + " is not finite");
    if (l <= kDegenerateLoss) {
      log.warnings.push_back("objective " + std::to_string(i) + " has ~0 empirical max loss; normalization disabled for it");
      state.denominators[i] = 1.0;
    } else {
      state.denominators[i] = l;
    }
  }
  log.records.push_back({{"type", "init"},
                         {"mode", to_string(config.mode)},
                         {"empirical_max_losses", state.empirical_max_losses},
                         {"normalize", config.normalize},
                         {"warnings", log.warnings}});

  state.last_alpha = config.mode == TrainMode::WeightedSum ? AlphaVector(config.weights) : AlphaVector::uniform(n);

  Rng rng(config.seed);
  std::vector<std::size_t> order(problem.num_samples());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Vector> grads(n);
  std::size_t batches_since_eval = 0;

  while (state.epoch < config.epochs && state.stop_reason.empty()) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const auto end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      auto evals = problem.losses_and_gradients(state.params, batch);
      require(evals.size() == n, "train: problem returned wrong objective count");

      StepInfo info;
      info.epoch = state.epoch + 1;
      info.step = state.step + 1;
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(evals[i].loss) || !evals[i].grad.allFinite()) {
          throw NumericalAbort("non-finite loss or gradient for objective " + std::to_string(i) + " at step " +
                               std::to_string(info.step) + "; try a smaller learning_rate");
        }
        info.losses.push_back(evals[i].loss);
        info.normalized_losses.push_back(evals[i].loss / state.denominators[i]);
        grads[i] = config.normalize ? Vector(evals[i].grad / state.denominators[i]) : std::move(evals[i].grad);
      }

      nlohmann::json qcop_diag;
      AlphaVector alpha;
      if (config.mode == TrainMode::WeightedSum) {
        alpha = AlphaVector(config.weights);
      } else if (n == 1) {
        alpha = AlphaVector({1.0});
      } else if (n == 2) {
        alpha = alpha_two(grads[0], grads[1]);
      } else {
        const auto res = solve_qcop(std::span<const Vector>(grads));
        alpha = res.alphas;
        qcop_diag = {{"iterations", res.diagnostics.iterations},
                     {"gap", res.diagnostics.gap},
                     {"converged", res.diagnostics.converged}};
      }
      if (config.mode != TrainMode::WeightedSum) alpha = constrain_alpha(alpha, config.alpha_bounds);

      const Vector direction = combine_gradients(std::span<const Vector>(grads), alpha);
      state.params -= config.learning_rate * direction;
      if (!state.params.allFinite()) {
        throw NumericalAbort("parameters became non-finite at step " + std::to_string(state.step + 1) +
                             "; try a smaller learning_rate");
      }
      ++state.step;
      state.last_alpha = alpha;
      state.last_grad_norm = direction.norm();
      info.alpha = alpha;
      info.grad_norm = state.last_grad_norm;

      nlohmann::json rec{{"type", "step"},
                         {"epoch", info.epoch},
                         {"step", info.step},
                         {"losses", info.losses},
                         {"normalized_losses", info.normalized_losses},
                         {"alpha", alpha.values()},
                         {"grad_norm", info.grad_norm}};
      if (!qcop_diag.is_null()) rec["qcop"] = qcop_diag;
      log.records.push_back(std::move(rec));
      if (hooks.on_step) hooks.on_step(info, state.params);

      if (config.eval_interval > 0 && ++batches_since_eval == config.eval_interval) {
        batches_since_eval = 0;
        detail::run_evaluation<P>(state, config, hooks, log, n);
      }
      if (config.stop.kind == StopRule::Kind::GradNorm && check_stop(state, config)) {
        state.stop_reason = "grad_norm";
        break;
      }
      if (config.stop.kind == StopRule::Kind::Plateau && check_stop(state, config)) {
        state.stop_reason = "plateau";
        break;
      }
    }
    ++state.epoch;
    if (config.eval_interval == 0) detail::run_evaluation<P>(state, config, hooks, log, n);
    if (state.stop_reason.empty() && check_stop(state, config)) {
      state.stop_reason = state.epoch >= config.epochs ? "epochs" : (config.stop.kind == StopRule::Kind::Plateau ? "plateau" : "grad_norm");
    }
  }
  log.records.push_back({{"type", "done"},
                         {"epochs", state.epoch},
                         {"steps", state.step},
                         {"stop_reason", state.stop_reason},
                         {"archive_size", state.archive.size()}});
  return state;
}

}  // namespace mgdrec
