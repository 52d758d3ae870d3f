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

// Binds the reconstruction model and a dataset to the generic trainer.

#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mgdrec/data.hpp"
#include "mgdrec/metrics.hpp"
#include "mgdrec/model.hpp"
#include "mgdrec/trainer.hpp"

namespace mgdrec {

/// Objective losses of the recommender over a fixed set of (possibly
/// preference-injected) training rows. One sample = one user.
class RecommenderProblem {
 public:
  RecommenderProblem(RowMatrix rows, const ItemMeta& meta, std::vector<Objective> objectives, std::size_t hidden)
      : rows_(std::move(rows)), objectives_(std::move(objectives)), hidden_(hidden) {
    require(!objectives_.empty(), "RecommenderProblem: empty objective set");
    require(static_cast<std::size_t>(rows_.cols()) == meta.size(), "RecommenderProblem: metadata length mismatch");
    for (auto o : objectives_) weights_.push_back(objective_weights(o, meta));
  }

  std::size_t num_objectives() const { return objectives_.size(); }
  std::size_t num_samples() const { return static_cast<std::size_t>(rows_.rows()); }
  std::size_t items() const { return static_cast<std::size_t>(rows_.cols()); }
  const std::vector<Objective>& objectives() const { return objectives_; }
  const RowMatrix& rows() const { return rows_; }

  std::vector<LossGrad> losses_and_gradients(const Vector& w, std::span<const std::size_t> batch) const {
    RowMatrix x(static_cast<Eigen::Index>(batch.size()), rows_.cols());
    for (std::size_t r = 0; r < batch.size(); ++r) x.row(static_cast<Eigen::Index>(r)) = rows_.row(static_cast<Eigen::Index>(batch[r]));
    return weighted_reconstruction(as_params(w), x, weights_);
  }

  std::vector<double> full_losses(const Vector& w) const { return losses_on(w, rows_); }

  std::vector<double> losses_on(const Vector& w, const RowMatrix& x) const {
    std::vector<double> out;
    for (auto& lg : weighted_reconstruction(as_params(w), x, weights_)) out.push_back(lg.loss);
    return out;
  }

  RecommenderParams as_params(const Vector& w) const {
    RecommenderParams p(items(), hidden_);
    require(w.size() == p.size(), "RecommenderProblem: parameter length mismatch");
    p.flat() = w;
    return p;
  }

 private:
  RowMatrix rows_;
  std::vector<Objective> objectives_;
  std::vector<std::optional<Vector>> weights_;
  std::size_t hidden_;
};

inline std::string metric_for(Objective o) {
  switch (o) {
    case Objective::Relevance: return "recall";
    case Objective::Revenue: return "revenue";
    case Objective::Content: return "doc_count";
  }
  return "?";
}

inline double metric_value(const MetricsReport& r, const std::string& name) {
  if (name == "recall") return r.recall_at_k;
  if (name == "revenue") return r.revenue_at_k;
  if (name == "doc_count") return r.doc_count_at_k;
  throw ValidationError("unknown metric '" + name + "' (expected recall, revenue or doc_count)");
}

struct ExperimentConfig {
  TrainConfig train;
  std::vector<Objective> objectives{Objective::Relevance, Objective::Revenue};
  std::size_t hidden_dim = 64;
  std::size_t k = 10;
  double init_scale = 0.05;
  std::vector<std::string> archive_metrics;  // empty: one metric per objective
  double inject_mass = 1.0;                  // warm start only
  double content_alpha_cap = 0.3;            // used when content is optimized and no bounds are set

  std::vector<std::string> resolved_metrics() const {
    if (!archive_metrics.empty()) return archive_metrics;
    std::vector<std::string> m;
    for (auto o : objectives) m.push_back(metric_for(o));
    return m;
  }

  /// Train config with the default content cap filled in.
  TrainConfig resolved_train() const {
    TrainConfig t = train;
    const auto it = std::find(objectives.begin(), objectives.end(), Objective::Content);
    if (t.alpha_bounds.empty() && it != objectives.end() && objectives.size() > 1 && t.mode == TrainMode::Smsgda) {
      t.alpha_bounds.assign(objectives.size(), AlphaBounds{});
      t.alpha_bounds[static_cast<std::size_t>(it - objectives.begin())].hi = content_alpha_cap;
    }
    return t;
  }
};

struct RecommenderRun {
  TrainState state;
  RunLog log;
};

inline RecommenderParams params_from_flat(const Vector& flat, std::size_t items, std::size_t hidden) {
  RecommenderParams p(items, hidden);
  require(flat.size() == p.size(), "params_from_flat: length mismatch");
  p.flat() = flat;
  return p;
}

inline TrainHooks recommender_hooks(const RecommenderProblem& problem, const Dataset& data, const ExperimentConfig& cfg) {
  const auto metrics = cfg.resolved_metrics();
  for (const auto& m : metrics) (void)metric_value(MetricsReport{}, m);
  auto val_rows = std::make_shared<RowMatrix>(dense_rows(data.validation, data.items()));
  TrainHooks hooks;
  hooks.metric_names = metrics;
  hooks.evaluate = [&problem, &data, cfg, metrics, val_rows](const Vector& w) {
    const auto params = problem.as_params(w);
    const auto report = evaluate(params, data.validation, data.meta, cfg.k);
    Evaluation ev;
    for (const auto& m : metrics) ev.metrics.push_back(metric_value(report, m));
    ev.validation_losses = problem.losses_on(w, *val_rows);
    return ev;
  };
  return hooks;
}

/// Trains from `init` over the given training rows.
inline RecommenderRun train_rows(const ExperimentConfig& cfg, const Dataset& data, RowMatrix rows, Vector init) {
  require(!data.validation.empty(), "train: dataset has no validation users");
  const RecommenderProblem problem(std::move(rows), data.meta, cfg.objectives, cfg.hidden_dim);
  const auto hooks = recommender_hooks(problem, data, cfg);
  RecommenderRun run;
  run.state = train(problem, cfg.resolved_train(), std::move(init), hooks, run.log);
  return run;
}

inline RecommenderRun train_from_scratch(const ExperimentConfig& cfg, const Dataset& data) {
  const auto init = RecommenderParams::random(data.items(), cfg.hidden_dim, cfg.train.seed, cfg.init_scale);
  return train_rows(cfg, data, dense_rows(data.train, data.items()), init.flat());
}

/// SMSGDA with (or without) gradient normalization per `cfg.train.normalize`.
inline RecommenderRun train_smsgda(ExperimentConfig cfg, const Dataset& data) {
  cfg.train.mode = TrainMode::Smsgda;
  return train_from_scratch(cfg, data);
}

/// Fixed-weight baseline; gradients are normalized iff `cfg.train.normalize`.
inline RecommenderRun train_weighted_sum(ExperimentConfig cfg, const Dataset& data) {
  cfg.train.mode = TrainMode::WeightedSum;
  return train_from_scratch(cfg, data);
}

/// Everything a content run needs before its first update.
struct WarmStart {
  RecommenderParams params;
  RowMatrix train_rows;
  std::vector<double> empirical_max_losses;
  ExperimentConfig config;
};

/// Starts from relevance-trained parameters, injects `inject_mass` spread
/// over the documentary items into every training row, and recomputes the
/// empirical max losses at the warm-started parameters.
inline WarmStart warm_start_content(const ExperimentConfig& cfg, const Dataset& data, const RecommenderParams& base) {
  require(data.meta.doc_count() > 0, "warm_start_content: catalog has no documentary items");
  require(base.items() == data.items() && base.hidden() == cfg.hidden_dim,
          "warm_start_content: base parameters do not match dataset/hidden size");
  WarmStart ws{base, dense_rows(data.train, data.items()), {}, cfg};
  ws.config.train.mode = TrainMode::Smsgda;
  ws.config.train.alpha_bounds = ws.config.resolved_train().alpha_bounds;
  for (Eigen::Index u = 0; u < ws.train_rows.rows(); ++u) {
    const Vector row = ws.train_rows.row(u).transpose();
    ws.train_rows.row(u) = inject_preferences(row, data.meta.is_doc, cfg.inject_mass).transpose();
  }
  const RecommenderProblem problem(ws.train_rows, data.meta, cfg.objectives, cfg.hidden_dim);
  ws.empirical_max_losses = compute_empirical_max_losses(problem, ws.params.flat());
  return ws;
}

inline RecommenderRun train_warm_started(const WarmStart& ws, const Dataset& data) {
  return train_rows(ws.config, data, ws.train_rows, ws.params.flat());
}

}  // namespace mgdrec
