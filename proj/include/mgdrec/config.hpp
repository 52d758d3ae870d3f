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


// JSON experiment configs. Unknown keys and wrong types are reported by
// key name.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mgdrec/data.hpp"
#include "mgdrec/errors.hpp"
#include "mgdrec/recommender.hpp"

namespace mgdrec {

namespace detail {

/// Reads keys out of one JSON object and remembers which ones were used.
class ConfigReader {
 public:
  ConfigReader(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ValidationError(where_ + ": expected a JSON object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  template <class T>
  T get(const std::string& key) {
    if (!has(key)) throw ValidationError(where_ + ": missing required key '" + key + "'");
    return convert<T>(key);
  }

  template <class T>
  void maybe(const std::string& key, T& out) {
    if (has(key)) out = convert<T>(key);
  }

  const nlohmann::json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  /// Rejects keys that were never asked for.
  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ValidationError(where_ + ": unknown key '" + key + "'");
    }
  }

 private:
  template <class T>
  T convert(const std::string& key) {
    const auto& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_integer() || v.get<long long>() < 0) throw ValidationError("");
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ValidationError("");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ValidationError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ValidationError("");
      }
      return v.get<T>();
    } catch (const std::exception&) {
      throw ValidationError(where_ + ": key '" + key + "' has the wrong type");
    }
  }

  const nlohmann::json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

inline StopRule::Kind stop_kind_from_string(const std::string& s) {
  if (s == "epochs") return StopRule::Kind::EpochBudget;
  if (s == "plateau") return StopRule::Kind::Plateau;
  if (s == "grad_norm") return StopRule::Kind::GradNorm;
  throw ValidationError("config: stop.rule must be epochs, plateau or grad_norm (got '" + s + "')");
}

inline std::string to_string(StopRule::Kind k) {
  switch (k) {
    case StopRule::Kind::EpochBudget: return "epochs";
    case StopRule::Kind::Plateau: return "plateau";
    case StopRule::Kind::GradNorm: return "grad_norm";
  }
  return "?";
}

}  // namespace detail

/// Where a content run takes its starting parameters from.
struct WarmStartSource {
  std::optional<std::filesystem::path> checkpoint;  // a snapshot file
  std::optional<std::filesystem::path> run;         // a run directory; its LINMAP pick is used
};

struct RunConfig {
  ExperimentConfig experiment;
  std::optional<WarmStartSource> warm_start;
};

/// Parses a training config. Required keys: mode (unless overridden), objectives.
inline RunConfig run_config_from_json(const nlohmann::json& j, const std::optional<std::string>& mode_override = {}) {
  detail::ConfigReader r(j, "config");
  RunConfig rc;
  auto& e = rc.experiment;
  auto& t = e.train;
  const auto mode = mode_override && !r.has("mode") ? *mode_override : r.get<std::string>("mode");
  try {
    t.mode = train_mode_from_string(mode_override.value_or(mode));
  } catch (const std::exception&) {
    throw ValidationError("config: mode must be smsgda, ws or single (got '" + mode_override.value_or(mode) + "')");
  }
  e.objectives.clear();
  for (const auto& o : r.get<std::vector<std::string>>("objectives")) {
    try {
      e.objectives.push_back(objective_from_string(o));
    } catch (const std::exception&) {
      throw ValidationError("config: unknown objective '" + o + "' (expected relevance, revenue or content)");
    }
  }
  if (e.objectives.empty()) throw ValidationError("config: 'objectives' must not be empty");
  r.maybe("epochs", t.epochs);
  r.maybe("batch_size", t.batch_size);
  r.maybe("learning_rate", t.learning_rate);
  r.maybe("seed", t.seed);
  r.maybe("normalize", t.normalize);
  r.maybe("eval_interval", t.eval_interval);
  r.maybe("weights", t.weights);
  if (r.has("archive_capacity")) {
    t.archive_capacity = r.get<std::size_t>("archive_capacity");
  } else if (j.contains("archive_capacity")) {
    t.archive_capacity = std::nullopt;  // explicit null: unbounded
  }
  if (r.has("alpha_bounds")) {
    const auto& b = r.raw("alpha_bounds");
    if (!b.is_object()) throw ValidationError("config: 'alpha_bounds' must map objective names to [lo, hi]");
    t.alpha_bounds.assign(e.objectives.size(), AlphaBounds{});
    for (const auto& [name, pair] : b.items()) {
      Objective o;
      try {
        o = objective_from_string(name);
      } catch (const std::exception&) {
        throw ValidationError("config: alpha_bounds has unknown objective '" + name + "'");
      }
      const auto it = std::find(e.objectives.begin(), e.objectives.end(), o);
      if (it == e.objectives.end()) throw ValidationError("config: alpha_bounds names objective '" + name + "' which is not optimized");
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
        throw ValidationError("config: alpha_bounds." + name + " must be [lo, hi]");
      }
      t.alpha_bounds[static_cast<std::size_t>(it - e.objectives.begin())] = {pair[0].get<double>(), pair[1].get<double>()};
    }
  }
  if (r.has("stop")) {
    detail::ConfigReader s(r.raw("stop"), "config.stop");
    t.stop.kind = detail::stop_kind_from_string(s.get<std::string>("rule"));
    s.maybe("patience", t.stop.patience);
    s.maybe("delta", t.stop.delta);
    s.maybe("epsilon", t.stop.epsilon);
    s.finish();
  }
  r.maybe("hidden_dim", e.hidden_dim);
  r.maybe("k", e.k);
  r.maybe("init_scale", e.init_scale);
  r.maybe("archive_metrics", e.archive_metrics);
  r.maybe("content_alpha_cap", e.content_alpha_cap);
  if (r.has("warm_start")) {
    detail::ConfigReader w(r.raw("warm_start"), "config.warm_start");
    WarmStartSource src;
    if (w.has("checkpoint")) src.checkpoint = w.get<std::string>("checkpoint");
    if (w.has("run")) src.run = w.get<std::string>("run");
    w.maybe("inject_mass", e.inject_mass);
    w.finish();
    if (src.checkpoint.has_value() == src.run.has_value()) {
      throw ValidationError("config.warm_start: give exactly one of 'checkpoint' or 'run'");
    }
    rc.warm_start = src;
  }
  r.finish();

  if (e.hidden_dim < 1) throw ValidationError("config: hidden_dim must be >= 1");
  if (e.k < 1) throw ValidationError("config: k must be >= 1");
  if (!(e.content_alpha_cap >= 0.0 && e.content_alpha_cap <= 1.0)) throw ValidationError("config: content_alpha_cap must lie in [0,1]");
  if (!(e.inject_mass > 0.0)) throw ValidationError("config.warm_start: inject_mass must be > 0");
  for (const auto& m : e.archive_metrics) (void)metric_value(MetricsReport{}, m);
  e.resolved_train().validate(e.objectives.size());
  return rc;
}

inline nlohmann::json to_json(const RunConfig& rc) {
  const auto& e = rc.experiment;
  const auto t = e.resolved_train();
  nlohmann::json j;
  j["mode"] = to_string(t.mode);
  auto& obj = j["objectives"] = nlohmann::json::array();
  for (auto o : e.objectives) obj.push_back(to_string(o));
  j["epochs"] = t.epochs;
  j["batch_size"] = t.batch_size;
  j["learning_rate"] = t.learning_rate;
  j["seed"] = t.seed;
  j["normalize"] = t.normalize;
  j["eval_interval"] = t.eval_interval;
  if (!t.weights.empty()) j["weights"] = t.weights;
  j["archive_capacity"] = t.archive_capacity ? nlohmann::json(*t.archive_capacity) : nlohmann::json(nullptr);
  if (!t.alpha_bounds.empty()) {
    auto& b = j["alpha_bounds"] = nlohmann::json::object();
    for (std::size_t i = 0; i < e.objectives.size(); ++i) {
      b[to_string(e.objectives[i])] = {t.alpha_bounds[i].lo, t.alpha_bounds[i].hi};
    }
  }
  j["stop"] = {{"rule", detail::to_string(t.stop.kind)},
               {"patience", t.stop.patience},
               {"delta", t.stop.delta},
               {"epsilon", t.stop.epsilon}};
  j["hidden_dim"] = e.hidden_dim;
  j["k"] = e.k;
  j["init_scale"] = e.init_scale;
  j["archive_metrics"] = e.resolved_metrics();
  j["content_alpha_cap"] = e.content_alpha_cap;
  if (rc.warm_start) {
    auto& w = j["warm_start"];
    if (rc.warm_start->checkpoint) w["checkpoint"] = rc.warm_start->checkpoint->generic_string();
    if (rc.warm_start->run) w["run"] = rc.warm_start->run->generic_string();
    w["inject_mass"] = e.inject_mass;
  }
  return j;
}

/// Synthetic-generator settings; every key is optional.
inline SyntheticConfig synthetic_config_from_json(const nlohmann::json& j) {
  detail::ConfigReader r(j, "config");
  SyntheticConfig c;
  r.maybe("users", c.users);
  r.maybe("items", c.items);
  r.maybe("latent_dim", c.latent_dim);
  r.maybe("price_log_mean", c.price_log_mean);
  r.maybe("price_log_sigma", c.price_log_sigma);
  r.maybe("price_popularity_corr", c.price_popularity_corr);
  r.maybe("doc_fraction", c.doc_fraction);
  r.maybe("doc_popularity_shift", c.doc_popularity_shift);
  r.maybe("mean_extra_ratings", c.mean_extra_ratings);
  r.maybe("min_ratings", c.min_ratings);
  r.maybe("seed", c.seed);
  r.finish();
  if (c.users < 1 || c.items < 1 || c.latent_dim < 1) throw ValidationError("config: users, items and latent_dim must be >= 1");
  if (!(c.doc_fraction >= 0.0 && c.doc_fraction <= 1.0)) throw ValidationError("config: doc_fraction must lie in [0,1]");
  if (!(std::abs(c.price_popularity_corr) <= 1.0)) throw ValidationError("config: price_popularity_corr must lie in [-1,1]");
  if (!(c.price_log_sigma >= 0.0)) throw ValidationError("config: price_log_sigma must be >= 0");
  if (!(c.mean_extra_ratings >= 0.0)) throw ValidationError("config: mean_extra_ratings must be >= 0");
  return c;
}

inline nlohmann::json to_json(const SyntheticConfig& c) {
  return {{"users", c.users},
          {"items", c.items},
          {"latent_dim", c.latent_dim},
          {"price_log_mean", c.price_log_mean},
          {"price_log_sigma", c.price_log_sigma},
          {"price_popularity_corr", c.price_popularity_corr},
          {"doc_fraction", c.doc_fraction},
          {"doc_popularity_shift", c.doc_popularity_shift},
          {"mean_extra_ratings", c.mean_extra_ratings},
          {"min_ratings", c.min_ratings},
          {"seed", c.seed}};
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": invalid JSON: " + e.what());
  }
}

}  // namespace mgdrec
