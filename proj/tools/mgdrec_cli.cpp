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


// mgdrec command-line tool: synth, ingest, train, evaluate, select, front.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mgdrec/config.hpp"
#include "mgdrec/data.hpp"
#include "mgdrec/errors.hpp"
#include "mgdrec/manifest.hpp"
#include "mgdrec/metrics.hpp"
#include "mgdrec/model.hpp"
#include "mgdrec/recommender.hpp"
#include "mgdrec/selection.hpp"

namespace fs = std::filesystem;
using namespace mgdrec;

namespace {

enum ExitCode : int { kOk = 0, kOther = 1, kValidation = 2, kData = 3, kNumerical = 4 };

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> config;
  std::optional<fs::path> out;
};

fs::path require_out(const Globals& g, const std::string& cmd) {
  if (!g.out) throw ValidationError(cmd + ": --out is required");
  return *g.out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string stats_line(const DatasetStats& s) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "users=%zu items=%zu interactions=%zu sparsity=%.2f", s.users, s.items,
                s.interactions, s.sparsity);
  return buf;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::optional<std::size_t> users, items;
  std::optional<double> doc_fraction;
};

int cmd_synth(const Globals& g, const SynthArgs& a) {
  SyntheticConfig cfg = g.config ? synthetic_config_from_json(read_json_file(*g.config)) : SyntheticConfig{};
  if (g.seed) cfg.seed = *g.seed;
  if (a.users) cfg.users = *a.users;
  if (a.items) cfg.items = *a.items;
  if (a.doc_fraction) cfg.doc_fraction = *a.doc_fraction;
  cfg = synthetic_config_from_json(to_json(cfg));  // same checks as the file path
  const auto dir = require_out(g, "synth");

  RunManifest manifest{"synth", cfg.seed, to_json(cfg)};
  const auto data = generate_synthetic(cfg);
  fs::create_directories(dir);
  write_interactions_csv(dir / "interactions.csv", data.table);
  write_item_meta_csv(dir / "items.csv", data.items);
  manifest.outputs = {"interactions.csv", "items.csv"};
  manifest.write(dir);
  std::cout << "ratings=" << data.table.records.size() << " users=" << cfg.users << " items=" << cfg.items << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

struct IngestArgs {
  fs::path interactions, items;
  int threshold = 3;
  std::size_t min_count = 5;
};

int cmd_ingest(const Globals& g, const IngestArgs& a) {
  const auto dir = require_out(g, "ingest");
  if (a.min_count < 1) throw ValidationError("ingest: --min-count must be >= 1");
  SplitOptions opt;
  opt.seed = g.seed.value_or(0);

  RunManifest manifest{"ingest", opt.seed,
                       {{"threshold", a.threshold}, {"min_count", a.min_count}, {"train_ratio", opt.train_ratio},
                        {"validation_ratio", opt.validation_ratio}, {"test_ratio", opt.test_ratio},
                        {"mask_frac", opt.mask_frac}}};
  manifest.add_input_file("interactions", a.interactions);
  manifest.add_input_file("items", a.items);

  const auto table = read_interactions_csv(a.interactions);
  const auto items = read_item_meta_csv(a.items);
  const auto data = split(filter_min_interactions(binarize(table, a.threshold), a.min_count), items, opt);
  save_dataset(data, dir);
  for (const auto& w : data.warnings) std::cerr << "warning: " << w << '\n';
  manifest.outputs = {"meta.json", "train.bin", "val.bin", "test.bin"};
  manifest.config["dataset_sha256"] = dataset_fingerprint(dir);
  manifest.write(dir);
  std::cout << stats_line(data.stats()) << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  fs::path data;
  std::optional<std::string> mode;
  std::optional<std::size_t> epochs;
};

/// Parameters chosen by LINMAP from a finished run directory.
RecommenderParams selected_params(const fs::path& run_dir, std::string* payload_out = nullptr) {
  const auto archive = read_archive_csv(run_dir / "archive.csv");
  if (archive.empty()) throw DataError(run_dir.string() + ": archive is empty");
  const auto payload = linmap_select(FrontView::from_archive(archive));
  if (payload_out) *payload_out = payload;
  return read_params(run_dir / "checkpoints" / (payload + ".bin"));
}

int cmd_train(const Globals& g, const TrainArgs& a) {
  if (!g.config) throw ValidationError("train: --config is required");
  auto rc = run_config_from_json(read_json_file(*g.config), a.mode);
  if (g.seed) rc.experiment.train.seed = *g.seed;
  if (a.epochs) rc.experiment.train.epochs = *a.epochs;
  rc.experiment.resolved_train().validate(rc.experiment.objectives.size());
  if (rc.warm_start && rc.experiment.train.mode != TrainMode::Smsgda) {
    throw ValidationError("config: warm_start requires mode smsgda");
  }
  const auto dir = require_out(g, "train");

  RunManifest manifest{"train", rc.experiment.train.seed, to_json(rc)};
  manifest.add_input_dataset("dataset", a.data);
  const auto data = load_dataset(a.data);
  const auto& cfg = rc.experiment;

  RecommenderRun run;
  if (rc.warm_start) {
    std::string base_id;
    const auto base = rc.warm_start->checkpoint ? read_params(*rc.warm_start->checkpoint)
                                                : selected_params(*rc.warm_start->run, &base_id);
    if (rc.warm_start->checkpoint) {
      manifest.add_input_file("warm_start", *rc.warm_start->checkpoint);
    } else {
      manifest.add_input_file("warm_start", *rc.warm_start->run / "checkpoints" / (base_id + ".bin"));
    }
    if (base.items() != data.items()) {
      throw DataError("warm start checkpoint has " + std::to_string(base.items()) + " items, dataset has " +
                      std::to_string(data.items()));
    }
    if (base.hidden() != cfg.hidden_dim) {
      throw ValidationError("warm start checkpoint has hidden_dim " + std::to_string(base.hidden()) +
                            ", config has " + std::to_string(cfg.hidden_dim));
    }
    run = train_warm_started(warm_start_content(cfg, data, base), data);
  } else {
    run = train_from_scratch(cfg, data);
  }

  fs::create_directories(dir / "checkpoints");
  write_text(dir / "run_log.jsonl", run.log.to_jsonl());
  write_archive_csv(run.state.archive, dir / "archive.csv");
  manifest.outputs = {"run_log.jsonl", "archive.csv", "archive.json", "final.bin"};
  for (const auto& [payload, flat] : run.state.snapshots) {
    write_params(dir / "checkpoints" / (payload + ".bin"), params_from_flat(flat, data.items(), cfg.hidden_dim),
                 cfg.train.seed);
    manifest.outputs.push_back("checkpoints/" + payload + ".bin");
  }
  write_params(dir / "final.bin", params_from_flat(run.state.params, data.items(), cfg.hidden_dim), cfg.train.seed);
  manifest.write(dir);
  for (const auto& w : run.log.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "steps=" << run.state.step << " epochs=" << run.state.epoch << " stop=" << run.state.stop_reason
            << " archive=" << run.state.archive.size() << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  fs::path checkpoint, data;
  std::string split = "test";
  std::size_t k = 10;
  bool per_user = false;
};

int cmd_evaluate(const Globals& g, const EvaluateArgs& a) {
  if (a.k < 1) throw ValidationError("evaluate: --k must be >= 1");
  if (a.split != "test" && a.split != "validation") throw ValidationError("evaluate: --split must be test or validation");
  const auto params = read_params(a.checkpoint);
  const auto data = load_dataset(a.data);
  if (params.items() != data.items()) {
    throw DataError("checkpoint has " + std::to_string(params.items()) + " items, dataset has " +
                    std::to_string(data.items()));
  }
  const auto& users = a.split == "test" ? data.test : data.validation;
  if (users.empty()) throw EmptyDataset("evaluate: " + a.split + " split is empty");
  const auto report = evaluate(params, users, data.meta, a.k, a.per_user);
  auto j = report.to_json();
  j["split"] = a.split;
  j["skipped_users"] = report.skipped_users;
  const auto text = j.dump(2) + '\n';
  std::cout << text;
  if (g.out) {
    if (g.out->has_parent_path()) fs::create_directories(g.out->parent_path());
    write_text(*g.out, text);
    if (a.per_user) {
      auto csv = *g.out;
      csv.replace_extension(".per_user.csv");
      write_per_user_csv(report, csv);
    }
  } else if (a.per_user) {
    throw ValidationError("evaluate: --per-user needs --out");
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct RunArgs {
  fs::path run;
};

int cmd_select(const Globals& g, const RunArgs& a) {
  const auto archive = read_archive_csv(a.run / "archive.csv");
  if (archive.empty()) throw DataError(a.run.string() + ": archive is empty");
  const auto front = FrontView::from_archive(archive);
  const auto payload = linmap_select(front);
  export_front(front, g.out.value_or(a.run / "front.csv"), payload);
  std::cout << payload << '\n';
  return kOk;
}

int cmd_front(const Globals& g, const RunArgs& a) {
  const auto archive = read_archive_csv(a.run / "archive.csv");
  if (archive.empty()) throw DataError(a.run.string() + ": archive is empty");
  const auto path = g.out.value_or(a.run / "front.csv");
  export_front(FrontView::from_archive(archive), path, std::nullopt);
  std::cout << path.string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-objective recommender training and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(MGDREC_VERSION));

  Globals g;
  std::uint64_t seed = 0;
  std::string config, out;
  auto* seed_opt = app.add_option("--seed", seed, "Random seed (overrides the config file)");
  auto* config_opt = app.add_option("--config", config, "JSON config file");
  auto* out_opt = app.add_option("--out", out, "Output directory or file");
  for (auto* o : {seed_opt, config_opt, out_opt}) o->configurable(false);
  app.fallthrough();

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic ratings/catalog CSV pair");
  synth_cmd->add_option("--users", synth.users, "Number of users");
  synth_cmd->add_option("--items", synth.items, "Number of items");
  synth_cmd->add_option("--doc-fraction", synth.doc_fraction, "Share of documentary items");

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Binarize, filter and split CSV data into a dataset bundle");
  ingest_cmd->add_option("--interactions", ingest.interactions, "user_id,item_id,rating[,timestamp] CSV")->required();
  ingest_cmd->add_option("--items", ingest.items, "item_id,price,genres CSV")->required();
  ingest_cmd->add_option("--threshold", ingest.threshold, "Ratings >= threshold are positive")->capture_default_str();
  ingest_cmd->add_option("--min-count", ingest.min_count, "Minimum positives per user and item")->capture_default_str();

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a model and track its Pareto archive");
  train_cmd->add_option("--data", train_args.data, "Dataset bundle directory")->required();
  train_cmd->add_option("--mode", train_args.mode, "smsgda, ws or single (overrides the config)");
  train_cmd->add_option("--epochs", train_args.epochs, "Epoch budget (overrides the config)");

  EvaluateArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a checkpoint on a held-out split");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Parameter snapshot")->required();
  eval_cmd->add_option("--data", eval.data, "Dataset bundle directory")->required();
  eval_cmd->add_option("--split", eval.split, "test or validation")->capture_default_str();
  eval_cmd->add_option("--k", eval.k, "Cutoff")->capture_default_str();
  eval_cmd->add_flag("--per-user", eval.per_user, "Also write per-user metrics next to --out");

  RunArgs select_args, front_args;
  auto* select_cmd = app.add_subcommand("select", "Pick the LINMAP operating point of a run");
  select_cmd->add_option("--run", select_args.run, "Run directory")->required();
  auto* front_cmd = app.add_subcommand("front", "Export the Pareto front of a run");
  front_cmd->add_option("--run", front_args.run, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidation;
  }
  if (*seed_opt) g.seed = seed;
  if (*config_opt) g.config = config;
  if (*out_opt) g.out = out;

  try {
    if (*synth_cmd) return cmd_synth(g, synth);
    if (*ingest_cmd) return cmd_ingest(g, ingest);
    if (*train_cmd) return cmd_train(g, train_args);
    if (*eval_cmd) return cmd_evaluate(g, eval);
    if (*select_cmd) return cmd_select(g, select_args);
    if (*front_cmd) return cmd_front(g, front_args);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kValidation;
  } catch (const ContractViolation& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kValidation;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    return kNumerical;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOther;
}
