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


// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "mgdrec/data.hpp"
#include "mgdrec/metrics.hpp"
#include "mgdrec/model.hpp"
#include "mgdrec/moo_core.hpp"
#include "mgdrec/qcop.hpp"
#include "mgdrec/random.hpp"
#include "mgdrec/recommender.hpp"
#include "mgdrec/selection.hpp"
#include "mgdrec/trainer.hpp"

namespace fs = std::filesystem;
using namespace mgdrec;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::vector<Vector> random_bundle(Rng& rng, std::size_t n, Eigen::Index d) {
  std::vector<Vector> g(n, Vector(d));
  for (auto& v : g) {
    for (Eigen::Index j = 0; j < d; ++j) v(j) = rng.uniform(-1, 1);
  }
  return g;
}

double norm_sq(const std::vector<Vector>& g, const AlphaVector& a) { return combine_gradients(g, a).squaredNorm(); }

// 1. Frank-Wolfe never loses to the grid oracle.
Outcome qcop_optimality() {
  Rng rng(1);
  int bundles = 0, bad = 0;
  double worst = -1e300;
  for (Eigen::Index d : {5, 50}) {
    for (std::size_t n : {2u, 3u, 5u}) {
      for (int t = 0; t < 40; ++t) {
        const auto g = random_bundle(rng, n, d);
        const double excess = norm_sq(g, solve_qcop(g).alphas) - norm_sq(g, min_norm_oracle(g, 0.02));
        worst = std::max(worst, excess);
        bad += excess > 1e-6;
        ++bundles;
      }
    }
  }
  return {bad == 0 && bundles >= 200,
          std::to_string(bundles) + " bundles, max(solver - oracle) = " + fmt("%.3g", worst)};
}

// 2. Closed form and Frank-Wolfe agree for two objectives.
Outcome two_objective_agreement() {
  Rng rng(2);
  int pairs = 0, clipped = 0;
  double worst = 0.0;
  auto check = [&](const std::vector<Vector>& g) {
    const auto closed = alpha_two(g[0], g[1]);
    const auto fw = solve_qcop(g).alphas;
    worst = std::max({worst, std::abs(closed[0] - fw[0]), std::abs(closed[1] - fw[1])});
    clipped += closed[0] == 0.0 || closed[0] == 1.0;
    ++pairs;
  };
  for (int t = 0; t < 100; ++t) check(random_bundle(rng, 2, 1 + static_cast<Eigen::Index>(rng.below(20))));
  for (int t = 0; t < 40; ++t) {
    // Same direction, different lengths: the optimum sits on a vertex.
    const auto g = random_bundle(rng, 1, 8)[0];
    const double c = rng.uniform(1.1, 5.0);
    if (t % 2) check({g, Vector(c * g)});
    else check({Vector(c * g), g});
  }
  return {worst < 1e-4 && pairs >= 100 && clipped > 0,
          std::to_string(pairs) + " pairs (" + std::to_string(clipped) + " clipped), max |diff| = " + fmt("%.3g", worst)};
}

// 3. Analytic gradients of all three losses match central differences.
double fd_relative_error(const std::function<LossGrad(const RecommenderParams&)>& f, RecommenderParams p) {
  const Vector g = f(p).grad;
  Vector fd(g.size());
  const double h = 1e-5;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const double keep = p.flat()(k);
    p.flat()(k) = keep + h;
    const double up = f(p).loss;
    p.flat()(k) = keep - h;
    const double down = f(p).loss;
    p.flat()(k) = keep;
    fd(k) = (up - down) / (2 * h);
  }
  return (fd - g).norm() / std::max(g.norm(), 1e-300);
}

Outcome gradient_check() {
  Rng rng(3);
  double worst = 0.0;
  int instances = 0;
  for (int t = 0; t < 24; ++t) {
    const auto items = static_cast<Eigen::Index>(3 + rng.below(8));
    const auto hidden = 1 + rng.below(4);
    const auto p = RecommenderParams::random(static_cast<std::size_t>(items), hidden, 500 + t, 1.0);
    UserBatch b;
    b.rows = RowMatrix::Zero(1 + static_cast<Eigen::Index>(rng.below(5)), items);
    for (Eigen::Index u = 0; u < b.rows.rows(); ++u) {
      for (Eigen::Index i = 0; i < items; ++i) b.rows(u, i) = rng.uniform() < 0.4 ? 1.0 : 0.0;
      b.user_ids.push_back("u" + std::to_string(u));
    }
    ItemMeta meta;
    for (Eigen::Index i = 0; i < items; ++i) {
      meta.price.push_back(rng.uniform(0.5, 30.0));
      meta.is_doc.push_back(i % 3 == 0);
      meta.popularity.push_back(rng.uniform(0.1, 1.0));
    }
    meta.price_imputed.assign(static_cast<std::size_t>(items), false);
    worst = std::max({worst, fd_relative_error([&](const auto& q) { return loss_relevance(q, b); }, p),
                      fd_relative_error([&](const auto& q) { return loss_revenue(q, b, meta); }, p),
                      fd_relative_error([&](const auto& q) { return loss_content(q, b, meta); }, p)});
    ++instances;
  }
  return {worst < 1e-4, std::to_string(instances) + " instances x 3 losses, max rel err = " + fmt("%.3g", worst)};
}

// Two quadratics with minima a=(0,0), b=(1,0); the second scaled by `s`.
struct TwoQuadratics {
  double s = 1.0;
  std::size_t num_objectives() const { return 2; }
  std::size_t num_samples() const { return 1; }
  std::vector<LossGrad> losses_and_gradients(const Vector& w, std::span<const std::size_t>) const {
    Vector b(2);
    b << 1.0, 0.0;
    return {{w.squaredNorm(), 2.0 * w}, {s * (w - b).squaredNorm(), 2.0 * s * (w - b)}};
  }
  std::vector<double> full_losses(const Vector& w) const {
    const auto lg = losses_and_gradients(w, {});
    return {lg[0].loss, lg[1].loss};
  }
};

TrainConfig toy_config(std::size_t steps) {
  TrainConfig c;
  c.epochs = steps;
  c.batch_size = 1;
  c.learning_rate = 0.1;
  return c;
}

std::vector<Vector> trajectory(const TwoQuadratics& p, const TrainConfig& c, const Vector& init) {
  std::vector<Vector> out;
  TrainHooks h;
  h.on_step = [&](const StepInfo&, const Vector& w) { out.push_back(w); };
  RunLog log;
  train(p, c, init, h, log);
  return out;
}

// 4. Iterates reach the Pareto segment between the two minima.
Outcome pareto_convergence() {
  Rng rng(4);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    Vector init(2);
    init << rng.uniform(-2, 2), rng.uniform(-2, 2);
    RunLog log;
    const auto state = train(TwoQuadratics{}, toy_config(2000), init, TrainHooks{}, log);
    const double x = std::clamp(state.params(0), 0.0, 1.0);
    worst = std::max(worst, std::hypot(state.params(0) - x, state.params(1)));
  }
  return {worst < 1e-3, "20 starts, 2000 steps, max distance to segment = " + fmt("%.3g", worst)};
}

// 5. Scaling one objective by 1000 does not move the normalized trajectory.
Outcome normalization_invariance() {
  Vector init(2);
  init << 0.5, 1.0;
  const auto a = trajectory(TwoQuadratics{1.0}, toy_config(200), init);
  const auto b = trajectory(TwoQuadratics{1000.0}, toy_config(200), init);
  double worst = a.size() == b.size() ? 0.0 : 1e300;
  for (std::size_t s = 0; s < std::min(a.size(), b.size()); ++s) {
    worst = std::max(worst, (a[s] - b[s]).cwiseAbs().maxCoeff());
  }
  auto raw = toy_config(1);
  raw.normalize = false;
  const auto ra = trajectory(TwoQuadratics{1.0}, raw, init);
  const auto rb = trajectory(TwoQuadratics{1000.0}, raw, init);
  const double step1 = (ra[0] - rb[0]).cwiseAbs().maxCoeff();
  return {worst <= 1e-9 && step1 > 1e-6,
          "with normalization max dev = " + fmt("%.3g", worst) + "; without, step-1 dev = " + fmt("%.3g", step1)};
}

// 6. The archive is exactly the non-dominated subset of what was offered.
Outcome archive_soundness() {
  Rng rng(6);
  const std::vector<Orientation> orient{Orientation::Maximize, Orientation::Minimize, Orientation::Maximize};
  ParetoArchive archive(orient);
  for (int t = 0; t < 500; ++t) {
    archive.insert(ObjectivePoint({rng.uniform(), rng.uniform(), rng.uniform()}, orient), "p" + std::to_string(t));
  }
  std::size_t violations = 0;
  for (const auto& x : archive.entries()) {
    for (const auto& y : archive.entries()) violations += dominates(x.point, y.point);
  }
  const auto& first = archive.entries().front().point;
  const auto dominated = archive.insert(ObjectivePoint({first[0] - 0.5, first[1] + 0.5, first[2] - 0.5}, orient), "dominated");
  const auto size_before = archive.size();
  const auto dominating = archive.insert(ObjectivePoint({2.0, -1.0, 2.0}, orient), "dominating");
  const bool ok = violations == 0 && dominated.status == InsertStatus::Rejected &&
                  dominating.status == InsertStatus::AcceptedEvicting && dominating.evicted.size() == size_before &&
                  archive.size() == 1;
  return {ok, "500 inserts, front size " + std::to_string(size_before) + ", " + std::to_string(violations) +
                  " violations; dominated insert " + (dominated.status == InsertStatus::Rejected ? "rejected" : "ACCEPTED") +
                  ", dominating insert evicted " + std::to_string(dominating.evicted.size())};
}

// 7. Metric bounds, the uniform-price identity and a brute-force oracle.
Outcome metric_identities() {
  Rng rng(7);
  bool ok = true;
  double worst_identity = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t items = 30;
    const auto p = RecommenderParams::random(items, 4, 900 + t, 1.0);
    std::vector<UserRecord> users;
    for (int u = 0; u < 25; ++u) {
      UserRecord r{"u" + std::to_string(u), {}, {}};
      for (std::uint32_t i = 0; i < items; ++i) {
        const double x = rng.uniform();
        if (x < 0.2) r.visible.push_back(i);
        else if (x < 0.35) r.holdout.push_back(i);
      }
      users.push_back(std::move(r));
    }
    ItemMeta meta;
    const double price = rng.uniform(0.5, 50.0);
    meta.price.assign(items, price);
    meta.is_doc.assign(items, false);
    meta.popularity.assign(items, 1.0);
    meta.price_imputed.assign(items, false);
    for (std::size_t k : {1u, 5u, 10u}) {
      const auto rep = evaluate(p, users, meta, k, true);
      for (const auto& m : rep.per_user) {
        ok = ok && m.recall >= 0.0 && m.recall <= 1.0;
        worst_identity = std::max(worst_identity, std::abs(m.revenue - price * m.recall));
      }
    }
  }
  ok = ok && worst_identity <= 1e-12;

  // Five users, eight items, scores set through the decoder bias.
  RecommenderParams toy(8, 2);
  toy.dec_bias() << 0.3, -1.0, 2.0, 0.3, 1.5, -0.2, 0.9, 0.0;
  const std::vector<UserRecord> users{{"u0", {2}, {0, 4}},
                                      {"u1", {0, 1}, {3}},
                                      {"u2", {4, 6}, {2, 5, 7}},
                                      {"u3", {}, {6}},
                                      {"u4", {2, 4, 6}, {1}}};
  ItemMeta meta;
  meta.price = {1.0, 4.0, 2.5, 9.0, 3.0, 0.5, 6.0, 2.0};
  meta.is_doc = {true, false, false, true, false, true, false, false};
  meta.popularity.assign(8, 1.0);
  meta.price_imputed.assign(8, false);
  std::size_t mismatches = 0;
  for (std::size_t k : {1u, 2u, 3u, 5u}) {
    const auto rep = evaluate(toy, users, meta, k, true);
    for (std::size_t u = 0; u < users.size(); ++u) {
      std::vector<std::pair<double, std::uint32_t>> cand;
      for (std::uint32_t i = 0; i < 8; ++i) {
        if (std::find(users[u].visible.begin(), users[u].visible.end(), i) == users[u].visible.end()) {
          cand.emplace_back(toy.dec_bias()(i), i);
        }
      }
      std::sort(cand.begin(), cand.end(), [](auto a, auto b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
      double hits = 0, rev = 0, docs = 0;
      for (std::size_t r = 0; r < std::min(k, cand.size()); ++r) {
        const auto i = cand[r].second;
        const bool hit = std::find(users[u].holdout.begin(), users[u].holdout.end(), i) != users[u].holdout.end();
        hits += hit;
        rev += hit ? meta.price[i] : 0.0;
        docs += meta.is_doc[i];
      }
      const double denom = static_cast<double>(std::min(k, users[u].holdout.size()));
      const auto& m = rep.per_user[u];
      mismatches += m.recall != hits / denom || m.revenue != rev / denom || m.doc_count != docs;
    }
  }
  ok = ok && mismatches == 0;
  return {ok, "uniform-price max |rev - p*rec| = " + fmt("%.3g", worst_identity) + ", oracle mismatches " +
                  std::to_string(mismatches)};
}

// ---------------------------------------------------------------------------
// Desk-scale recommender experiments (synthetic catalog, seed 0).

Dataset synthetic_dataset() {
  SyntheticConfig sc;  // 1000 users, 200 items, log-normal prices, 10% documentaries
  sc.seed = 0;
  const auto syn = generate_synthetic(sc);
  SplitOptions so;
  so.seed = 0;
  return split(filter_min_interactions(binarize(syn.table)), syn.items, so);
}

RecommenderParams selected(const RecommenderRun& run, const Dataset& d, const ExperimentConfig& c) {
  const auto id = linmap_select(FrontView::from_archive(run.state.archive));
  return params_from_flat(run.state.snapshots.at(id), d.items(), c.hidden_dim);
}

ExperimentConfig single(Objective o) {
  ExperimentConfig c;
  c.objectives = {o};
  c.train.mode = TrainMode::Single;
  return c;
}

// 8. The selected multi-objective model is not dominated by either
//    single-objective model and keeps 80% of each one's specialty.
Outcome revenue_tradeoff(const Dataset& d) {
  const auto sro_cfg = single(Objective::Relevance);
  const auto ro_cfg = single(Objective::Revenue);
  const ExperimentConfig mgd_cfg;  // smsgda, normalized, {relevance, revenue}
  const auto S = evaluate(selected(train_from_scratch(sro_cfg, d), d, sro_cfg), d.test, d.meta, 10);
  const auto R = evaluate(selected(train_from_scratch(ro_cfg, d), d, ro_cfg), d.test, d.meta, 10);
  const auto M = evaluate(selected(train_smsgda(mgd_cfg, d), d, mgd_cfg), d.test, d.meta, 10);
  auto dom = [](const MetricsReport& a, const MetricsReport& b) {
    return a.recall_at_k >= b.recall_at_k && a.revenue_at_k >= b.revenue_at_k &&
           (a.recall_at_k > b.recall_at_k || a.revenue_at_k > b.revenue_at_k);
  };
  const bool ok = !dom(S, M) && !dom(R, M) && M.recall_at_k >= 0.8 * S.recall_at_k &&
                  M.revenue_at_k >= 0.8 * R.revenue_at_k;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "test Recall@10/Revenue@10: relevance-only %.4f/%.3f, revenue-only %.4f/%.3f, SMSGDA+GN %.4f/%.3f",
                S.recall_at_k, S.revenue_at_k, R.recall_at_k, R.revenue_at_k, M.recall_at_k, M.revenue_at_k);
  return {ok, buf};
}

// 9. Warm-started content run: doc_count doubles at most a 30% recall cost.
Outcome content_tradeoff(const Dataset& d) {
  const auto sro_cfg = single(Objective::Relevance);
  const auto base = selected(train_from_scratch(sro_cfg, d), d, sro_cfg);
  ExperimentConfig c = sro_cfg;
  c.objectives = {Objective::Relevance, Objective::Content};
  c.train.mode = TrainMode::Smsgda;
  c.train.epochs = 20;
  c.inject_mass = 1.0;
  const auto run = train_warm_started(warm_start_content(c, d, base), d);
  const auto S = evaluate(base, d.test, d.meta, 10);
  const auto C = evaluate(selected(run, d, c), d.test, d.meta, 10);
  const bool ok = C.doc_count_at_k >= 2.0 * S.doc_count_at_k && C.recall_at_k >= 0.7 * S.recall_at_k;
  char buf[256];
  std::snprintf(buf, sizeof buf, "test Recall@10/doc_count@10: relevance-only %.4f/%.3f, content run %.4f/%.3f",
                S.recall_at_k, S.doc_count_at_k, C.recall_at_k, C.doc_count_at_k);
  return {ok, buf};
}

// ---------------------------------------------------------------------------
// 10. End-to-end CLI reruns produce identical bytes.

int sh(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool pipeline(const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "train.json");
    cfg << R"({"mode": "smsgda", "objectives": ["relevance", "revenue"], "epochs": 3, "hidden_dim": 16})";
  }
  const std::string cli = std::string("\"") + MGDREC_CLI_PATH + "\"";
  const std::string q = " >/dev/null 2>&1";
  const auto p = [&](const char* s) { return "\"" + (dir / s).string() + "\""; };
  return sh(cli + " synth --seed 5 --users 400 --items 80 --out " + p("raw") + q) == 0 &&
         sh(cli + " ingest --seed 5 --interactions " + p("raw/interactions.csv") + " --items " + p("raw/items.csv") +
            " --out " + p("data") + q) == 0 &&
         sh(cli + " train --seed 5 --data " + p("data") + " --config " + p("train.json") + " --out " + p("run") + q) == 0 &&
         sh(cli + " evaluate --data " + p("data") + " --checkpoint " + p("run/final.bin") + " --out " +
            p("report.json") + " --per-user" + q) == 0 &&
         sh(cli + " select --run " + p("run") + " > " + p("selected.txt") + " 2>/dev/null") == 0 &&
         sh(cli + " front --run " + p("run") + " --out " + p("front_all.csv") + q) == 0;
}

Outcome cli_determinism() {
  const auto root = fs::temp_directory_path() / "mgdrec_acceptance";
  if (!pipeline(root / "a") || !pipeline(root / "b")) return {false, "a CLI command failed"};
  std::size_t files = 0, differing = 0, manifests = 0;
  std::string first_diff;
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root / "a");
    if (rel.filename() == "manifest.json") {
      ++manifests;
      continue;
    }
    ++files;
    const auto other = root / "b" / rel;
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) {
      ++differing;
      if (first_diff.empty()) first_diff = rel.string();
    }
  }
  return {files > 10 && differing == 0 && manifests == 3,
          std::to_string(files) + " data files compared, " + std::to_string(differing) + " differ" +
              (first_diff.empty() ? "" : " (first: " + first_diff + ")") + "; " + std::to_string(manifests) +
              " manifests excluded"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  Dataset data;
  bool data_ready = false;
  const auto with_data = [&](Outcome (*f)(const Dataset&)) {
    return [&, f] {
      if (!data_ready) {
        data = synthetic_dataset();
        data_ready = true;
      }
      return f(data);
    };
  };
  const std::vector<Criterion> criteria{
      {1, "QCOP optimality vs grid oracle", 30, qcop_optimality},
      {2, "closed form / Frank-Wolfe agreement", 5, two_objective_agreement},
      {3, "loss gradients vs finite differences", 30, gradient_check},
      {4, "Pareto convergence on two quadratics", 10, pareto_convergence},
      {5, "normalization invariance to objective scale", 5, normalization_invariance},
      {6, "archive soundness", 5, archive_soundness},
      {7, "metric identities and oracle", 5, metric_identities},
      {8, "relevance/revenue trade-off", 600, with_data(revenue_tradeoff)},
      {9, "relevance/content trade-off", 600, with_data(content_tradeoff)},
      {10, "byte-identical CLI reruns", 600, cli_determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s criterion %d: %s | %s | %.2fs (budget %.0fs)%s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs, c.budget_s, in_time ? "" : " OVER BUDGET");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
