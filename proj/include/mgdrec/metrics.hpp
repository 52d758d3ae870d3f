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

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mgdrec/data.hpp"
#include "mgdrec/errors.hpp"
#include "mgdrec/model.hpp"

namespace mgdrec {

/// Top-k items by descending score, visible history excluded. Ties go to the
/// smaller item index.
struct RankedList {
  std::vector<std::uint32_t> items;
  std::size_t k = 0;
};

template <class Scores>
RankedList rank_items(const Scores& scores, std::span<const std::uint32_t> visible_sorted, std::size_t k) {
  require(k >= 1, "rank_items: k must be positive");
  std::vector<std::uint32_t> candidates;
  candidates.reserve(static_cast<std::size_t>(scores.size()));
  for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(scores.size()); ++i) {
    if (!std::binary_search(visible_sorted.begin(), visible_sorted.end(), i)) candidates.push_back(i);
  }
  const auto take = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      return scores(a) > scores(b) || (scores(a) == scores(b) && a < b);
                    });
  candidates.resize(take);
  return {std::move(candidates), k};
}

namespace detail {

inline void check_holdout(std::span<const std::uint32_t> held_out, std::size_t k) {
  require(k >= 1, "k must be positive");
  require(!held_out.empty(), "held-out set is empty");
}

inline bool contains(std::span<const std::uint32_t> sorted, std::uint32_t item) {
  return std::binary_search(sorted.begin(), sorted.end(), item);
}

}  // namespace detail

/// Hits in the top k divided by min(k, |held_out|). `held_out` must be sorted.
inline double recall_at_k(const RankedList& ranked, std::span<const std::uint32_t> held_out, std::size_t k) {
  detail::check_holdout(held_out, k);
  double hits = 0.0;
  for (std::size_t r = 0; r < std::min(k, ranked.items.size()); ++r) {
    if (detail::contains(held_out, ranked.items[r])) hits += 1.0;
  }
  return hits / static_cast<double>(std::min(k, held_out.size()));
}

/// Price-weighted hits in the top k divided by min(k, |held_out|).
inline double revenue_at_k(const RankedList& ranked, std::span<const std::uint32_t> held_out,
                           std::span<const double> prices, std::size_t k) {
  detail::check_holdout(held_out, k);
  double value = 0.0;
  for (std::size_t r = 0; r < std::min(k, ranked.items.size()); ++r) {
    const auto item = ranked.items[r];
    require(item < prices.size(), "revenue_at_k: price vector does not cover item");
    if (detail::contains(held_out, item)) value += prices[item];
  }
  return value / static_cast<double>(std::min(k, held_out.size()));
}

inline double doc_count_at_k(const RankedList& ranked, const std::vector<bool>& is_doc, std::size_t k) {
  require(k >= 1, "doc_count_at_k: k must be positive");
  double count = 0.0;
  for (std::size_t r = 0; r < std::min(k, ranked.items.size()); ++r) {
    if (is_doc.at(ranked.items[r])) count += 1.0;
  }
  return count;
}

struct UserMetrics {
  std::string user_id;
  double recall = 0.0;
  double revenue = 0.0;
  double doc_count = 0.0;
};

struct MetricsReport {
  std::size_t k = 0;
  std::size_t n_users = 0;
  std::size_t skipped_users = 0;
  double recall_at_k = 0.0;
  double revenue_at_k = 0.0;
  double doc_count_at_k = 0.0;
  std::vector<UserMetrics> per_user;

  nlohmann::json to_json() const {
    return {{"k", k}, {"n_users", n_users}, {"recall_at_k", recall_at_k}, {"revenue_at_k", revenue_at_k},
            {"doc_count_at_k", doc_count_at_k}};
  }
};

/// Mean that does not depend on input order: values are summed in sorted order.
inline double order_free_mean(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

/// Scores every user from their visible history, ranks unseen items and
/// averages the metrics against the held-out items. Users without a
/// held-out set are skipped.
inline MetricsReport evaluate(const RecommenderParams& params, const std::vector<UserRecord>& users,
                              const ItemMeta& meta, std::size_t k = 10, bool keep_per_user = false) {
  require(!users.empty(), "evaluate: empty split");
  require(meta.size() == params.items(), "evaluate: metadata covers " + std::to_string(meta.size()) +
                                             " items, model has " + std::to_string(params.items()));
  MetricsReport report;
  report.k = k;
  std::vector<double> recalls, revenues, docs;
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < users.size(); start += kChunk) {
    const auto end = std::min(users.size(), start + kChunk);
    std::vector<std::size_t> which(end - start);
    std::iota(which.begin(), which.end(), start);
    const RowMatrix scores = predict_scores(params, dense_rows(users, which, params.items()));
    for (std::size_t r = 0; r < which.size(); ++r) {
      const auto& u = users[which[r]];
      if (u.holdout.empty()) {
        ++report.skipped_users;
        continue;
      }
      const auto ranked = rank_items(scores.row(static_cast<Eigen::Index>(r)), u.visible, k);
      UserMetrics m{u.id, recall_at_k(ranked, u.holdout, k), revenue_at_k(ranked, u.holdout, meta.price, k),
                    doc_count_at_k(ranked, meta.is_doc, k)};
      recalls.push_back(m.recall);
      revenues.push_back(m.revenue);
      docs.push_back(m.doc_count);
      if (keep_per_user) report.per_user.push_back(std::move(m));
    }
  }
  report.n_users = recalls.size();
  report.recall_at_k = order_free_mean(std::move(recalls));
  report.revenue_at_k = order_free_mean(std::move(revenues));
  report.doc_count_at_k = order_free_mean(std::move(docs));
  return report;
}

inline void write_per_user_csv(const MetricsReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "user_id,recall_at_k,revenue_at_k,doc_count_at_k\n";
  for (const auto& m : report.per_user) {
    out << m.user_id << ',' << format_double(m.recall) << ',' << format_double(m.revenue) << ','
        << format_double(m.doc_count) << '\n';
  }
}

}  // namespace mgdrec
