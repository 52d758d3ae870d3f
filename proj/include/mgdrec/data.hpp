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

// Rating ingestion and preprocessing: binarize, iterative min-count
// filtering, user-level split with per-user holdout masks, popularity, and a
// seeded synthetic generator.

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mgdrec/errors.hpp"
#include "mgdrec/model.hpp"
#include "mgdrec/random.hpp"
#include "mgdrec/text.hpp"

namespace mgdrec {

struct Interaction {
  std::string user;
  std::string item;
  int rating = 0;
  std::optional<std::int64_t> timestamp;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

/// Raw ratings. After deduplicate() each (user, item) pair appears once.
struct InteractionsTable {
  std::vector<Interaction> records;

  /// Keeps the latest record per (user, item): largest timestamp, else the last occurrence.
  InteractionsTable deduplicated() const {
    std::map<std::pair<std::string, std::string>, std::size_t> latest;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto key = std::make_pair(records[i].user, records[i].item);
      auto it = latest.find(key);
      if (it == latest.end()) {
        latest.emplace(key, i);
        continue;
      }
      const auto& prev = records[it->second];
      const auto& cur = records[i];
      if (prev.timestamp && cur.timestamp && *cur.timestamp < *prev.timestamp) continue;
      it->second = i;
    }
    InteractionsTable out;
    out.records.reserve(latest.size());
    for (const auto& [key, idx] : latest) out.records.push_back(records[idx]);
    return out;
  }
};

/// Item metadata as read from CSV; price may be missing.
struct ItemInfo {
  std::string item;
  std::optional<double> price;
  std::string genres;
};

/// Set of positive (user, item) pairs.
using BinaryInteractions = std::set<std::pair<std::string, std::string>>;

inline BinaryInteractions binarize(const InteractionsTable& table, int threshold = 3) {
  BinaryInteractions out;
  for (const auto& r : table.deduplicated().records) {
    if (r.rating >= threshold) out.emplace(r.user, r.item);
  }
  return out;
}

/// Removes users and items with fewer than `min_count` positives until nothing changes.
inline BinaryInteractions filter_min_interactions(BinaryInteractions data, std::size_t min_count = 5) {
  for (;;) {
    std::map<std::string, std::size_t> per_user;
    std::map<std::string, std::size_t> per_item;
    for (const auto& [u, i] : data) {
      ++per_user[u];
      ++per_item[i];
    }
    const auto before = data.size();
    std::erase_if(data, [&](const auto& p) {
      return per_user[p.first] < min_count || per_item[p.second] < min_count;
    });
    if (data.size() == before) break;
  }
  if (data.empty()) throw EmptyDataset("no interactions left after min-count filtering");
  return data;
}

struct UserRecord {
  std::string id;
  std::vector<std::uint32_t> visible;  // sorted item indices fed to the model
  std::vector<std::uint32_t> holdout;  // sorted held-out items (validation/test only)

  friend bool operator==(const UserRecord&, const UserRecord&) = default;
};

struct DatasetStats {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t interactions = 0;
  double sparsity = 0.0;  // percent, after filtering
};

struct Dataset {
  std::vector<std::string> item_ids;
  ItemMeta meta;
  std::vector<UserRecord> train;
  std::vector<UserRecord> validation;
  std::vector<UserRecord> test;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  std::size_t items() const { return item_ids.size(); }

  DatasetStats stats() const {
    DatasetStats s;
    s.users = train.size() + validation.size() + test.size();
    s.items = items();
    for (const auto* part : {&train, &validation, &test}) {
      for (const auto& u : *part) s.interactions += u.visible.size() + u.holdout.size();
    }
    const double cells = static_cast<double>(s.users) * static_cast<double>(s.items);
    s.sparsity = cells > 0 ? 100.0 * (1.0 - static_cast<double>(s.interactions) / cells) : 100.0;
    return s;
  }
};

enum class Split { Train, Validation, Test };

inline const std::vector<UserRecord>& users_of(const Dataset& d, Split s) {
  switch (s) {
    case Split::Train: return d.train;
    case Split::Validation: return d.validation;
    case Split::Test: return d.test;
  }
  return d.train;
}

inline Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "validation" || s == "val") return Split::Validation;
  if (s == "test") return Split::Test;
  throw ValidationError("unknown split '" + s + "'");
}

/// round-half-up(frac * positives), at least 1.
inline std::size_t holdout_size(std::size_t positives, double mask_frac) {
  const auto n = static_cast<std::size_t>(std::floor(mask_frac * static_cast<double>(positives) + 0.5));
  return std::max<std::size_t>(1, n);
}

/// Raw count per item over training users, divided by the maximum count.
inline std::vector<double> compute_popularity(const std::vector<UserRecord>& train, std::size_t items) {
  require(!train.empty(), "compute_popularity: empty train set");
  std::vector<double> counts(items, 0.0);
  for (const auto& u : train) {
    for (auto i : u.visible) counts[i] += 1.0;
    for (auto i : u.holdout) counts[i] += 1.0;
  }
  const double max = *std::max_element(counts.begin(), counts.end());
  require(max > 0.0, "compute_popularity: no training interactions");
  for (double& c : counts) c /= max;
  return counts;
}

inline bool is_documentary(const std::string& genres) {
  std::string tag;
  auto check = [](std::string t) {
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    return t == "documentary";
  };
  for (char c : genres) {
    if (c == '|') {
      if (check(tag)) return true;
      tag.clear();
    } else {
      tag += c;
    }
  }
  return check(tag);
}

struct SplitOptions {
  std::uint64_t seed = 0;
  double train_ratio = 0.90;
  double validation_ratio = 0.05;
  double test_ratio = 0.05;
  double mask_frac = 0.20;
};

/// User-level split by seeded shuffle; validation/test users get a seeded
/// holdout of round(mask_frac * positives) items. Prices missing from
/// `item_info` are imputed with the median known price of training items.
inline Dataset split(const BinaryInteractions& filtered, const std::vector<ItemInfo>& item_info,
                     const SplitOptions& opt = {}) {
  require(std::abs(opt.train_ratio + opt.validation_ratio + opt.test_ratio - 1.0) < 1e-9,
          "split: ratios must sum to 1");
  require(opt.mask_frac > 0.0 && opt.mask_frac < 1.0, "split: mask_frac must lie in (0,1)");

  Dataset d;
  d.seed = opt.seed;
  std::map<std::string, std::vector<std::string>> by_user;
  std::set<std::string> item_set;
  for (const auto& [u, i] : filtered) {
    by_user[u].push_back(i);
    item_set.insert(i);
  }
  d.item_ids.assign(item_set.begin(), item_set.end());
  std::map<std::string, std::uint32_t> item_index;
  for (std::uint32_t k = 0; k < d.item_ids.size(); ++k) item_index[d.item_ids[k]] = k;

  std::vector<std::string> users;
  users.reserve(by_user.size());
  for (const auto& [u, items] : by_user) users.push_back(u);
  require(users.size() >= 3, "split: need at least three users");

  Rng rng(opt.seed);
  rng.shuffle(std::span<std::string>(users));

  const auto n = users.size();
  const auto n_val = static_cast<std::size_t>(std::floor(opt.validation_ratio * static_cast<double>(n) + 0.5));
  const auto n_test = static_cast<std::size_t>(std::floor(opt.test_ratio * static_cast<double>(n) + 0.5));
  require(n_val + n_test < n, "split: not enough users for a training split");

  auto positives_of = [&](const std::string& u) {
    std::vector<std::uint32_t> pos;
    for (const auto& i : by_user[u]) pos.push_back(item_index[i]);
    std::sort(pos.begin(), pos.end());
    return pos;
  };

  for (std::size_t k = 0; k < n; ++k) {
    const auto& u = users[k];
    auto pos = positives_of(u);
    const bool held = k < n_val + n_test;
    if (held && pos.size() < 2) {
      d.warnings.push_back("user " + u + " has fewer than 2 positives; reassigned to train");
      d.train.push_back({u, std::move(pos), {}});
      continue;
    }
    if (!held) {
      d.train.push_back({u, std::move(pos), {}});
      continue;
    }
    const auto m = std::min(holdout_size(pos.size(), opt.mask_frac), pos.size() - 1);
    std::vector<std::uint32_t> order = pos;
    rng.shuffle(std::span<std::uint32_t>(order));
    std::vector<std::uint32_t> hold(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(hold.begin(), hold.end());
    std::vector<std::uint32_t> vis;
    std::set_difference(pos.begin(), pos.end(), hold.begin(), hold.end(), std::back_inserter(vis));
    (k < n_val ? d.validation : d.test).push_back({u, std::move(vis), std::move(hold)});
  }

  // Item metadata.
  const auto items = d.item_ids.size();
  std::map<std::string, const ItemInfo*> info;
  for (const auto& it : item_info) info[it.item] = &it;
  d.meta.popularity = compute_popularity(d.train, items);
  d.meta.price.assign(items, 0.0);
  d.meta.is_doc.assign(items, false);
  d.meta.price_imputed.assign(items, false);
  std::vector<double> known_train_prices;
  for (std::size_t k = 0; k < items; ++k) {
    auto it = info.find(d.item_ids[k]);
    if (it == info.end()) continue;
    d.meta.is_doc[k] = is_documentary(it->second->genres);
    if (it->second->price) {
      d.meta.price[k] = *it->second->price;
      if (d.meta.popularity[k] > 0.0) known_train_prices.push_back(*it->second->price);
    }
  }
  double median = 1.0;
  if (!known_train_prices.empty()) {
    std::sort(known_train_prices.begin(), known_train_prices.end());
    const auto h = known_train_prices.size() / 2;
    median = known_train_prices.size() % 2 ? known_train_prices[h]
                                           : 0.5 * (known_train_prices[h - 1] + known_train_prices[h]);
  }
  for (std::size_t k = 0; k < items; ++k) {
    auto it = info.find(d.item_ids[k]);
    if (it == info.end() || !it->second->price) {
      d.meta.price[k] = median;
      d.meta.price_imputed[k] = true;
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// Synthetic data

struct SyntheticConfig {
  std::size_t users = 1000;
  std::size_t items = 200;
  std::size_t latent_dim = 8;
  double price_log_mean = 2.7;  // log-normal price: exp(N(mean, sigma))
  double price_log_sigma = 0.6;
  double price_popularity_corr = -0.5;  // correlation of log-price with item base affinity
  double doc_fraction = 0.1;
  double doc_popularity_shift = -1.0;  // documentaries are a niche: lower base affinity
  double mean_extra_ratings = 12.0;    // per user: 8 + Exp(mean) rated items
  std::size_t min_ratings = 8;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  InteractionsTable table;
  std::vector<ItemInfo> items;
};

inline std::string synthetic_id(char prefix, std::size_t k) {
  std::string digits = std::to_string(k);
  return std::string(1, prefix) + std::string(digits.size() < 5 ? 5 - digits.size() : 0, '0') + digits;
}

/// Ratings drawn from a seeded low-rank affinity model. Each user rates a
/// Gumbel-top-k sample of items; the best-matching 80% of rated items get
/// ratings 3..5 and the rest 1..2.
inline SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
  require(cfg.users > 0 && cfg.items > 0 && cfg.latent_dim > 0, "generate_synthetic: sizes must be positive");
  require(cfg.doc_fraction >= 0.0 && cfg.doc_fraction <= 1.0, "generate_synthetic: doc_fraction outside [0,1]");
  require(std::abs(cfg.price_popularity_corr) <= 1.0, "generate_synthetic: price_popularity_corr outside [-1,1]");
  Rng rng(cfg.seed);
  const auto d = cfg.latent_dim;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  std::vector<std::size_t> order(cfg.items);
  for (std::size_t i = 0; i < cfg.items; ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_docs = static_cast<std::size_t>(std::llround(cfg.doc_fraction * static_cast<double>(cfg.items)));
  std::vector<bool> is_doc(cfg.items, false);
  for (std::size_t k = 0; k < n_docs; ++k) is_doc[order[k]] = true;

  std::vector<std::vector<double>> item_f(cfg.items, std::vector<double>(d));
  std::vector<double> item_bias(cfg.items);
  SyntheticData out;
  for (std::size_t i = 0; i < cfg.items; ++i) {
    for (auto& v : item_f[i]) v = rng.normal();
    const double z = rng.normal();
    item_bias[i] = 0.8 * z + (is_doc[i] ? cfg.doc_popularity_shift : 0.0);
    const double rho = cfg.price_popularity_corr;
    const double price_z = rho * z + std::sqrt(1.0 - rho * rho) * rng.normal();
    const double price = std::exp(cfg.price_log_mean + cfg.price_log_sigma * price_z);
    out.items.push_back({synthetic_id('i', i), std::round(price * 100.0) / 100.0,
                         is_doc[i] ? "Documentary" : (i % 2 ? "Drama" : "Comedy|Drama")});
  }

  std::int64_t clock = 0;
  std::vector<double> user_f(d);
  std::vector<std::pair<double, std::size_t>> keyed(cfg.items);
  for (std::size_t u = 0; u < cfg.users; ++u) {
    for (auto& v : user_f) v = rng.normal();
    auto n_rated = cfg.min_ratings + static_cast<std::size_t>(rng.exponential(cfg.mean_extra_ratings));
    n_rated = std::min(n_rated, cfg.items / 2);
    for (std::size_t i = 0; i < cfg.items; ++i) {
      double a = item_bias[i];
      for (std::size_t k = 0; k < d; ++k) a += 1.5 * inv_sqrt_d * user_f[k] * item_f[i][k];
      double g = rng.uniform();
      while (g <= 0.0) g = rng.uniform();
      keyed[i] = {a - std::log(-std::log(g)), i};
    }
    std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(n_rated), keyed.end(),
                      [](const auto& x, const auto& y) { return x.first > y.first || (x.first == y.first && x.second < y.second); });
    for (std::size_t r = 0; r < n_rated; ++r) {
      const double q = static_cast<double>(r) / static_cast<double>(n_rated);
      int rating = q < 0.3 ? 5 : q < 0.55 ? 4 : q < 0.8 ? 3 : static_cast<int>(1 + rng.below(2));
      out.table.records.push_back({synthetic_id('u', u), synthetic_id('i', keyed[r].second), rating, clock++});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV input

namespace detail {

inline std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && s[b] == ' ') ++b;
  return s.substr(b);
}

}  // namespace detail

/// `user_id,item_id,rating[,timestamp]` with a header row.
inline InteractionsTable read_interactions_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  const auto header = split_csv_line(detail::trim(line));
  if (header.size() < 3 || detail::trim(header[0]) != "user_id" || detail::trim(header[1]) != "item_id" ||
      detail::trim(header[2]) != "rating") {
    throw DataError(path.string() + ":1: expected header user_id,item_id,rating[,timestamp]");
  }
  InteractionsTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (f.size() < 3 || f.size() > 4) throw DataError(where + "expected 3 or 4 fields");
    Interaction r;
    r.user = detail::trim(f[0]);
    r.item = detail::trim(f[1]);
    if (r.user.empty() || r.item.empty()) throw DataError(where + "empty id");
    try {
      r.rating = parse_integer<int>(detail::trim(f[2]));
      if (f.size() == 4 && !detail::trim(f[3]).empty()) r.timestamp = parse_integer<std::int64_t>(detail::trim(f[3]));
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
    if (r.rating < 1 || r.rating > 5) throw DataError(where + "rating outside 1..5");
    table.records.push_back(std::move(r));
  }
  return table;
}

/// `item_id,price,genres`; empty price means missing, genres are `|`-separated.
inline std::vector<ItemInfo> read_item_meta_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  const auto header = split_csv_line(detail::trim(line));
  if (header.size() != 3 || header[0] != "item_id" || header[1] != "price" || header[2] != "genres") {
    throw DataError(path.string() + ":1: expected header item_id,price,genres");
  }
  std::vector<ItemInfo> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() == 2) f.emplace_back();
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (f.size() != 3) throw DataError(where + "expected 3 fields");
    ItemInfo info{detail::trim(f[0]), std::nullopt, detail::trim(f[2])};
    if (info.item.empty()) throw DataError(where + "empty item id");
    const auto price = detail::trim(f[1]);
    if (!price.empty()) {
      try {
        info.price = parse_double(price);
      } catch (const DataError& e) {
        throw DataError(where + e.what());
      }
      if (!std::isfinite(*info.price) || *info.price < 0.0) throw DataError(where + "price must be non-negative");
    }
    out.push_back(std::move(info));
  }
  return out;
}

inline void write_interactions_csv(const std::filesystem::path& path, const InteractionsTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "user_id,item_id,rating,timestamp\n";
  for (const auto& r : table.records) {
    out << r.user << ',' << r.item << ',' << r.rating << ',';
    if (r.timestamp) out << *r.timestamp;
    out << '\n';
  }
}

inline void write_item_meta_csv(const std::filesystem::path& path, const std::vector<ItemInfo>& items) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "item_id,price,genres\n";
  for (const auto& it : items) {
    out << it.item << ',';
    if (it.price) out << format_double(*it.price);
    out << ',' << it.genres << '\n';
  }
}

// ---------------------------------------------------------------------------
// Dataset bundle: a directory with meta.json and train.bin / val.bin / test.bin.
//
// Split file layout (all integers little-endian u32):
//   magic "MGDS", version (=1), user count U, then per user:
//     id length, id bytes (UTF-8), visible count V, V item indices,
//     holdout count H, H item indices

namespace detail {

inline void write_u32(std::ostream& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.write(buf, 4);
}

inline std::uint32_t read_u32(std::istream& in, const std::string& where) {
  char buf[4];
  if (!in.read(buf, 4)) throw DataError(where + ": truncated");
  std::uint32_t v = 0;
  std::memcpy(&v, buf, 4);
  return v;
}

inline void write_split(const std::filesystem::path& path, const std::vector<UserRecord>& users) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write("MGDS", 4);
  write_u32(out, 1);
  write_u32(out, static_cast<std::uint32_t>(users.size()));
  for (const auto& u : users) {
    write_u32(out, static_cast<std::uint32_t>(u.id.size()));
    out.write(u.id.data(), static_cast<std::streamsize>(u.id.size()));
    write_u32(out, static_cast<std::uint32_t>(u.visible.size()));
    for (auto i : u.visible) write_u32(out, i);
    write_u32(out, static_cast<std::uint32_t>(u.holdout.size()));
    for (auto i : u.holdout) write_u32(out, i);
  }
}

inline std::vector<UserRecord> read_split(const std::filesystem::path& path, std::size_t items) {
  std::ifstream in(path, std::ios::binary);
  const auto where = path.string();
  if (!in) throw DataError("cannot read " + where);
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "MGDS") throw DataError(where + ": bad magic");
  if (read_u32(in, where) != 1) throw DataError(where + ": unsupported version");
  const auto n = read_u32(in, where);
  std::vector<UserRecord> users(n);
  for (auto& u : users) {
    u.id.resize(read_u32(in, where));
    if (!in.read(u.id.data(), static_cast<std::streamsize>(u.id.size()))) throw DataError(where + ": truncated");
    u.visible.resize(read_u32(in, where));
    for (auto& i : u.visible) i = read_u32(in, where);
    u.holdout.resize(read_u32(in, where));
    for (auto& i : u.holdout) i = read_u32(in, where);
    for (auto i : u.visible) if (i >= items) throw DataError(where + ": item index out of range");
    for (auto i : u.holdout) if (i >= items) throw DataError(where + ": item index out of range");
  }
  return users;
}

}  // namespace detail

inline void save_dataset(const Dataset& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json meta;
  meta["format"] = "mgdrec-dataset";
  meta["version"] = 1;
  meta["n_items"] = d.items();
  meta["item_ids"] = d.item_ids;
  meta["price"] = d.meta.price;
  meta["is_doc"] = d.meta.is_doc;
  meta["popularity"] = d.meta.popularity;
  meta["price_imputed"] = d.meta.price_imputed;
  meta["seed"] = d.seed;
  meta["warnings"] = d.warnings;
  const auto s = d.stats();
  meta["stats"] = {{"users", s.users}, {"items", s.items}, {"interactions", s.interactions}, {"sparsity", s.sparsity}};
  {
    std::ofstream out(dir / "meta.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / "meta.json").string());
    out << meta.dump(1) << '\n';
  }
  detail::write_split(dir / "train.bin", d.train);
  detail::write_split(dir / "val.bin", d.validation);
  detail::write_split(dir / "test.bin", d.test);
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "meta.json");
  if (!in) throw DataError("not a dataset bundle: " + dir.string() + " (missing meta.json)");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError((dir / "meta.json").string() + ": " + e.what());
  }
  Dataset d;
  d.item_ids = meta.at("item_ids").get<std::vector<std::string>>();
  d.meta.price = meta.at("price").get<std::vector<double>>();
  d.meta.is_doc = meta.at("is_doc").get<std::vector<bool>>();
  d.meta.popularity = meta.at("popularity").get<std::vector<double>>();
  d.meta.price_imputed = meta.at("price_imputed").get<std::vector<bool>>();
  d.seed = meta.at("seed").get<std::uint64_t>();
  d.warnings = meta.value("warnings", std::vector<std::string>{});
  d.meta.validate();
  if (d.meta.size() != d.items()) throw DataError("meta.json: metadata length differs from item count");
  d.train = detail::read_split(dir / "train.bin", d.items());
  d.validation = detail::read_split(dir / "val.bin", d.items());
  d.test = detail::read_split(dir / "test.bin", d.items());
  return d;
}

/// Dense 0/1 rows for the given users (visible items only).
inline RowMatrix dense_rows(const std::vector<UserRecord>& users, std::span<const std::size_t> which,
                            std::size_t items) {
  RowMatrix m = RowMatrix::Zero(static_cast<Eigen::Index>(which.size()), static_cast<Eigen::Index>(items));
  for (std::size_t r = 0; r < which.size(); ++r) {
    for (auto i : users[which[r]].visible) m(static_cast<Eigen::Index>(r), i) = 1.0;
  }
  return m;
}

inline RowMatrix dense_rows(const std::vector<UserRecord>& users, std::size_t items) {
  std::vector<std::size_t> all(users.size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  return dense_rows(users, all, items);
}

}  // namespace mgdrec
