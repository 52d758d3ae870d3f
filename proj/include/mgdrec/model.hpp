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

// One-hidden-layer reconstruction recommender:
//
//   scores = sigmoid(tanh(x We + be) Wd + bd)
//
// trained with per-item binary cross-entropy against its own input. Item
// weights turn the same kernel into the revenue (price) and content
// (documentary indicator times popularity) objectives.

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mgdrec/errors.hpp"
#include "mgdrec/moo_core.hpp"
#include "mgdrec/random.hpp"

namespace mgdrec {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Weights stored as one flat vector. Registry order (each block row-major):
/// enc_weights (items x hidden), enc_bias (hidden), dec_weights (hidden x items),
/// dec_bias (items). Gradients use the same layout.
class RecommenderParams {
 public:
  static constexpr std::array<std::string_view, 4> kRegistry{"enc_weights", "enc_bias", "dec_weights",
                                                             "dec_bias"};

  RecommenderParams() = default;

  RecommenderParams(std::size_t items, std::size_t hidden)
      : items_(static_cast<Eigen::Index>(items)), hidden_(static_cast<Eigen::Index>(hidden)) {
    require(items >= 1 && hidden >= 1, "RecommenderParams: items and hidden must be positive");
    flat_ = Vector::Zero(flat_size(items, hidden));
  }

  /// Uniform in [-scale, scale], seeded.
  static RecommenderParams random(std::size_t items, std::size_t hidden, std::uint64_t seed,
                                  double scale = 0.05) {
    RecommenderParams p(items, hidden);
    Rng rng(seed);
    for (Eigen::Index i = 0; i < p.flat_.size(); ++i) p.flat_(i) = rng.uniform(-scale, scale);
    return p;
  }

  static Eigen::Index flat_size(std::size_t items, std::size_t hidden) {
    const auto i = static_cast<Eigen::Index>(items);
    const auto h = static_cast<Eigen::Index>(hidden);
    return i * h + h + h * i + i;
  }

  std::size_t items() const { return static_cast<std::size_t>(items_); }
  std::size_t hidden() const { return static_cast<std::size_t>(hidden_); }
  Eigen::Index size() const { return flat_.size(); }

  Vector& flat() { return flat_; }
  const Vector& flat() const { return flat_; }

  Eigen::Map<const RowMatrix> enc_weights() const { return {flat_.data(), items_, hidden_}; }
  Eigen::Map<const Vector> enc_bias() const { return {flat_.data() + items_ * hidden_, hidden_}; }
  Eigen::Map<const RowMatrix> dec_weights() const {
    return {flat_.data() + items_ * hidden_ + hidden_, hidden_, items_};
  }
  Eigen::Map<const Vector> dec_bias() const { return {flat_.data() + 2 * items_ * hidden_ + hidden_, items_}; }

  Eigen::Map<RowMatrix> enc_weights() { return {flat_.data(), items_, hidden_}; }
  Eigen::Map<Vector> enc_bias() { return {flat_.data() + items_ * hidden_, hidden_}; }
  Eigen::Map<RowMatrix> dec_weights() { return {flat_.data() + items_ * hidden_ + hidden_, hidden_, items_}; }
  Eigen::Map<Vector> dec_bias() { return {flat_.data() + 2 * items_ * hidden_ + hidden_, items_}; }

 private:
  Eigen::Index items_ = 0;
  Eigen::Index hidden_ = 0;
  Vector flat_;
};

struct ItemMeta {
  std::vector<double> price;
  std::vector<bool> is_doc;
  std::vector<double> popularity;
  std::vector<bool> price_imputed;

  std::size_t size() const { return price.size(); }

  void validate() const {
    const auto n = price.size();
    require(is_doc.size() == n && popularity.size() == n, "ItemMeta: vectors must share the item count");
    require(price_imputed.empty() || price_imputed.size() == n, "ItemMeta: price_imputed length mismatch");
    double max_pop = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      require(std::isfinite(price[i]) && price[i] >= 0.0, "ItemMeta: price must be finite and non-negative");
      require(popularity[i] >= 0.0 && popularity[i] <= 1.0, "ItemMeta: popularity outside [0,1]");
      max_pop = std::max(max_pop, popularity[i]);
    }
    require(n == 0 || max_pop == 1.0, "ItemMeta: popularity must be max-normalized");
  }

  std::size_t doc_count() const { return static_cast<std::size_t>(std::count(is_doc.begin(), is_doc.end(), true)); }
};

/// Dense interaction rows, entries in [0, 1].
struct UserBatch {
  RowMatrix rows;
  std::vector<std::string> user_ids;

  Eigen::Index users() const { return rows.rows(); }
};

enum class Objective { Relevance, Revenue, Content };

inline std::string to_string(Objective o) {
  switch (o) {
    case Objective::Relevance: return "relevance";
    case Objective::Revenue: return "revenue";
    case Objective::Content: return "content";
  }
  return "?";
}

inline Objective objective_from_string(const std::string& s) {
  if (s == "relevance") return Objective::Relevance;
  if (s == "revenue") return Objective::Revenue;
  if (s == "content") return Objective::Content;
  throw ValidationError("unknown objective '" + s + "'");
}

/// Per-item loss weights; nullopt means unit weights.
inline std::optional<Vector> objective_weights(Objective o, const ItemMeta& meta) {
  const auto n = static_cast<Eigen::Index>(meta.size());
  switch (o) {
    case Objective::Relevance:
      return std::nullopt;
    case Objective::Revenue: {
      Vector w(n);
      for (Eigen::Index i = 0; i < n; ++i) w(i) = meta.price[static_cast<std::size_t>(i)];
      return w;
    }
    case Objective::Content: {
      Vector w(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        w(i) = meta.is_doc[k] ? meta.popularity[k] : 0.0;
      }
      return w;
    }
  }
  return std::nullopt;
}

struct LossGrad {
  double loss = 0.0;
  Vector grad;
};

namespace detail {

inline void check_batch(const RecommenderParams& params, const RowMatrix& rows) {
  require(rows.rows() >= 1, "empty batch");
  require(static_cast<std::size_t>(rows.cols()) == params.items(),
          "batch has " + std::to_string(rows.cols()) + " items, model has " + std::to_string(params.items()));
}

inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace detail

inline RowMatrix predict_scores(const RecommenderParams& params, const RowMatrix& rows) {
  detail::check_batch(params, rows);
  RowMatrix hidden = rows * params.enc_weights();
  hidden.rowwise() += params.enc_bias().transpose();
  hidden = hidden.array().tanh();
  RowMatrix logits = hidden * params.dec_weights();
  logits.rowwise() += params.dec_bias().transpose();
  return logits.unaryExpr([](double z) { return detail::sigmoid(z); });
}

inline RowMatrix predict_scores(const RecommenderParams& params, const UserBatch& batch) {
  return predict_scores(params, batch.rows);
}

/// Weighted reconstruction loss and exact gradient for several item-weight
/// vectors sharing one forward pass. Loss = mean over users and items of
/// w_i * BCE(x_ui, score_ui); a missing weight vector means w = 1.
inline std::vector<LossGrad> weighted_reconstruction(const RecommenderParams& params, const RowMatrix& rows,
                                                     std::span<const std::optional<Vector>> weights) {
  detail::check_batch(params, rows);
  const auto items = static_cast<Eigen::Index>(params.items());
  for (const auto& w : weights) {
    require(!w || w->size() == items, "weighted_reconstruction: weight vector length mismatch");
  }

  RowMatrix hidden = rows * params.enc_weights();
  hidden.rowwise() += params.enc_bias().transpose();
  hidden = hidden.array().tanh();
  RowMatrix logits = hidden * params.dec_weights();
  logits.rowwise() += params.dec_bias().transpose();

  // Per-entry BCE written on logits for stability: softplus(z) - t z.
  const RowMatrix entry_loss = logits.unaryExpr([](double z) { return detail::softplus(z); }) -
                               RowMatrix(rows.cwiseProduct(logits));
  const RowMatrix residual = logits.unaryExpr([](double z) { return detail::sigmoid(z); }) - rows;
  const double scale = 1.0 / static_cast<double>(rows.rows() * items);
  const RowMatrix hidden_slope = (1.0 - hidden.array().square()).matrix();

  std::vector<LossGrad> out;
  out.reserve(weights.size());
  for (const auto& w : weights) {
    RowMatrix delta_out = residual * scale;
    double loss = 0.0;
    if (w) {
      delta_out = delta_out * w->asDiagonal();
      loss = (entry_loss * (*w)).sum() * scale;
    } else {
      loss = entry_loss.sum() * scale;
    }

    LossGrad lg;
    lg.loss = loss;
    lg.grad = Vector::Zero(params.size());
    RecommenderParams g(params.items(), params.hidden());
    g.dec_weights() = hidden.transpose() * delta_out;
    g.dec_bias() = delta_out.colwise().sum().transpose();
    const RowMatrix delta_hidden = (delta_out * params.dec_weights().transpose()).cwiseProduct(hidden_slope);
    g.enc_weights() = rows.transpose() * delta_hidden;
    g.enc_bias() = delta_hidden.colwise().sum().transpose();
    lg.grad = std::move(g.flat());
    out.push_back(std::move(lg));
  }
  return out;
}

inline LossGrad loss_relevance(const RecommenderParams& params, const UserBatch& batch) {
  const std::array<std::optional<Vector>, 1> w{std::nullopt};
  return std::move(weighted_reconstruction(params, batch.rows, w).front());
}

/// Price-weighted reconstruction loss.
inline LossGrad loss_revenue(const RecommenderParams& params, const UserBatch& batch, const ItemMeta& meta) {
  const std::array<std::optional<Vector>, 1> w{objective_weights(Objective::Revenue, meta)};
  return std::move(weighted_reconstruction(params, batch.rows, w).front());
}

/// Reconstruction loss weighted by documentary indicator times popularity.
inline LossGrad loss_content(const RecommenderParams& params, const UserBatch& batch, const ItemMeta& meta) {
  const std::array<std::optional<Vector>, 1> w{objective_weights(Objective::Content, meta)};
  return std::move(weighted_reconstruction(params, batch.rows, w).front());
}

/// Spreads `total_mass` evenly over the documentary entries of a row, then
/// clamps every entry to at most 1.
inline Vector inject_preferences(const Vector& row, const std::vector<bool>& doc_mask, double total_mass = 1.0) {
  require(static_cast<std::size_t>(row.size()) == doc_mask.size(), "inject_preferences: mask length mismatch");
  require(total_mass > 0.0 && std::isfinite(total_mass), "inject_preferences: total_mass must be positive");
  const auto docs = std::count(doc_mask.begin(), doc_mask.end(), true);
  require(docs > 0, "inject_preferences: no documentary items in mask");
  const double share = total_mass / static_cast<double>(docs);
  Vector out = row;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (doc_mask[static_cast<std::size_t>(i)]) out(i) = std::min(1.0, out(i) + share);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Snapshot format, version 1:
//   8 bytes   magic "MGDRPAR1"
//   8 bytes   header length L, little-endian u64
//   L bytes   JSON header {format, version, items, hidden, size, registry, seed}
//   8*size    parameters, little-endian IEEE-754 f64, registry order

inline constexpr std::string_view kParamsMagic = "MGDRPAR1";

namespace detail {

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

inline void write_u64(std::ostream& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.write(buf, 8);
}

inline std::uint64_t read_u64(std::istream& in) {
  char buf[8];
  if (!in.read(buf, 8)) throw DataError("truncated file");
  std::uint64_t v = 0;
  std::memcpy(&v, buf, 8);
  return v;
}

}  // namespace detail

struct ParamsHeader {
  std::size_t items = 0;
  std::size_t hidden = 0;
  std::uint64_t seed = 0;
};

inline void write_params(const std::filesystem::path& path, const RecommenderParams& params, std::uint64_t seed) {
  nlohmann::json header;
  header["format"] = "mgdrec-params";
  header["version"] = 1;
  header["items"] = params.items();
  header["hidden"] = params.hidden();
  header["size"] = params.size();
  header["registry"] = std::vector<std::string>(RecommenderParams::kRegistry.begin(), RecommenderParams::kRegistry.end());
  header["seed"] = seed;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kParamsMagic.data(), static_cast<std::streamsize>(kParamsMagic.size()));
  detail::write_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(params.flat().data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(params.size())));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline RecommenderParams read_params(const std::filesystem::path& path, ParamsHeader* header_out = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::string magic(kParamsMagic.size(), '\0');
  in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  if (magic != kParamsMagic) throw DataError(path.string() + ": not a parameter snapshot");
  const auto len = detail::read_u64(in);
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw DataError(path.string() + ": truncated header");
  const auto header = nlohmann::json::parse(text);
  if (header.at("version").get<int>() != 1) throw DataError(path.string() + ": unsupported snapshot version");
  RecommenderParams params(header.at("items").get<std::size_t>(), header.at("hidden").get<std::size_t>());
  if (header.at("size").get<Eigen::Index>() != params.size()) throw DataError(path.string() + ": size mismatch");
  if (!in.read(reinterpret_cast<char*>(params.flat().data()),
               static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(params.size())))) {
    throw DataError(path.string() + ": truncated parameter block");
  }
  if (header_out) *header_out = {params.items(), params.hidden(), header.at("seed").get<std::uint64_t>()};
  return params;
}

}  // namespace mgdrec
