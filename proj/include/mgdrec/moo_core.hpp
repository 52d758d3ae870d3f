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

// Multi-objective primitives: objective vectors, Pareto dominance, the
// non-dominated archive and common descent vector assembly.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mgdrec/errors.hpp"
#include "mgdrec/text.hpp"

namespace mgdrec {

using Vector = Eigen::VectorXd;

enum class Orientation { Minimize, Maximize };

inline std::string to_string(Orientation o) {
  return o == Orientation::Minimize ? "minimize" : "maximize";
}

inline Orientation orientation_from_string(const std::string& s) {
  if (s == "minimize") return Orientation::Minimize;
  if (s == "maximize") return Orientation::Maximize;
  throw DataError("unknown orientation '" + s + "'");
}

class ObjectivePoint {
 public:
  ObjectivePoint() = default;

  ObjectivePoint(std::vector<double> values, std::vector<Orientation> orientation)
      : values_(std::move(values)), orientation_(std::move(orientation)) {
    require(!values_.empty(), "ObjectivePoint: at least one objective required");
    require(values_.size() == orientation_.size(),
            "ObjectivePoint: values and orientation lengths differ");
    for (double v : values_) require(std::isfinite(v), "ObjectivePoint: non-finite value");
  }

  /// All axes minimized.
  static ObjectivePoint minimize(std::vector<double> values) {
    std::vector<Orientation> o(values.size(), Orientation::Minimize);
    return {std::move(values), std::move(o)};
  }

  static ObjectivePoint maximize(std::vector<double> values) {
    std::vector<Orientation> o(values.size(), Orientation::Maximize);
    return {std::move(values), std::move(o)};
  }

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<Orientation>& orientation() const { return orientation_; }

  /// Value on axis i expressed as a quantity to minimize.
  double canonical(std::size_t i) const {
    return orientation_[i] == Orientation::Maximize ? -values_[i] : values_[i];
  }

  /// Same point with every axis orientation flipped and values negated;
  /// comparisons are unchanged.
  ObjectivePoint flipped() const {
    std::vector<double> v(values_.size());
    std::vector<Orientation> o(values_.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = -values_[i];
      o[i] = orientation_[i] == Orientation::Maximize ? Orientation::Minimize : Orientation::Maximize;
    }
    return {std::move(v), std::move(o)};
  }

  friend bool operator==(const ObjectivePoint&, const ObjectivePoint&) = default;

 private:
  std::vector<double> values_;
  std::vector<Orientation> orientation_;
};

/// Pareto dominance after converting every axis to minimize.
inline bool dominates(const ObjectivePoint& a, const ObjectivePoint& b) {
  require(a.size() == b.size(), "dominates: dimension mismatch");
  require(a.orientation() == b.orientation(), "dominates: orientation mismatch");
  bool strictly_better = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a.canonical(i);
    const double y = b.canonical(i);
    if (x > y) return false;
    if (x < y) strictly_better = true;
  }
  return strictly_better;
}

inline constexpr double kSimplexTolerance = 1e-9;

/// Convex-combination weights on the unit simplex.
class AlphaVector {
 public:
  AlphaVector() = default;

  explicit AlphaVector(std::vector<double> alphas) : alphas_(std::move(alphas)) {
    require(!alphas_.empty(), "AlphaVector: empty");
    double sum = 0.0;
    for (double a : alphas_) {
      require(std::isfinite(a) && a >= 0.0, "AlphaVector: negative or non-finite weight");
      sum += a;
    }
    require(std::abs(sum - 1.0) <= kSimplexTolerance, "AlphaVector: weights do not sum to 1");
  }

  static AlphaVector uniform(std::size_t n) {
    require(n > 0, "AlphaVector::uniform: n must be positive");
    return AlphaVector(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  std::size_t size() const { return alphas_.size(); }
  double operator[](std::size_t i) const { return alphas_[i]; }
  const std::vector<double>& values() const { return alphas_; }

 private:
  std::vector<double> alphas_;
};

inline void check_gradient_family(std::span<const Vector> grads, std::size_t n_alphas,
                                  const char* who) {
  require(!grads.empty(), std::string(who) + ": no gradients");
  require(grads.size() == n_alphas, std::string(who) + ": alpha count differs from gradient count");
  for (const auto& g : grads) {
    require(g.size() == grads.front().size(), std::string(who) + ": gradient length mismatch");
  }
}

/// Common descent vector sum_i alpha_i * g_i.
inline Vector combine_gradients(std::span<const Vector> grads, const AlphaVector& alphas) {
  check_gradient_family(grads, alphas.size(), "combine_gradients");
  Vector out = Vector::Zero(grads.front().size());
  for (std::size_t i = 0; i < grads.size(); ++i) out += alphas[i] * grads[i];
  return out;
}

/// Norm of the common descent vector. Zero means Pareto stationary when the
/// gradients are full-batch; under mini-batches it is only a diagnostic.
inline double stationarity_residual(std::span<const Vector> grads, const AlphaVector& alphas) {
  return combine_gradients(grads, alphas).norm();
}

// ---------------------------------------------------------------------------
// Archive

enum class InsertStatus { Accepted, Rejected, AcceptedEvicting };

struct ArchiveEntry {
  ObjectivePoint point;
  std::string payload;
  std::uint64_t sequence = 0;  // insertion order, used for deterministic tie-breaks
};

struct InsertOutcome {
  InsertStatus status = InsertStatus::Rejected;
  std::vector<ArchiveEntry> evicted;
};

/// Set of mutually non-dominated points, each carrying a unique payload id.
///
/// Exact duplicates of an existing point are rejected. With a capacity set,
/// an overflowing insert evicts the most crowded non-boundary member, where
/// crowding is the nearest-neighbour distance in min-max normalized space.
/// If the crowding rule picks the incoming point itself the insert is
/// reported as Rejected and the archive is unchanged.
///
/// Single writer; readers must not overlap with insert().
class ParetoArchive {
 public:
  explicit ParetoArchive(std::vector<Orientation> orientation,
                         std::optional<std::size_t> capacity = std::nullopt,
                         std::vector<std::string> names = {})
      : orientation_(std::move(orientation)), capacity_(capacity), names_(std::move(names)) {
    require(!orientation_.empty(), "ParetoArchive: at least one objective required");
    require(!capacity_ || *capacity_ >= 1, "ParetoArchive: capacity must be positive");
    if (names_.empty()) {
      for (std::size_t i = 0; i < orientation_.size(); ++i) names_.push_back("obj_" + std::to_string(i + 1));
    }
    require(names_.size() == orientation_.size(), "ParetoArchive: names length mismatch");
  }

  InsertOutcome insert(const ObjectivePoint& p, const std::string& payload) {
    require(p.size() == orientation_.size(), "archive_insert: dimension mismatch");
    require(p.orientation() == orientation_, "archive_insert: orientation mismatch");
    require(std::none_of(entries_.begin(), entries_.end(),
                         [&](const ArchiveEntry& e) { return e.payload == payload; }),
            "archive_insert: duplicate payload id '" + payload + "'");

    for (const auto& e : entries_) {
      if (dominates(e.point, p) || e.point == p) return {InsertStatus::Rejected, {}};
    }

    InsertOutcome outcome;
    std::vector<ArchiveEntry> kept;
    kept.reserve(entries_.size() + 1);
    for (const auto& e : entries_) {
      (dominates(p, e.point) ? outcome.evicted : kept).push_back(e);
    }
    kept.push_back({p, payload, next_sequence_});

    if (capacity_ && kept.size() > *capacity_) {
      const std::size_t victim = most_crowded(kept);
      if (victim == kept.size() - 1) return {InsertStatus::Rejected, {}};
      outcome.evicted.push_back(std::move(kept[victim]));
      kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(victim));
    }

    ++next_sequence_;
    entries_ = std::move(kept);
    outcome.status = outcome.evicted.empty() ? InsertStatus::Accepted : InsertStatus::AcceptedEvicting;
    return outcome;
  }

  InsertOutcome insert(std::vector<double> values, const std::string& payload) {
    return insert(ObjectivePoint(std::move(values), orientation_), payload);
  }

  const std::vector<ArchiveEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t dimension() const { return orientation_.size(); }
  const std::vector<Orientation>& orientation() const { return orientation_; }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<std::size_t> capacity() const { return capacity_; }

  const ArchiveEntry* find(const std::string& payload) const {
    auto it = std::find_if(entries_.begin(), entries_.end(),
                           [&](const ArchiveEntry& e) { return e.payload == payload; });
    return it == entries_.end() ? nullptr : &*it;
  }

 private:
  std::size_t most_crowded(const std::vector<ArchiveEntry>& pts) const {
    const std::size_t m = pts.size();
    const std::size_t n = orientation_.size();
    std::vector<double> lo(n, std::numeric_limits<double>::infinity());
    std::vector<double> hi(n, -std::numeric_limits<double>::infinity());
    for (const auto& e : pts) {
      for (std::size_t j = 0; j < n; ++j) {
        lo[j] = std::min(lo[j], e.point.canonical(j));
        hi[j] = std::max(hi[j], e.point.canonical(j));
      }
    }
    auto coord = [&](std::size_t i, std::size_t j) {
      const double span = hi[j] - lo[j];
      return span > 0.0 ? (pts[i].point.canonical(j) - lo[j]) / span : 0.0;
    };

    struct Score {
      bool boundary;
      double nearest;
      double second;
      std::uint64_t sequence;
    };
    std::vector<Score> scores(m);
    for (std::size_t i = 0; i < m; ++i) {
      bool boundary = false;
      for (std::size_t j = 0; j < n; ++j) {
        const double c = pts[i].point.canonical(j);
        if (hi[j] > lo[j] && (c == lo[j] || c == hi[j])) boundary = true;
      }
      double d1 = std::numeric_limits<double>::infinity();
      double d2 = d1;
      for (std::size_t k = 0; k < m; ++k) {
        if (k == i) continue;
        double d = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const double diff = coord(i, j) - coord(k, j);
          d += diff * diff;
        }
        d = std::sqrt(d);
        if (d < d1) {
          d2 = d1;
          d1 = d;
        } else if (d < d2) {
          d2 = d;
        }
      }
      scores[i] = {boundary, d1, d2, pts[i].sequence};
    }
    // Interior points are evicted before boundary points; among equals the
    // oldest entry goes first.
    std::size_t best = 0;
    auto less = [](const Score& a, const Score& b) {
      if (a.boundary != b.boundary) return !a.boundary;
      if (a.nearest != b.nearest) return a.nearest < b.nearest;
      if (a.second != b.second) return a.second < b.second;
      return a.sequence < b.sequence;
    };
    for (std::size_t i = 1; i < m; ++i) {
      if (less(scores[i], scores[best])) best = i;
    }
    return best;
  }

  std::vector<Orientation> orientation_;
  std::optional<std::size_t> capacity_;
  std::vector<std::string> names_;
  std::vector<ArchiveEntry> entries_;
  std::uint64_t next_sequence_ = 0;
};

// ---------------------------------------------------------------------------
// Archive export: `payload_id,obj_1,...,obj_n` CSV plus a JSON sidecar with
// objective names and orientations.

inline std::filesystem::path archive_sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".json");
  return p;
}

inline std::string archive_csv_header(std::size_t n) {
  std::string header = "payload_id";
  for (std::size_t i = 0; i < n; ++i) header += ",obj_" + std::to_string(i + 1);
  return header;
}

inline void write_archive_sidecar(const ParetoArchive& archive, const std::filesystem::path& csv_path) {
  nlohmann::json side;
  side["format"] = "mgdrec-archive";
  side["version"] = 1;
  side["names"] = archive.names();
  auto& orient = side["orientations"] = nlohmann::json::array();
  for (auto o : archive.orientation()) orient.push_back(to_string(o));
  if (archive.capacity()) side["capacity"] = *archive.capacity();
  std::ofstream out(archive_sidecar_path(csv_path), std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + archive_sidecar_path(csv_path).string());
  out << side.dump(2) << '\n';
}

inline void write_archive_csv(const ParetoArchive& archive, const std::filesystem::path& csv_path) {
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + csv_path.string());
  out << archive_csv_header(archive.dimension()) << '\n';
  for (const auto& e : archive.entries()) {
    out << e.payload;
    for (double v : e.point.values()) out << ',' << format_double(v);
    out << '\n';
  }
  write_archive_sidecar(archive, csv_path);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline ParetoArchive read_archive_csv(const std::filesystem::path& csv_path) {
  std::ifstream side_in(archive_sidecar_path(csv_path));
  if (!side_in) throw DataError("missing archive sidecar " + archive_sidecar_path(csv_path).string());
  const auto side = nlohmann::json::parse(side_in);
  std::vector<Orientation> orient;
  for (const auto& o : side.at("orientations")) orient.push_back(orientation_from_string(o.get<std::string>()));
  std::optional<std::size_t> capacity;
  if (side.contains("capacity")) capacity = side["capacity"].get<std::size_t>();
  ParetoArchive archive(orient, capacity, side.at("names").get<std::vector<std::string>>());

  std::ifstream in(csv_path);
  if (!in) throw DataError("cannot read " + csv_path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind(archive_csv_header(orient.size()), 0) != 0) {
    throw DataError(csv_path.string() + ": unexpected header '" + line + "'");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() < orient.size() + 1) {
      throw DataError(csv_path.string() + ":" + std::to_string(line_no) + ": too few fields");
    }
    std::vector<double> values;
    for (std::size_t i = 0; i < orient.size(); ++i) values.push_back(parse_double(fields[i + 1]));
    archive.insert(std::move(values), fields[0]);
  }
  return archive;
}

}  // namespace mgdrec
