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

// LINMAP operating-point selection over a Pareto front.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mgdrec/errors.hpp"
#include "mgdrec/moo_core.hpp"

namespace mgdrec {

struct FrontPoint {
  ObjectivePoint point;
  std::string payload;
};

struct FrontView {
  std::vector<FrontPoint> points;
  std::vector<std::string> names;

  static FrontView from_archive(const ParetoArchive& archive) {
    FrontView f;
    f.names = archive.names();
    for (const auto& e : archive.entries()) f.points.push_back({e.point, e.payload});
    return f;
  }

  bool empty() const { return points.empty(); }
  std::size_t dimension() const { return points.empty() ? 0 : points.front().point.size(); }
};

/// Componentwise best value over the front.
inline ObjectivePoint ideal_point(const FrontView& front) {
  require(!front.empty(), "ideal_point: empty front");
  const auto& first = front.points.front().point;
  std::vector<double> best = first.values();
  for (const auto& p : front.points) {
    require(p.point.orientation() == first.orientation(), "ideal_point: orientation mismatch");
    for (std::size_t j = 0; j < best.size(); ++j) {
      best[j] = first.orientation()[j] == Orientation::Maximize ? std::max(best[j], p.point[j])
                                                                : std::min(best[j], p.point[j]);
    }
  }
  return {std::move(best), first.orientation()};
}

struct LinmapScore {
  std::string payload;
  std::vector<double> normalized;  // 1 = best on the front, 0 = worst; constant axes omitted
  double distance = 0.0;
};

/// Per-axis min-max normalization so that the ideal point maps to (1, ..., 1).
inline std::vector<LinmapScore> linmap_scores(const FrontView& front) {
  require(!front.empty(), "linmap_select: empty front");
  const auto n = front.dimension();
  const auto& orient = front.points.front().point.orientation();
  std::vector<double> lo(n, std::numeric_limits<double>::infinity());
  std::vector<double> hi(n, -std::numeric_limits<double>::infinity());
  for (const auto& p : front.points) {
    require(p.point.size() == n, "linmap_select: dimension mismatch");
    for (std::size_t j = 0; j < n; ++j) {
      lo[j] = std::min(lo[j], p.point[j]);
      hi[j] = std::max(hi[j], p.point[j]);
    }
  }
  std::vector<LinmapScore> scores;
  for (const auto& p : front.points) {
    LinmapScore s{p.payload, {}, 0.0};
    double sq = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!(hi[j] > lo[j])) continue;
      const double t = (p.point[j] - lo[j]) / (hi[j] - lo[j]);
      const double good = orient[j] == Orientation::Maximize ? t : 1.0 - t;
      s.normalized.push_back(good);
      sq += (1.0 - good) * (1.0 - good);
    }
    s.distance = std::sqrt(sq);
    scores.push_back(std::move(s));
  }
  return scores;
}

/// Payload of the point closest to the ideal point after normalization.
/// Ties: lexicographically larger normalized tuple, then smaller payload id.
inline std::string linmap_select(const FrontView& front) {
  const auto scores = linmap_scores(front);
  const LinmapScore* best = &scores.front();
  for (const auto& s : scores) {
    if (s.distance < best->distance) {
      best = &s;
    } else if (s.distance == best->distance) {
      if (s.normalized > best->normalized || (s.normalized == best->normalized && s.payload < best->payload)) {
        best = &s;
      }
    }
  }
  return best->payload;
}

/// Front CSV (`payload_id,obj_1..obj_n,selected`) plus the archive JSON sidecar.
inline void export_front(const FrontView& front, const std::filesystem::path& path,
                         const std::optional<std::string>& selected) {
  require(!front.empty(), "export_front: empty front");
  const auto n = front.dimension();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << archive_csv_header(n) << ",selected\n";
  for (const auto& p : front.points) {
    out << p.payload;
    for (double v : p.point.values()) out << ',' << format_double(v);
    out << ',' << (selected && *selected == p.payload ? 1 : 0) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());

  nlohmann::json side;
  side["format"] = "mgdrec-front";
  side["version"] = 1;
  side["names"] = front.names;
  auto& o = side["orientations"] = nlohmann::json::array();
  for (auto x : front.points.front().point.orientation()) o.push_back(to_string(x));
  if (selected) side["selected"] = *selected;
  std::ofstream s(archive_sidecar_path(path), std::ios::binary);
  if (!s) throw std::runtime_error("cannot write " + archive_sidecar_path(path).string());
  s << side.dump(2) << '\n';
}

struct ImportedFront {
  FrontView front;
  std::optional<std::string> selected;
};

inline ImportedFront import_front(const std::filesystem::path& path) {
  std::ifstream side_in(archive_sidecar_path(path));
  if (!side_in) throw DataError("missing sidecar " + archive_sidecar_path(path).string());
  const auto side = nlohmann::json::parse(side_in);
  std::vector<Orientation> orient;
  for (const auto& o : side.at("orientations")) orient.push_back(orientation_from_string(o.get<std::string>()));
  ImportedFront result;
  result.front.names = side.at("names").get<std::vector<std::string>>();

  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != archive_csv_header(orient.size()) + ",selected") {
    throw DataError(path.string() + ": unexpected header '" + line + "'");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != orient.size() + 2) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": wrong field count");
    }
    std::vector<double> values;
    for (std::size_t j = 0; j < orient.size(); ++j) values.push_back(parse_double(f[j + 1]));
    result.front.points.push_back({ObjectivePoint(std::move(values), orient), f[0]});
    if (f.back() == "1") result.selected = f[0];
  }
  return result;
}

}  // namespace mgdrec
