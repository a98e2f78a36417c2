// Copyright 2026 The fogslice Authors
//
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

// Node placement (CSV ingest or synthetic), neighbor sets and RTT matrices.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fogslice/model.hpp"
#include "fogslice/types.hpp"

namespace fogslice::topology {

inline constexpr double kEarthRadius = 6371000.0;  // meters

class PositionParseError : public std::runtime_error {
 public:
  PositionParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

enum class CoordinateMode { meters, lonlat };

struct Site {
  long id = 0;
  Position position;
};

/// Equirectangular projection around `ref_lat` (degrees).
inline Position project_lonlat(double lon, double lat, double ref_lat) {
  constexpr double rad = std::numbers::pi / 180.0;
  return {kEarthRadius * lon * rad * std::cos(ref_lat * rad), kEarthRadius * lat * rad};
}

/// Rows `id,x,y`. Blank lines and lines starting with '#' are skipped, as is
/// a first line whose id field is not a number (a header). In lonlat mode
/// x is longitude and y latitude in degrees, projected around the mean
/// latitude of all rows.
inline std::vector<Site> read_positions(std::istream& in, CoordinateMode mode = CoordinateMode::meters) {
  std::vector<Site> sites;
  std::set<long> seen;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    auto number = [&](const std::string& f, double& out) {
      try {
        std::size_t used = 0;
        out = std::stod(f, &used);
        return f.find_first_not_of(" \t", used) == std::string::npos && std::isfinite(out);
      } catch (const std::exception&) {
        return false;
      }
    };
    double id = 0.0, x = 0.0, y = 0.0;
    bool id_ok = fields.size() == 3 && number(fields[0], id);
    if (first && !id_ok && fields.size() == 3) {
      first = false;
      continue;
    }
    first = false;
    if (fields.size() != 3) throw PositionParseError(lineno, "expected 3 comma-separated fields");
    if (!id_ok || id != std::floor(id)) throw PositionParseError(lineno, "id must be an integer");
    if (!number(fields[1], x) || !number(fields[2], y)) throw PositionParseError(lineno, "malformed coordinate");
    if (mode == CoordinateMode::lonlat && (std::fabs(y) > 90.0 || std::fabs(x) > 180.0))
      throw PositionParseError(lineno, "longitude/latitude out of range");
    long lid = static_cast<long>(id);
    if (!seen.insert(lid).second) throw PositionParseError(lineno, "duplicate id " + std::to_string(lid));
    sites.push_back({lid, {x, y}});
  }
  if (mode == CoordinateMode::lonlat && !sites.empty()) {
    double ref = 0.0;
    for (const auto& s : sites) ref += s.position.y;
    ref /= static_cast<double>(sites.size());
    for (auto& s : sites) s.position = project_lonlat(s.position.x, s.position.y, ref);
  }
  return sites;
}

inline std::vector<Site> load_positions(const std::string& path, CoordinateMode mode = CoordinateMode::meters) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_positions(in, mode);
}

struct NeighborRule {
  enum class Kind { k_nearest, radius } kind = Kind::radius;
  std::size_t k = 1;
  double radius = 500.0;  // meters

  static NeighborRule nearest(std::size_t k) { return {Kind::k_nearest, k, 0.0}; }
  static NeighborRule within(double r) { return {Kind::radius, 0, r}; }
};

/// tau = constant + per_meter * distance on links.
struct RttModel {
  double constant = 0.020;
  double per_meter = 0.0;

  double operator()(double dist) const { return constant + per_meter * dist; }
};

struct Topology {
  std::vector<Position> positions;
  std::vector<std::vector<std::size_t>> neighbors;  // sender side, ascending
  Matrix rtt;                                       // kInf where no link in either direction

  std::size_t size() const { return positions.size(); }
};

inline Topology build_neighbors(const std::vector<Position>& positions, const NeighborRule& rule,
                                const RttModel& rtt = {}) {
  const std::size_t n = positions.size();
  if (n == 0) throw ConfigError("topology needs at least one node");
  Topology t;
  t.positions = positions;
  t.neighbors.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> others;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) others.push_back(j);
    if (rule.kind == NeighborRule::Kind::radius) {
      for (std::size_t j : others)
        if (distance(positions[i], positions[j]) <= rule.radius) t.neighbors[i].push_back(j);
    } else {
      std::stable_sort(others.begin(), others.end(), [&](std::size_t a, std::size_t b) {
        return distance(positions[i], positions[a]) < distance(positions[i], positions[b]);
      });
      others.resize(std::min(rule.k, others.size()));
      std::sort(others.begin(), others.end());
      t.neighbors[i] = others;
    }
  }
  t.rtt = Matrix::square(n, kInf);
  for (std::size_t i = 0; i < n; ++i) {
    t.rtt(i, i) = 0.0;
    for (std::size_t j : t.neighbors[i]) t.rtt(i, j) = t.rtt(j, i) = rtt(distance(positions[i], positions[j]));
  }
  return t;
}

/// Concentric-ring density: ring r (0 = center disk) of equal width has
/// point density proportional to decay^r. The center disk is at least
/// 1/decay^(rings-1) times as dense as the outermost ring.
struct DensityProfile {
  double radius = 2000.0;  // meters
  std::size_t rings = 5;
  double decay = 0.5;
};

/// n points placed independently: a ring is drawn with probability
/// proportional to density times area, then a point uniformly within it.
/// Centered at the origin; n = 1 yields the center itself.
inline std::vector<Position> synth_topology(std::size_t n, const DensityProfile& profile, std::uint64_t seed) {
  if (n == 0) throw ConfigError("synthetic topology needs n >= 1");
  if (profile.rings == 0 || !(profile.radius > 0.0) || !(profile.decay > 0.0))
    throw ConfigError("invalid density profile");
  if (n == 1) return {Position{}};
  Rng rng(seed);
  const double w = profile.radius / static_cast<double>(profile.rings);
  std::vector<double> mass(profile.rings);
  for (std::size_t r = 0; r < profile.rings; ++r) {
    double inner = w * static_cast<double>(r), outer = inner + w;
    mass[r] = std::pow(profile.decay, static_cast<double>(r)) * (outer * outer - inner * inner);
  }
  double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  for (double& m : mass) m /= total;
  std::vector<Position> out;
  out.reserve(n);
  for (std::size_t p = 0; p < n; ++p) {
    std::size_t r = rng.categorical(mass);
    double inner = w * static_cast<double>(r), outer = inner + w;
    double rad = std::sqrt(inner * inner + rng.uniform() * (outer * outer - inner * inner));
    double ang = 2.0 * std::numbers::pi * rng.uniform();
    out.push_back({rad * std::cos(ang), rad * std::sin(ang)});
  }
  return out;
}

/// n/2 sites from synth_topology, each followed by a partner placed
/// `offset` meters away in a uniformly random direction (co-sited base
/// stations). Node 2m is a site, node 2m+1 its partner.
inline std::vector<Position> synth_pairs(std::size_t n, const DensityProfile& profile, double offset,
                                         std::uint64_t seed) {
  if (n == 0 || n % 2 != 0) throw ConfigError("paired topology needs an even, positive node count");
  if (!(offset > 0.0)) throw ConfigError("pair offset must be positive");
  auto sites = synth_topology(n / 2, profile, seed);
  Rng rng(seed ^ 0x5bd1e995ULL);
  std::vector<Position> out;
  for (const auto& p : sites) {
    double ang = 2.0 * std::numbers::pi * rng.uniform();
    out.push_back(p);
    out.push_back({p.x + offset * std::cos(ang), p.y + offset * std::sin(ang)});
  }
  return out;
}

}  // namespace fogslice::topology
