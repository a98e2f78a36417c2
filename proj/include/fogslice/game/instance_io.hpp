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

// Line-oriented game instance format used for oracle replay and golden tests.
//
//   # comment
//   service <k> <theta> <rho> <unit_rate>
//   node <i> <max_units> <unit_energy> <budget> [rate_multiplier]
//   neighbors <i> <j> <j> ...
//   rtt <i> <j> <seconds>            (sets both directions)
//   arrival <i> <k> <lambda>
//   grid <step>                      (optional oracle resolution)
//
// Records may appear in any order; services and nodes must be numbered
// 0..K-1 and 0..N-1 without gaps.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fogslice/game/slice.hpp"

namespace fogslice::game {

struct StoredInstance {
  GameInstance game;
  std::vector<double> budgets;
  double grid = 0.05;
};

class InstanceParseError : public ConfigError {
 public:
  InstanceParseError(std::size_t line, const std::string& what)
      : ConfigError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline StoredInstance read_instance(std::istream& in) {
  std::map<std::size_t, ServiceTypeSpec> services;
  std::map<std::size_t, std::pair<FogNodeSpec, double>> nodes;
  std::map<std::size_t, std::vector<std::size_t>> neighbors;
  struct Link {
    std::size_t i, j;
    double tau;
  };
  std::vector<Link> links;
  struct Arrival {
    std::size_t i, k;
    double lambda;
    std::size_t line;
  };
  std::vector<Arrival> arrivals;
  StoredInstance out;

  std::string text;
  std::size_t lineno = 0;
  while (std::getline(in, text)) {
    ++lineno;
    auto hash = text.find('#');
    if (hash != std::string::npos) text.erase(hash);
    std::istringstream ls(text);
    std::string tag;
    if (!(ls >> tag)) continue;
    auto fail = [&](const std::string& why) { throw InstanceParseError(lineno, why); };
    if (tag == "service") {
      ServiceTypeSpec s;
      if (!(ls >> s.id >> s.deadline_theta >> s.reward_rho >> s.unit_rate)) fail("malformed service record");
      s.name = "service" + std::to_string(s.id);
      if (services.count(s.id)) fail("duplicate service " + std::to_string(s.id));
      try {
        s.validate();
      } catch (const ConfigError& e) {
        fail(e.what());
      }
      services[s.id] = s;
    } else if (tag == "node") {
      FogNodeSpec nd;
      double budget = 0.0;
      if (!(ls >> nd.id >> nd.max_units >> nd.unit_energy >> budget)) fail("malformed node record");
      if (std::string mult; ls >> mult) {
        std::istringstream ms(mult);
        if (!(ms >> nd.rate_multiplier) || !ms.eof()) fail("malformed rate multiplier '" + mult + "'");
      }
      nd.battery_cap = std::max(1.0, budget);
      if (nodes.count(nd.id)) fail("duplicate node " + std::to_string(nd.id));
      if (budget < 0.0) fail("negative budget");
      try {
        nd.validate();
      } catch (const ConfigError& e) {
        fail(e.what());
      }
      nodes[nd.id] = {nd, budget};
    } else if (tag == "neighbors") {
      std::size_t i, j;
      if (!(ls >> i)) fail("malformed neighbors record");
      auto& list = neighbors[i];
      while (ls >> j) list.push_back(j);
      if (!ls.eof()) fail("malformed neighbors record");
    } else if (tag == "rtt") {
      Link l;
      if (!(ls >> l.i >> l.j >> l.tau) || l.tau < 0.0) fail("malformed rtt record");
      links.push_back(l);
    } else if (tag == "arrival") {
      Arrival a;
      a.line = lineno;
      if (!(ls >> a.i >> a.k >> a.lambda) || a.lambda < 0.0) fail("malformed arrival record");
      arrivals.push_back(a);
    } else if (tag == "grid") {
      if (!(ls >> out.grid) || !(out.grid > 0.0) || out.grid > 1.0) fail("malformed grid record");
    } else {
      fail("unknown record '" + tag + "'");
    }
    std::string extra;
    if (tag != "neighbors" && (ls >> extra)) fail("trailing field '" + extra + "'");
  }

  const std::size_t kk = services.size();
  const std::size_t n = nodes.size();
  auto& net = out.game.network;
  for (std::size_t k = 0; k < kk; ++k) {
    if (!services.count(k)) throw ConfigError("services are not numbered 0..K-1");
    net.services.push_back(services[k]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!nodes.count(i)) throw ConfigError("nodes are not numbered 0..N-1");
    net.nodes.push_back(nodes[i].first);
    out.budgets.push_back(nodes[i].second);
  }
  net.neighbors.assign(n, {});
  for (auto& [i, list] : neighbors) {
    if (i >= n) throw ConfigError("neighbors record for unknown node " + std::to_string(i));
    for (auto j : list)
      if (j >= n || j == i) throw ConfigError("bad neighbor " + std::to_string(j) + " of node " + std::to_string(i));
    net.neighbors[i] = list;
  }
  net.rtt = Matrix::square(n, kInf);
  for (std::size_t i = 0; i < n; ++i) net.rtt(i, i) = 0.0;
  for (const auto& l : links) {
    if (l.i >= n || l.j >= n) throw ConfigError("rtt record for unknown node");
    net.rtt(l.i, l.j) = net.rtt(l.j, l.i) = l.tau;
  }
  out.game.arrivals = Matrix(n, kk);
  for (const auto& a : arrivals) {
    if (a.i >= n || a.k >= kk) throw InstanceParseError(a.line, "arrival for unknown node or service");
    out.game.arrivals(a.i, a.k) = a.lambda;
  }
  return out;
}

inline void write_instance(std::ostream& os, const StoredInstance& s) {
  const auto& net = s.game.network;
  os << std::setprecision(17);
  for (const auto& svc : net.services)
    os << "service " << svc.id << ' ' << svc.deadline_theta << ' ' << svc.reward_rho << ' ' << svc.unit_rate << '\n';
  for (std::size_t i = 0; i < net.node_count(); ++i) {
    const auto& nd = net.nodes[i];
    os << "node " << i << ' ' << nd.max_units << ' ' << nd.unit_energy << ' ' << s.budgets[i] << ' '
       << nd.rate_multiplier << '\n';
  }
  for (std::size_t i = 0; i < net.node_count(); ++i) {
    if (net.neighbors[i].empty()) continue;
    os << "neighbors " << i;
    for (auto j : net.neighbors[i]) os << ' ' << j;
    os << '\n';
  }
  for (std::size_t i = 0; i < net.node_count(); ++i)
    for (std::size_t j = i + 1; j < net.node_count(); ++j)
      if (std::isfinite(net.rtt(i, j))) os << "rtt " << i << ' ' << j << ' ' << net.rtt(i, j) << '\n';
  for (std::size_t i = 0; i < net.node_count(); ++i)
    for (std::size_t k = 0; k < net.service_count(); ++k)
      os << "arrival " << i << ' ' << k << ' ' << s.game.arrivals(i, k) << '\n';
  os << "grid " << s.grid << '\n';
}

}  // namespace fogslice::game
