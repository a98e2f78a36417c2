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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "fogslice/game/energy_split.hpp"
#include "fogslice/game/offload.hpp"
#include "fogslice/game/slice.hpp"

namespace fogslice::game {

struct WelfareOptions {
  int max_rounds = 200;
  double tolerance = 1e-6;           // stop once a full round gains less than this
  std::size_t exhaustive_limit = 4096;  // enumerate all joint splits up to this many
  std::size_t max_evaluations = 0;      // joint splits tried by the ascent; 0 = unlimited
  std::size_t node_option_limit = 64;   // above this many splits a node searches by unit transfers
  OffloadOptions offload;
};

/// Connected components of the undirected graph induced by the sender-side
/// neighbor sets, in order of their lowest node index.
inline std::vector<std::vector<std::size_t>> coalition_groups(const NetworkSpec& net) {
  const std::size_t n = net.node_count();
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i)
    for (auto j : net.neighbors[i])
      if (j != i && j < n) {
        adj[i].push_back(j);
        adj[j].push_back(i);
      }
  std::vector<int> comp(n, -1);
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<std::size_t> members{s}, stack{s};
    comp[s] = static_cast<int>(groups.size());
    while (!stack.empty()) {
      auto u = stack.back();
      stack.pop_back();
      for (auto v : adj[u])
        if (comp[v] < 0) {
          comp[v] = comp[s];
          members.push_back(v);
          stack.push_back(v);
        }
    }
    std::sort(members.begin(), members.end());
    groups.push_back(std::move(members));
  }
  return groups;
}

/// The game restricted to `nodes` (sorted), reindexed 0..size-1. Links to
/// nodes outside the subset are dropped.
inline GameInstance sub_instance(const GameInstance& g, const std::vector<std::size_t>& nodes) {
  const std::size_t n = nodes.size();
  const std::size_t kk = g.service_count();
  std::vector<int> local(g.node_count(), -1);
  for (std::size_t a = 0; a < n; ++a) local[nodes[a]] = static_cast<int>(a);
  GameInstance s;
  s.network.services = g.network.services;
  s.network.neighbors.resize(n);
  s.network.rtt = Matrix::square(n, kInf);
  s.arrivals = Matrix(n, kk);
  for (std::size_t a = 0; a < n; ++a) {
    s.network.nodes.push_back(g.network.nodes[nodes[a]]);
    for (auto j : g.network.neighbors[nodes[a]])
      if (local[j] >= 0 && j != nodes[a]) s.network.neighbors[a].push_back(static_cast<std::size_t>(local[j]));
    for (std::size_t b = 0; b < n; ++b) s.network.rtt(a, b) = g.network.rtt(nodes[a], nodes[b]);
    s.network.rtt(a, a) = 0.0;
    for (std::size_t k = 0; k < kk; ++k) s.arrivals(a, k) = g.arrivals(nodes[a], k);
  }
  return s;
}

namespace detail {

// Welfare of one coalition group as a function of the unit split, with
// per-service memoisation of slice solves.
class SplitEvaluator {
 public:
  SplitEvaluator(const GameInstance& g, const OffloadOptions& opt)
      : g_(g), opt_(opt), cache_(g.service_count()) {}

  const OffloadResult& slice(std::size_t k, const std::vector<int>& units) {
    auto it = cache_[k].find(units);
    if (it != cache_[k].end()) return it->second;
    std::vector<double> e(units.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = units[i] * g_.network.nodes[i].unit_energy;
    return cache_[k].emplace(units, solve_offload(g_.slice(k, e), opt_)).first->second;
  }

  double value(std::size_t k, const std::vector<int>& units) {
    return g_.network.services[k].reward_rho * slice(k, units).served;
  }

 private:
  const GameInstance& g_;
  OffloadOptions opt_;
  std::vector<std::map<std::vector<int>, OffloadResult>> cache_;
};

struct GroupSolution {
  std::vector<std::vector<int>> units;  // [service][node]
  std::vector<OffloadMatrix> offload;
  bool certified = true;
};

inline GroupSolution solve_group(const GameInstance& g, std::span<const double> budgets, const WelfareOptions& opt) {
  const std::size_t n = g.node_count();
  const std::size_t kk = g.service_count();
  GroupSolution sol;
  sol.units.assign(kk, std::vector<int>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> lam(kk);
    for (std::size_t k = 0; k < kk; ++k) lam[k] = g.arrivals(i, k);
    auto split = solve_energy_split(g.network.nodes[i], budgets[i], lam, g.network.services);
    for (std::size_t k = 0; k < kk; ++k)
      sol.units[k][i] = static_cast<int>(queueing::activated_units(split[k], g.network.nodes[i].unit_energy));
  }

  SplitEvaluator eval(g, opt.offload);
  double total = 0.0;
  for (std::size_t k = 0; k < kk; ++k) total += eval.value(k, sol.units[k]);

  // every way to spread each node's usable units over the services
  std::vector<std::vector<std::vector<int>>> options(n);
  for (std::size_t i = 0; i < n; ++i) {
    int units = usable_units(g.network.nodes[i], budgets[i]);
    std::vector<int> cur(kk, 0);
    auto rec = [&](auto& self, std::size_t k, int left) -> void {
      if (k + 1 == kk) {
        cur[k] = left;
        options[i].push_back(cur);
        return;
      }
      for (int v = left; v >= 0; --v) {
        cur[k] = v;
        self(self, k + 1, left - v);
      }
    };
    rec(rec, 0, units);
  }
  auto joint_value = [&](const std::vector<std::vector<int>>& units) {
    double v = 0.0;
    for (std::size_t k = 0; k < kk; ++k) v += eval.value(k, units[k]);
    return v;
  };
  auto better = [&](double v) { return v > total + 1e-12 * (1.0 + total); };

  double joint = 1.0;
  for (const auto& o : options) joint *= static_cast<double>(o.size());
  if (kk > 1 && joint <= static_cast<double>(opt.exhaustive_limit)) {
    std::vector<std::size_t> pick(n, 0);
    auto units = sol.units;
    while (true) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < kk; ++k) units[k][i] = options[i][pick[i]][k];
      double v = joint_value(units);
      if (better(v)) {
        total = v;
        sol.units = units;
      }
      std::size_t i = 0;
      while (i < n && ++pick[i] == options[i].size()) pick[i++] = 0;
      if (i == n) break;
    }
  } else if (kk > 1) {
    // block coordinate ascent: each node in turn takes its best split given
    // the others; exhaustive per node, so single-node thresholds are crossed.
    // Nodes with many splits instead move units between services in
    // halving step sizes.
    sol.certified = false;
    std::size_t evaluations = 0;
    bool exhausted = false;
    auto try_units = [&](const std::vector<std::vector<int>>& units) {
      if (opt.max_evaluations > 0 && evaluations++ >= opt.max_evaluations) {
        exhausted = true;
        return false;
      }
      double v = joint_value(units);
      if (!better(v)) return false;
      total = v;
      sol.units = units;
      return true;
    };
    for (int round = 0; round < opt.max_rounds && !exhausted; ++round) {
      const double start = total;
      for (std::size_t i = 0; i < n && !exhausted; ++i) {
        if (options[i].size() <= opt.node_option_limit) {
          auto units = sol.units;
          for (const auto& o : options[i]) {
            for (std::size_t k = 0; k < kk; ++k) units[k][i] = o[k];
            try_units(units);
            if (exhausted) break;
          }
          continue;
        }
        int step = std::max(1, usable_units(g.network.nodes[i], budgets[i]) / 4);
        while (step >= 1 && !exhausted) {
          bool moved = false;
          for (std::size_t a = 0; a < kk && !exhausted; ++a)
            for (std::size_t b = 0; b < kk && !exhausted; ++b) {
              if (a == b || sol.units[a][i] < step) continue;
              auto units = sol.units;
              units[a][i] -= step;
              units[b][i] += step;
              moved = try_units(units) || moved;
            }
          if (!moved) step /= 2;
        }
      }
      if (!exhausted && total - start < opt.tolerance) {
        sol.certified = true;
        break;
      }
    }
  }
  for (std::size_t k = 0; k < kk; ++k) sol.offload.push_back(eval.slice(k, sol.units[k]).alpha);
  return sol;
}

}  // namespace detail

/// Total reward of an agreement.
inline double welfare(const SlicingAgreement& agr) {
  double w = 0.0;
  for (double r : agr.rewards) w += r;
  return w;
}

/// Node rewards implied by an agreement: each node keeps rho for every own
/// request offloaded within the deadline.
inline std::vector<double> contribution_rewards(const GameInstance& g, const std::vector<OffloadMatrix>& offload) {
  std::vector<double> r(g.node_count(), 0.0);
  for (std::size_t k = 0; k < g.service_count(); ++k)
    for (std::size_t i = 0; i < r.size(); ++i)
      r[i] += node_service_reward(offload[k], i, g.arrivals(i, k), g.network.services[k].reward_rho);
  return r;
}

/// Welfare-maximising slicing agreement for fixed per-node energy budgets.
/// Nodes are partitioned into coalition groups (components of the neighbor
/// graph), each solved independently. Small groups enumerate every joint unit
/// split; larger ones start from every node's isolated optimal split and let
/// each node in turn switch to its best split given the others (for nodes
/// with more than node_option_limit splits, the best reachable by moving
/// units between services in halving steps). The
/// agreement is flagged non-certified when a group hits max_rounds or the
/// evaluation budget before a round gains less than the tolerance.
inline SlicingAgreement solve_social_welfare(const GameInstance& g, std::span<const double> budgets,
                                             const WelfareOptions& opt = {}) {
  const std::size_t n = g.node_count();
  const std::size_t kk = g.service_count();
  if (budgets.size() != n || g.arrivals.rows() != n || g.arrivals.cols() != kk)
    throw DimensionMismatch("budgets or arrivals do not match the network");
  SlicingAgreement agr;
  agr.energy = EnergyDistribution(n, kk);
  agr.offload.assign(kk, OffloadMatrix::square(n));
  for (const auto& group : coalition_groups(g.network)) {
    GameInstance sub = sub_instance(g, group);
    std::vector<double> b(group.size());
    for (std::size_t a = 0; a < group.size(); ++a) b[a] = budgets[group[a]];
    auto sol = detail::solve_group(sub, b, opt);
    agr.certified = agr.certified && sol.certified;
    for (std::size_t k = 0; k < kk; ++k)
      for (std::size_t a = 0; a < group.size(); ++a) {
        agr.energy(group[a], k) = sol.units[k][a] * g.network.nodes[group[a]].unit_energy;
        for (std::size_t c = 0; c < group.size(); ++c) agr.offload[k](group[a], group[c]) = sol.offload[k](a, c);
      }
  }
  agr.rewards = contribution_rewards(g, agr.offload);

  SlotState state;
  state.battery.assign(budgets.begin(), budgets.end());
  state.arrivals = g.arrivals;
  auto v = validate_agreement(g.network, state, agr);
  if (!v.empty()) throw std::logic_error("welfare solver produced an infeasible agreement: " + v.front().describe());
  return agr;
}

}  // namespace fogslice::game
