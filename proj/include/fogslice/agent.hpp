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

// Energy-budget agent for one fog node. The node sees its battery and
// arrival levels; the harvest level behind the last battery change is hidden
// when the battery saturates, so it keeps a belief over it. Neighbors enter
// through Dirichlet beliefs over their surplus-capability types.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <tuple>
#include <vector>

#include "fogslice/belief.hpp"
#include "fogslice/env.hpp"
#include "fogslice/game/energy_split.hpp"
#include "fogslice/model.hpp"

namespace fogslice::agent {

struct AgentSpec {
  FogNodeSpec node;
  std::vector<ServiceTypeSpec> services;
  env::MarkovChainSpec harvest;
  std::vector<env::MarkovChainSpec> arrival;  // per service
  belief::TypeSpace types;
  std::size_t neighbors = 0;
  double gamma = 0.9;
  int depth = 2;
  std::size_t action_levels = 0;  // budgets considered per decision; 0 = every whole unit
  double prior_count = 1.0;
};

/// Distribution of the summed neighbor surplus, as (units, probability).
using SurplusDistribution = std::vector<std::pair<double, double>>;

namespace detail {

// filter over the hidden harvest index; the observation is the next battery
struct HarvestFilter {
  using Observation = double;
  const env::MarkovChainSpec& chain;
  double battery, consumed, cap;

  std::size_t state_count() const { return chain.size(); }
  double transition(std::size_t, std::size_t prev, std::size_t next) const { return chain.prob(prev, next); }
  double observation(std::size_t, std::size_t next, double obs) const {
    double b = env::battery_step(battery, chain.levels[next], consumed, cap);
    return std::fabs(b - obs) <= 1e-9 * std::max(1.0, cap) ? 1.0 : 0.0;
  }
};

}  // namespace detail

class FogAgent {
 public:
  explicit FogAgent(AgentSpec spec)
      : spec_(std::move(spec)),
        harvest_belief_(spec_.harvest.stationary()),
        types_(std::max<std::size_t>(spec_.neighbors, 1), spec_.harvest.size(), std::max<std::size_t>(spec_.types.size(), 1),
               spec_.prior_count) {
    spec_.harvest.validate("agent harvest chain");
    if (spec_.arrival.size() != spec_.services.size()) throw ConfigError("agent needs one arrival chain per service");
    for (const auto& c : spec_.arrival) c.validate("agent arrival chain");
    if (spec_.depth < 0) throw ConfigError("lookahead depth must be nonnegative");
    if (spec_.neighbors > 0) spec_.types.validate(spec_.node.max_units);
  }

  const AgentSpec& spec() const { return spec_; }
  const belief::Belief& harvest_belief() const { return harvest_belief_; }
  const belief::TypeBelief& type_belief() const { return types_; }
  std::size_t impossible_observations() const { return impossible_; }

  /// Context that conditions neighbor types: the most likely harvest index.
  std::size_t context(const belief::Belief& b) const {
    return static_cast<std::size_t>(std::max_element(b.begin(), b.end()) - b.begin());
  }
  std::size_t context() const { return context(harvest_belief_); }

  SurplusDistribution surplus(std::size_t ctx) const {
    std::map<double, double> dist{{0.0, 1.0}};
    if (spec_.neighbors == 0) return {{0.0, 1.0}};
    for (std::size_t j = 0; j < spec_.neighbors; ++j) {
      auto mean = types_.mean(j, ctx);
      std::map<double, double> next;
      for (const auto& [v, p] : dist)
        for (std::size_t y = 0; y < mean.size(); ++y) next[v + spec_.types.types[y].level] += p * mean[y];
      dist = std::move(next);
    }
    return {dist.begin(), dist.end()};
  }

  /// Best isolated reward with `units` processing units at the given arrival
  /// levels.
  double unit_reward(const std::vector<std::size_t>& arr, int units) const {
    units = std::clamp(units, 0, spec_.node.max_units);
    auto key = std::make_pair(arr, units);
    if (auto it = reward_memo_.find(key); it != reward_memo_.end()) return it->second;
    std::vector<double> lam(arr.size());
    for (std::size_t k = 0; k < arr.size(); ++k) lam[k] = spec_.arrival[k].levels[arr[k]];
    double budget = units * spec_.node.unit_energy;
    auto split = game::solve_energy_split(spec_.node, budget, lam, spec_.services);
    double r = game::isolated_reward(spec_.node, split, lam, spec_.services);
    reward_memo_.emplace(std::move(key), r);
    return r;
  }

  /// Expected slot reward of spending `units` own units: the neighbors'
  /// summed surplus adds to (or, in deficit, draws from) the units working
  /// on this node's load.
  double expected_reward(const std::vector<std::size_t>& arr, int units, const SurplusDistribution& s) const {
    double r = 0.0;
    for (const auto& [v, p] : s) {
      if (p == 0.0) continue;
      int eff = static_cast<int>(std::floor(std::max(0.0, units + v) + 1e-9));
      r += p * unit_reward(arr, eff);
    }
    return r;
  }
  double expected_reward(const std::vector<std::size_t>& arr, int units) const {
    return expected_reward(arr, units, surplus(context()));
  }

  /// Candidate unit counts for a battery level, ascending.
  std::vector<int> actions(double battery) const {
    int top = std::min(static_cast<int>(std::floor(battery / spec_.node.unit_energy + 1e-9)), spec_.node.max_units);
    top = std::max(top, 0);
    std::vector<int> out;
    if (spec_.action_levels == 0 || static_cast<std::size_t>(top) + 1 <= spec_.action_levels) {
      for (int u = 0; u <= top; ++u) out.push_back(u);
      return out;
    }
    const std::size_t m = std::max<std::size_t>(spec_.action_levels, 2);
    for (std::size_t j = 0; j < m; ++j) {
      int u = static_cast<int>(std::lround(static_cast<double>(top) * static_cast<double>(j) / static_cast<double>(m - 1)));
      if (out.empty() || out.back() != u) out.push_back(u);
    }
    return out;
  }

  struct Decision {
    int units = 0;
    double value = 0.0;
  };

  /// Depth-limited lookahead from the agent's current belief. Ties go to
  /// fewer units.
  Decision decide(double battery, const std::vector<std::size_t>& arr, int depth) const {
    Planner p(*this);
    return p.best(battery, harvest_belief_, arr, depth);
  }
  Decision decide(double battery, const std::vector<std::size_t>& arr) const {
    return decide(battery, arr, spec_.depth);
  }

  /// Bayes update of the hidden harvest index from the battery seen after
  /// spending `consumed` energy. A battery the model cannot produce leaves
  /// the prediction in place and is counted.
  void observe_battery(double battery_before, double consumed, double battery_after, double cap) {
    detail::HarvestFilter f{spec_.harvest, battery_before, consumed, cap};
    auto r = belief::update_env_belief(f, harvest_belief_, 0, battery_after);
    if (r.impossible) {
      ++impossible_;
      belief::Belief pred(spec_.harvest.size(), 0.0);
      for (std::size_t h = 0; h < pred.size(); ++h)
        for (std::size_t p = 0; p < pred.size(); ++p) pred[h] += spec_.harvest.prob(p, h) * harvest_belief_[p];
      harvest_belief_ = pred;
    } else {
      harvest_belief_ = std::move(r.belief);
    }
  }

  /// Records neighbor j's realized surplus capability in the current context.
  bool observe_neighbor(std::size_t j, double capability, std::size_t ctx) {
    return belief::update_type_belief(types_, spec_.types, j, capability, ctx);
  }

 private:
  class Planner {
   public:
    explicit Planner(const FogAgent& a) : a_(a), cap_(a.spec_.node.battery_cap) {}

    Decision best(double battery, const belief::Belief& hb, const std::vector<std::size_t>& arr, int depth) {
      Decision d{0, 0.0};
      bool first = true;
      for (int u : a_.actions(battery)) {
        double q = this->q(battery, hb, arr, u, depth);
        if (first || q > d.value + 1e-12 * std::max(1.0, std::fabs(d.value))) d = {u, q};
        first = false;
      }
      return d;
    }

   private:
    const SurplusDistribution& surplus(std::size_t ctx) {
      auto it = surplus_.find(ctx);
      if (it == surplus_.end()) it = surplus_.emplace(ctx, a_.surplus(ctx)).first;
      return it->second;
    }

    double q(double battery, const belief::Belief& hb, const std::vector<std::size_t>& arr, int units, int depth) {
      double r = a_.expected_reward(arr, units, surplus(a_.context(hb)));
      if (depth == 0 || a_.spec_.gamma == 0.0) return r;
      const auto& hc = a_.spec_.harvest;
      const double consumed = units * a_.spec_.node.unit_energy;
      // predicted harvest, grouped by the battery it produces
      std::map<double, belief::Belief> by_battery;
      for (std::size_t h = 0; h < hc.size(); ++h) {
        double p = 0.0;
        for (std::size_t prev = 0; prev < hc.size(); ++prev) p += hc.prob(prev, h) * hb[prev];
        if (p <= 0.0) continue;
        double b = env::battery_step(battery, hc.levels[h], consumed, cap_);
        auto& post = by_battery[b];
        if (post.empty()) post.assign(hc.size(), 0.0);
        post[h] += p;
      }
      double future = 0.0;
      std::vector<std::size_t> next_arr(arr.size(), 0);
      for (auto& [b, post] : by_battery) {
        double pb = 0.0;
        for (double v : post) pb += v;
        belief::Belief norm = post;
        for (double& v : norm) v /= pb;
        // odometer over next arrival levels
        while (true) {
          double pa = 1.0;
          for (std::size_t k = 0; k < arr.size() && pa > 0.0; ++k) pa *= a_.spec_.arrival[k].prob(arr[k], next_arr[k]);
          if (pa > 0.0) future += pb * pa * value(b, norm, next_arr, depth - 1);
          std::size_t k = arr.size();
          while (k-- > 0) {
            if (++next_arr[k] < a_.spec_.arrival[k].size()) break;
            next_arr[k] = 0;
          }
          if (k == static_cast<std::size_t>(-1)) break;
        }
      }
      return r + a_.spec_.gamma * future;
    }

    double value(double battery, const belief::Belief& hb, const std::vector<std::size_t>& arr, int depth) {
      auto key = std::make_tuple(depth, battery, hb, arr);
      if (auto it = memo_.find(key); it != memo_.end()) return it->second;
      double v = best(battery, hb, arr, depth).value;
      memo_.emplace(std::move(key), v);
      return v;
    }

    const FogAgent& a_;
    double cap_;
    std::map<std::size_t, SurplusDistribution> surplus_;
    std::map<std::tuple<int, double, belief::Belief, std::vector<std::size_t>>, double> memo_;
  };

  AgentSpec spec_;
  belief::Belief harvest_belief_;
  belief::TypeBelief types_;
  std::size_t impossible_ = 0;
  mutable std::map<std::pair<std::vector<std::size_t>, int>, double> reward_memo_;
};

}  // namespace fogslice::agent
