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

// Slot-by-slot simulation: policies choose energy budgets, the orchestrator
// solves the slicing game per coalition group, batteries move on.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fogslice/agent.hpp"
#include "fogslice/belief.hpp"
#include "fogslice/config.hpp"
#include "fogslice/env.hpp"
#include "fogslice/game/welfare.hpp"
#include "fogslice/model.hpp"
#include "fogslice/report.hpp"
#include "fogslice/topology.hpp"

namespace fogslice::engine {

using json = nlohmann::json;

enum class PolicyKind { no_coop, nearest_neighbor, radius_coop, myopic, bpomdp };

struct Policy {
  PolicyKind kind = PolicyKind::radius_coop;
  int depth = 2;  // bpomdp lookahead

  std::string name() const {
    switch (kind) {
      case PolicyKind::no_coop: return "no_coop";
      case PolicyKind::nearest_neighbor: return "nearest_neighbor";
      case PolicyKind::radius_coop: return "radius_coop";
      case PolicyKind::myopic: return "myopic";
      case PolicyKind::bpomdp: return "bpomdp:" + std::to_string(depth);
    }
    return "?";
  }

  bool learns() const { return kind == PolicyKind::myopic || kind == PolicyKind::bpomdp; }
  int lookahead() const { return kind == PolicyKind::myopic ? 0 : depth; }

  /// "no_coop", "nearest_neighbor", "radius_coop", "myopic", "bpomdp" or
  /// "bpomdp:<depth>". A bare "bpomdp" takes `default_depth`.
  static Policy parse(const std::string& s, int default_depth = 2) {
    if (s == "no_coop") return {PolicyKind::no_coop, 0};
    if (s == "nearest_neighbor") return {PolicyKind::nearest_neighbor, 0};
    if (s == "radius_coop") return {PolicyKind::radius_coop, 0};
    if (s == "myopic") return {PolicyKind::myopic, 0};
    if (s == "bpomdp") return {PolicyKind::bpomdp, default_depth};
    if (s.rfind("bpomdp:", 0) == 0) {
      std::string d = s.substr(7);
      if (!d.empty() && d.find_first_not_of("0123456789") == std::string::npos && d.size() < 6)
        return {PolicyKind::bpomdp, std::stoi(d)};
    }
    throw ConfigError("unknown policy '" + s + "'");
  }
};

/// Node positions for an episode: the CSV sites, or a synthetic layout
/// seeded from the topology seed if given, else from the episode seed.
inline std::vector<Position> positions(const config::Config& cfg, std::uint64_t seed) {
  if (cfg.topology.source == config::TopologyConfig::Source::csv) {
    std::vector<Position> out;
    for (const auto& s : topology::load_positions(cfg.topology.path, cfg.topology.coordinates)) out.push_back(s.position);
    if (out.empty()) throw ConfigError("topology file has no sites");
    return out;
  }
  std::uint64_t s = cfg.topology.seed ? *cfg.topology.seed : seed ^ 0x9e3779b97f4a7c15ULL;
  if (cfg.topology.pair_offset > 0.0)
    return topology::synth_pairs(cfg.topology.count, cfg.topology.profile, cfg.topology.pair_offset, s);
  return topology::synth_topology(cfg.topology.count, cfg.topology.profile, s);
}

/// Network seen by the game under a policy: neighbor sets from the policy's
/// rule (none for no_coop, k nearest, or radius for the others).
inline NetworkSpec network(const config::Config& cfg, const std::vector<Position>& pos, const Policy& policy) {
  NetworkSpec net;
  net.services = cfg.services;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    FogNodeSpec n = cfg.node;
    n.id = i;
    n.position = pos[i];
    net.nodes.push_back(n);
  }
  topology::Topology topo;
  if (policy.kind == PolicyKind::no_coop) {
    topo = topology::build_neighbors(pos, topology::NeighborRule::nearest(0), cfg.rtt);
  } else if (policy.kind == PolicyKind::nearest_neighbor) {
    topo = topology::build_neighbors(pos, topology::NeighborRule::nearest(cfg.k), cfg.rtt);
  } else {
    topo = topology::build_neighbors(pos, topology::NeighborRule::within(cfg.radius), cfg.rtt);
  }
  net.neighbors = topo.neighbors;
  net.rtt = topo.rtt;
  return net;
}

inline env::EnvModel environment(const config::Config& cfg, std::size_t n) {
  env::EnvModel m;
  for (std::size_t i = 0; i < n; ++i) {
    m.harvest.push_back(cfg.harvest[i % cfg.harvest.size()]);
    m.arrival.push_back(cfg.arrival);
    m.battery_cap.push_back(cfg.node.battery_cap);
  }
  m.harvest_correlation = cfg.harvest_correlation;
  m.validate();
  return m;
}

/// Units short of (negative) or beyond (positive) what node j needs to serve
/// all its own arrivals locally within the deadline, clamped to max_units.
inline double surplus_capability(const NetworkSpec& net, const SlicingAgreement& agr, const Matrix& arrivals,
                                 std::size_t j) {
  const auto& node = net.nodes[j];
  double units = 0.0, needed = 0.0;
  for (std::size_t k = 0; k < net.service_count(); ++k) {
    units += std::floor(agr.energy(j, k) / node.unit_energy + 1e-9);
    double lam = arrivals(j, k);
    if (lam > 0.0) needed += (lam + 1.0 / net.services[k].deadline_theta) / net.unit_rate(j, k);
  }
  double m = node.max_units;
  return std::clamp(units - needed, -m, m);
}

namespace detail {

inline std::size_t max_level(const env::MarkovChainSpec& c) {
  return static_cast<std::size_t>(std::max_element(c.levels.begin(), c.levels.end()) - c.levels.begin());
}

inline void pin_backlogged(const env::EnvModel& m, env::EnvState& s) {
  for (std::size_t i = 0; i < m.node_count(); ++i)
    for (std::size_t k = 0; k < m.service_count(); ++k) s.arrival[i][k] = max_level(m.arrival[i][k]);
}

}  // namespace detail

/// One episode. Deterministic in (config, policy, seed): the environment
/// draws come from one stream in a fixed order independent of the policy.
inline report::ExperimentReport run_episode(const config::Config& cfg, const Policy& policy, std::uint64_t seed) {
  auto pos = positions(cfg, seed);
  const std::size_t n = pos.size();
  const std::size_t kk = cfg.services.size();
  NetworkSpec net = network(cfg, pos, policy);
  env::EnvModel em = environment(cfg, n);

  Rng rng(seed);
  env::EnvState s;
  for (std::size_t i = 0; i < n; ++i) {
    auto st = em.harvest[i].stationary();
    s.harvest.push_back(rng.categorical(st));
    s.arrival.emplace_back();
    for (std::size_t k = 0; k < kk; ++k) s.arrival[i].push_back(rng.categorical(em.arrival[i][k].stationary()));
    s.battery.push_back(cfg.initial_battery);
  }
  if (cfg.backlogged) detail::pin_backlogged(em, s);

  std::vector<agent::FogAgent> agents;
  if (policy.learns()) {
    for (std::size_t i = 0; i < n; ++i) {
      agent::AgentSpec spec;
      spec.node = net.nodes[i];
      spec.services = cfg.services;
      spec.harvest = em.harvest[i];
      spec.arrival = em.arrival[i];
      if (cfg.backlogged)
        for (auto& c : spec.arrival) c = env::constant_chain(c.levels[detail::max_level(c)]);
      spec.types = belief::TypeSpace::three_level(cfg.node.max_units, cfg.agent.type_surplus);
      spec.neighbors = net.neighbors[i].size();
      spec.gamma = cfg.gamma;
      spec.depth = policy.lookahead();
      spec.action_levels = cfg.agent.action_levels;
      spec.prior_count = cfg.agent.prior;
      agents.emplace_back(std::move(spec));
    }
  }

  report::ExperimentReport rep;
  rep.config = cfg.raw;
  rep.policy = policy.name();
  rep.seed = seed;
  rep.gamma = cfg.gamma;
  for (const auto& sv : cfg.services) rep.services.push_back(sv.name);
  rep.node_count = n;

  for (std::size_t t = 0; t < cfg.slots; ++t) {
    Matrix lam = em.arrival_matrix(s);
    std::vector<double> budgets(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (policy.learns()) {
        // the agent's arrival levels: backlogged chains collapse to one level
        std::vector<std::size_t> arr = cfg.backlogged ? std::vector<std::size_t>(kk, 0) : s.arrival[i];
        budgets[i] = agents[i].decide(s.battery[i], arr).units * cfg.node.unit_energy;
      } else {
        budgets[i] = s.battery[i];
      }
    }
    game::GameInstance g{net, lam};
    SlicingAgreement agr = game::solve_social_welfare(g, budgets, cfg.solver);

    env::EnvAction act;
    for (std::size_t i = 0; i < n; ++i) {
      double c = 0.0;
      for (std::size_t k = 0; k < kk; ++k) c += agr.energy(i, k);
      act.consumed.push_back(std::min(c, s.battery[i]));
    }
    env::EnvState next = env::sample_step(em, s, act, rng);
    if (cfg.backlogged) detail::pin_backlogged(em, next);

    report::SlotRecord rec;
    rec.slot = t;
    rec.certified = agr.certified;
    for (std::size_t i = 0; i < n; ++i) {
      report::NodeSlot ns;
      ns.battery = s.battery[i];
      ns.harvested = em.harvested(next, i);
      ns.consumed = act.consumed[i];
      ns.budget = budgets[i];
      for (std::size_t k = 0; k < kk; ++k) {
        double share = agr.offload[k].row_sum(i);
        ns.arrival.push_back(lam(i, k));
        ns.share.push_back(share);
        ns.offloaded.push_back(share * lam(i, k));
      }
      ns.reward = agr.rewards[i];
      rec.nodes.push_back(std::move(ns));
    }
    rep.records.push_back(std::move(rec));

    for (std::size_t i = 0; i < agents.size(); ++i) {
      std::size_t ctx = agents[i].context();
      const auto& c = net.neighbors[i];
      for (std::size_t j = 0; j < c.size(); ++j)
        agents[i].observe_neighbor(j, surplus_capability(net, agr, lam, c[j]), ctx);
      agents[i].observe_battery(s.battery[i], act.consumed[i], next.battery[i], cfg.node.battery_cap);
    }
    s = std::move(next);
  }

  if (!agents.empty()) {
    json b = json::array();
    for (const auto& a : agents) {
      json node;
      node["harvest_belief"] = a.harvest_belief();
      json types = json::array();
      const auto& tb = a.type_belief();
      for (std::size_t j = 0; j < a.spec().neighbors; ++j) {
        json per_state = json::array();
        for (std::size_t st = 0; st < tb.state_count(); ++st) per_state.push_back(tb.mean(j, st));
        types.push_back(per_state);
      }
      node["type_means"] = types;
      b.push_back(node);
    }
    rep.beliefs = b;
  }
  return rep;
}

struct SweepRow {
  json value;
  std::string policy;
  std::size_t reps = 0;
  double mean_offloaded = 0.0;  // total deadline-met offload per episode
  double stderr_offloaded = 0.0;
  double mean_reward = 0.0;  // network discounted reward per episode
  double stderr_reward = 0.0;
};

struct SweepResult {
  std::string axis;
  std::vector<report::ExperimentReport> reports;  // value-major, then policy, then replication
  std::vector<SweepRow> summary;
};

inline std::pair<double, double> mean_stderr(const std::vector<double>& x) {
  if (x.empty()) return {0.0, 0.0};
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  if (x.size() < 2) return {m, 0.0};
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return {m, std::sqrt(ss / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()))};
}

/// One episode per (axis value, policy, replication) with seed
/// base_seed + replication, so every value and policy sees the same
/// environment streams. Runs on config::thread_count() workers; results do
/// not depend on the thread count.
inline SweepResult run_sweep(const json& base, const std::string& axis, const std::vector<json>& values,
                             std::size_t reps, const std::vector<Policy>& policies, std::uint64_t base_seed = 1) {
  SweepResult out;
  out.axis = axis;
  {
    json probe = base;
    config::set_key(probe, axis, json());  // validates the key
  }
  std::vector<config::Config> cfgs;
  for (const auto& v : values) {
    json j = base;
    config::set_key(j, axis, v);
    cfgs.push_back(config::parse(j));
  }
  const std::size_t per_value = policies.size() * reps;
  const std::size_t total = values.size() * per_value;
  out.reports.resize(total);
  std::vector<std::exception_ptr> errors(total);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t t; (t = next.fetch_add(1)) < total;) {
      std::size_t v = t / per_value, p = (t % per_value) / reps, r = t % reps;
      try {
        out.reports[t] = run_episode(cfgs[v], policies[p], base_seed + r);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  std::size_t threads = std::min(config::thread_count(), std::max<std::size_t>(total, 1));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (std::size_t v = 0; v < values.size(); ++v)
    for (std::size_t p = 0; p < policies.size(); ++p) {
      std::vector<double> off, rew;
      for (std::size_t r = 0; r < reps; ++r) {
        auto a = report::aggregate(out.reports[v * per_value + p * reps + r]);
        off.push_back(a.total_offloaded);
        double d = 0.0;
        for (double x : a.discounted_reward) d += x;
        rew.push_back(d);
      }
      SweepRow row;
      row.value = values[v];
      row.policy = policies[p].name();
      row.reps = reps;
      std::tie(row.mean_offloaded, row.stderr_offloaded) = mean_stderr(off);
      std::tie(row.mean_reward, row.stderr_reward) = mean_stderr(rew);
      out.summary.push_back(row);
    }
  return out;
}

}  // namespace fogslice::engine
