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

// Markov environment: per-node harvest chains, per-node per-service arrival
// chains and battery dynamics. The harvest index of the state at slot t is
// the level harvested during slot t-1, already credited to the battery.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fogslice/model.hpp"
#include "fogslice/types.hpp"

namespace fogslice::env {

struct MarkovChainSpec {
  std::vector<double> levels;
  Matrix transition;  // row-stochastic, levels x levels

  std::size_t size() const { return levels.size(); }
  double max_level() const { return *std::max_element(levels.begin(), levels.end()); }
  double prob(std::size_t from, std::size_t to) const { return transition(from, to); }

  void validate(const std::string& what = "chain") const {
    if (levels.empty()) throw ConfigError(what + ": at least one level required");
    if (transition.rows() != levels.size() || transition.cols() != levels.size())
      throw ConfigError(what + ": transition matrix must be " + std::to_string(levels.size()) + "x" +
                        std::to_string(levels.size()));
    for (std::size_t r = 0; r < size(); ++r) {
      double s = 0.0;
      for (double v : transition.row(r)) {
        if (!(v >= 0.0)) throw ConfigError(what + ": negative transition probability");
        s += v;
      }
      if (std::fabs(s - 1.0) > 1e-9) throw ConfigError(what + ": row " + std::to_string(r) + " does not sum to 1");
    }
  }

  std::size_t sample_next(std::size_t from, Rng& rng) const { return rng.categorical(transition.row(from)); }

  /// Stationary distribution by power iteration from the uniform vector.
  std::vector<double> stationary(int iterations = 10000, double tol = 1e-14) const {
    const std::size_t n = size();
    std::vector<double> p(n, 1.0 / static_cast<double>(n)), q(n);
    for (int it = 0; it < iterations; ++it) {
      std::fill(q.begin(), q.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) q[j] += p[i] * transition(i, j);
      // average with the previous iterate so periodic chains settle too
      double diff = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        double v = 0.5 * (p[j] + q[j]);
        diff += std::fabs(v - p[j]);
        p[j] = v;
      }
      if (diff < tol) break;
    }
    return p;
  }
};

/// Always the same level.
inline MarkovChainSpec constant_chain(double value) { return {{value}, Matrix(1, 1, 1.0)}; }

/// Independent draws, uniform over `count` evenly spaced levels in [lo, hi].
/// With integer endpoints and count = hi - lo + 1 the levels are integers.
inline MarkovChainSpec uniform_chain(double lo, double hi, std::size_t count) {
  if (count == 0) throw ConfigError("uniform chain needs at least one level");
  MarkovChainSpec c;
  for (std::size_t j = 0; j < count; ++j)
    c.levels.push_back(count == 1 ? hi : lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(count - 1));
  c.transition = Matrix(count, count, 1.0 / static_cast<double>(count));
  return c;
}

/// Harvest preset: uniform between 0 and `max` energy units, quantized to
/// `count` levels rounded to whole units.
inline MarkovChainSpec uniform_harvest(double max, std::size_t count = 5) {
  auto c = uniform_chain(0.0, max, count);
  for (double& v : c.levels) v = std::round(v);
  return c;
}

/// Two-level chain that stays at its current level with `persistence`.
inline MarkovChainSpec bursty_chain(double low, double high, double persistence) {
  if (!(persistence >= 0.0 && persistence <= 1.0)) throw ConfigError("persistence must lie in [0, 1]");
  return {{low, high}, Matrix::from_rows({{persistence, 1.0 - persistence}, {1.0 - persistence, persistence}})};
}

class CausalityViolation : public std::domain_error {
 public:
  CausalityViolation(double consumed, double battery)
      : std::domain_error("consumed energy " + std::to_string(consumed) + " exceeds battery " + std::to_string(battery)) {}
};

/// Battery at the next slot: min(cap, battery + harvested_prev - consumed).
inline double battery_step(double battery, double harvested_prev, double consumed, double cap) {
  if (consumed < 0.0) throw std::invalid_argument("consumed energy must be nonnegative");
  if (consumed > battery + kFeasibilityTol) throw CausalityViolation(consumed, battery);
  return std::clamp(battery + harvested_prev - consumed, 0.0, cap);
}

enum class ObservationModel {
  exact_local,  // a node sees its own components only
  correlated,   // and infers the rest from the joint chain model
};

struct EnvState {
  std::vector<std::size_t> harvest;               // per node
  std::vector<std::vector<std::size_t>> arrival;  // [node][service]
  std::vector<double> battery;                    // per node

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

/// What node i sees at the start of a slot: its battery and arrivals.
struct LocalObservation {
  std::vector<std::size_t> arrival;
  double battery = 0.0;

  friend bool operator==(const LocalObservation&, const LocalObservation&) = default;
};

/// The part of an action that moves the environment: energy consumed per node.
struct EnvAction {
  std::vector<double> consumed;
};

struct EnvModel {
  std::vector<MarkovChainSpec> harvest;               // per node
  std::vector<std::vector<MarkovChainSpec>> arrival;  // [node][service]
  std::vector<double> battery_cap;
  // Common-shock coupling of harvests: with this probability node j > 0
  // copies node 0's next harvest index instead of drawing its own.
  double harvest_correlation = 0.0;
  ObservationModel observation = ObservationModel::exact_local;

  std::size_t node_count() const { return harvest.size(); }
  std::size_t service_count() const { return arrival.empty() ? 0 : arrival.front().size(); }

  void validate() const {
    const std::size_t n = node_count();
    if (arrival.size() != n || battery_cap.size() != n) throw ConfigError("environment: one chain set per node expected");
    for (std::size_t i = 0; i < n; ++i) {
      harvest[i].validate("harvest chain of node " + std::to_string(i));
      for (double v : harvest[i].levels)
        if (v < 0.0) throw ConfigError("harvest levels must be nonnegative");
      if (arrival[i].size() != service_count()) throw ConfigError("environment: ragged arrival chains");
      for (std::size_t k = 0; k < arrival[i].size(); ++k) {
        arrival[i][k].validate("arrival chain of node " + std::to_string(i) + " service " + std::to_string(k));
        for (double v : arrival[i][k].levels)
          if (v < 0.0) throw ConfigError("arrival levels must be nonnegative");
      }
      if (!(battery_cap[i] > 0.0)) throw ConfigError("battery capacity must be positive");
    }
    if (harvest_correlation < 0.0 || harvest_correlation > 1.0) throw ConfigError("harvest correlation must lie in [0, 1]");
    if (harvest_correlation > 0.0)
      for (std::size_t i = 1; i < n; ++i)
        if (harvest[i].size() != harvest[0].size())
          throw ConfigError("correlated harvest chains must have the same number of levels");
  }

  double harvested(const EnvState& s, std::size_t i) const { return harvest[i].levels[s.harvest[i]]; }
  double arrival_rate(const EnvState& s, std::size_t i, std::size_t k) const {
    return arrival[i][k].levels[s.arrival[i][k]];
  }

  Matrix arrival_matrix(const EnvState& s) const {
    Matrix m(node_count(), service_count());
    for (std::size_t i = 0; i < node_count(); ++i)
      for (std::size_t k = 0; k < service_count(); ++k) m(i, k) = arrival_rate(s, i, k);
    return m;
  }

  bool valid(const EnvState& s) const {
    const std::size_t n = node_count();
    if (s.harvest.size() != n || s.arrival.size() != n || s.battery.size() != n) return false;
    for (std::size_t i = 0; i < n; ++i) {
      if (s.harvest[i] >= harvest[i].size()) return false;
      if (s.arrival[i].size() != service_count()) return false;
      for (std::size_t k = 0; k < service_count(); ++k)
        if (s.arrival[i][k] >= arrival[i][k].size()) return false;
      if (s.battery[i] < -kFeasibilityTol || s.battery[i] > battery_cap[i] + kFeasibilityTol) return false;
    }
    return true;
  }

  LocalObservation project(const EnvState& s, std::size_t i) const { return {s.arrival[i], s.battery[i]}; }
};

namespace detail {

inline double harvest_prob(const EnvModel& m, const std::vector<std::size_t>& from, const std::vector<std::size_t>& to) {
  double p = m.harvest[0].prob(from[0], to[0]);
  const double c = m.harvest_correlation;
  for (std::size_t j = 1; j < m.node_count(); ++j) {
    double own = m.harvest[j].prob(from[j], to[j]);
    p *= c * (to[j] == to[0] ? 1.0 : 0.0) + (1.0 - c) * own;
  }
  return p;
}

inline std::vector<double> next_battery(const EnvModel& m, const EnvState& prev, const std::vector<std::size_t>& harvest,
                                        const EnvAction& a) {
  std::vector<double> b(m.node_count());
  for (std::size_t i = 0; i < b.size(); ++i)
    b[i] = battery_step(prev.battery[i], m.harvest[i].levels[harvest[i]], a.consumed[i], m.battery_cap[i]);
  return b;
}

inline bool causal(const EnvState& prev, const EnvAction& a) {
  for (std::size_t i = 0; i < prev.battery.size(); ++i)
    if (a.consumed[i] < 0.0 || a.consumed[i] > prev.battery[i] + kFeasibilityTol) return false;
  return true;
}

}  // namespace detail

/// T(next | prev, action): product of the chain transitions, with the
/// battery moved deterministically by battery_step using the harvest of
/// `next`. Zero for unreachable states, including any action that
/// overdraws a battery.
inline double transition_prob(const EnvModel& m, const EnvState& next, const EnvState& prev, const EnvAction& a) {
  if (a.consumed.size() != m.node_count()) throw DimensionMismatch("one consumption per node expected");
  if (!m.valid(next) || !m.valid(prev) || !detail::causal(prev, a)) return 0.0;
  auto b = detail::next_battery(m, prev, next.harvest, a);
  for (std::size_t i = 0; i < b.size(); ++i)
    if (std::fabs(b[i] - next.battery[i]) > kFeasibilityTol) return 0.0;
  double p = detail::harvest_prob(m, prev.harvest, next.harvest);
  for (std::size_t i = 0; i < m.node_count(); ++i)
    for (std::size_t k = 0; k < m.service_count(); ++k)
      p *= m.arrival[i][k].prob(prev.arrival[i][k], next.arrival[i][k]);
  return p;
}

/// Every successor of `prev` with positive probability, in lexicographic
/// order of (harvest indices, arrival indices). Exponential in the node
/// count; meant for small models.
inline void for_each_successor(const EnvModel& m, const EnvState& prev, const EnvAction& a,
                               const std::function<void(const EnvState&, double)>& f) {
  if (!detail::causal(prev, a)) return;
  const std::size_t n = m.node_count(), kk = m.service_count();
  EnvState s;
  s.harvest.assign(n, 0);
  s.arrival.assign(n, std::vector<std::size_t>(kk, 0));
  // odometer over harvest then arrival indices
  std::vector<std::size_t*> digits;
  std::vector<std::size_t> radix;
  for (std::size_t i = 0; i < n; ++i) {
    digits.push_back(&s.harvest[i]);
    radix.push_back(m.harvest[i].size());
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < kk; ++k) {
      digits.push_back(&s.arrival[i][k]);
      radix.push_back(m.arrival[i][k].size());
    }
  while (true) {
    s.battery = detail::next_battery(m, prev, s.harvest, a);
    double p = transition_prob(m, s, prev, a);
    if (p > 0.0) f(s, p);
    std::size_t d = digits.size();
    while (d-- > 0) {
      if (++*digits[d] < radix[d]) break;
      *digits[d] = 0;
    }
    if (d == static_cast<std::size_t>(-1)) break;
  }
}

/// Probability of node i's observation given the next state. Exact-local:
/// 1 if `obs` is the projection of `next` onto node i, else 0. Correlated:
/// the joint transition mass of `next` normalised over every successor of
/// `prev` that node i cannot tell apart from it, i.e. the posterior weight
/// of the unobserved components given what node i sees.
inline double observation_prob(const EnvModel& m, std::size_t i, const LocalObservation& obs, const EnvState& next,
                               const EnvState& prev, const EnvAction& a) {
  if (i >= m.node_count()) throw DimensionMismatch("observing node out of range");
  if (obs.arrival.size() != m.service_count()) throw DimensionMismatch("observation has wrong service count");
  if (!(m.project(next, i) == obs)) return 0.0;
  if (m.observation == ObservationModel::exact_local) return 1.0;
  double joint = transition_prob(m, next, prev, a);
  if (joint == 0.0) return 0.0;
  double total = 0.0;
  for_each_successor(m, prev, a, [&](const EnvState& s, double p) {
    if (m.project(s, i) == obs) total += p;
  });
  return joint / total;
}

/// Draws the next state. Random draws happen in a fixed order: harvest of
/// node 0, then for every other node a coupling draw (only when correlated)
/// and its own harvest draw, then arrivals node by node, service by service.
inline EnvState sample_step(const EnvModel& m, const EnvState& s, const EnvAction& a, Rng& rng) {
  const std::size_t n = m.node_count();
  if (a.consumed.size() != n) throw DimensionMismatch("one consumption per node expected");
  if (!detail::causal(s, a)) {
    for (std::size_t i = 0; i < n; ++i)
      if (a.consumed[i] > s.battery[i] + kFeasibilityTol) throw CausalityViolation(a.consumed[i], s.battery[i]);
    throw std::invalid_argument("consumed energy must be nonnegative");
  }
  EnvState next;
  next.harvest.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    bool copy = i > 0 && m.harvest_correlation > 0.0 && rng.uniform() < m.harvest_correlation;
    std::size_t own = m.harvest[i].sample_next(s.harvest[i], rng);
    next.harvest[i] = copy ? next.harvest[0] : own;
  }
  next.arrival.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < m.service_count(); ++k)
      next.arrival[i].push_back(m.arrival[i][k].sample_next(s.arrival[i][k], rng));
  next.battery = detail::next_battery(m, s, next.harvest, a);
  return next;
}

/// Slot state handed to the game.
inline SlotState slot_state(const EnvModel& m, const EnvState& s) {
  SlotState out;
  out.battery = s.battery;
  out.arrivals = m.arrival_matrix(s);
  for (std::size_t i = 0; i < m.node_count(); ++i) out.harvested_prev.push_back(m.harvested(s, i));
  return out;
}

}  // namespace fogslice::env
