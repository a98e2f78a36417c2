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

// Belief machinery: Bayes filtering over hidden environment states,
// Dirichlet beliefs over neighbor types, and depth-limited Bellman lookahead
// over discrete POMDPs.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fogslice/types.hpp"

namespace fogslice::belief {

class ImpossibleObservation : public std::runtime_error {
 public:
  ImpossibleObservation() : std::runtime_error("observation has zero likelihood under the model") {}
};

/// Discrete hidden state space with transition T(next | prev, a) and
/// observation likelihood O(o | next, a).
template <class M>
concept FilterModel = requires(const M& m, std::size_t s, std::size_t a, const typename M::Observation& o) {
  typename M::Observation;
  { m.state_count() } -> std::convertible_to<std::size_t>;
  { m.transition(a, s, s) } -> std::convertible_to<double>;
  { m.observation(a, s, o) } -> std::convertible_to<double>;
};

/// A filter model with finitely many actions and observations, per-state
/// rewards and per-action energy (for tie-breaking).
template <class M>
concept PomdpModel = FilterModel<M> && requires(const M& m, std::size_t s, std::size_t a) {
  { m.action_count() } -> std::convertible_to<std::size_t>;
  { m.observation_count() } -> std::convertible_to<std::size_t>;
  { m.reward(a, s) } -> std::convertible_to<double>;
  { m.energy(a) } -> std::convertible_to<double>;
};

using Belief = std::vector<double>;

struct BeliefUpdate {
  Belief belief;
  bool impossible = false;  // zero likelihood: belief returned unchanged
};

/// b'(u) ∝ O(o | u, a) Σ_prev T(u | prev, a) b(prev).
template <FilterModel M>
BeliefUpdate update_env_belief(const M& model, const Belief& b, std::size_t action,
                               const typename M::Observation& obs) {
  const std::size_t n = model.state_count();
  if (b.size() != n) throw DimensionMismatch("belief size does not match state count");
  Belief next(n, 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    double like = model.observation(action, u, obs);
    if (like == 0.0) continue;
    double pred = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      if (b[p] != 0.0) pred += model.transition(action, p, u) * b[p];
    next[u] = like * pred;
  }
  double total = std::accumulate(next.begin(), next.end(), 0.0);
  if (!(total > 0.0)) return {b, true};
  for (double& v : next) v /= total;
  return {std::move(next), false};
}

/// Throwing variant for callers that treat a model mismatch as an error.
template <FilterModel M>
Belief update_env_belief_or_throw(const M& model, const Belief& b, std::size_t action,
                                  const typename M::Observation& obs) {
  auto r = update_env_belief(model, b, action, obs);
  if (r.impossible) throw ImpossibleObservation();
  return std::move(r.belief);
}

/// Dense tabular POMDP.
struct TabularPomdp {
  using Observation = std::size_t;

  std::vector<Matrix> transitions;   // per action: (prev, next)
  std::vector<Matrix> observations;  // per action: (next, observation)
  Matrix rewards;                    // (action, state)
  std::vector<double> energies;      // per action; empty means all zero

  std::size_t state_count() const { return rewards.cols(); }
  std::size_t action_count() const { return rewards.rows(); }
  std::size_t observation_count() const { return observations.empty() ? 0 : observations.front().cols(); }
  double transition(std::size_t a, std::size_t prev, std::size_t next) const { return transitions[a](prev, next); }
  double observation(std::size_t a, std::size_t next, std::size_t o) const { return observations[a](next, o); }
  double reward(std::size_t a, std::size_t s) const { return rewards(a, s); }
  double energy(std::size_t a) const { return energies.empty() ? 0.0 : energies[a]; }

  void validate() const {
    const std::size_t a = action_count(), s = state_count(), o = observation_count();
    if (a == 0 || s == 0 || o == 0) throw ConfigError("POMDP needs states, actions and observations");
    if (transitions.size() != a || observations.size() != a) throw ConfigError("one matrix per action expected");
    if (!energies.empty() && energies.size() != a) throw ConfigError("one energy per action expected");
    for (std::size_t k = 0; k < a; ++k) {
      if (transitions[k].rows() != s || transitions[k].cols() != s || observations[k].rows() != s ||
          observations[k].cols() != o)
        throw ConfigError("POMDP matrix has wrong shape");
      for (std::size_t r = 0; r < s; ++r) {
        for (const Matrix* m : {&transitions[k], &observations[k]}) {
          double sum = 0.0;
          for (double v : m->row(r)) {
            if (v < 0.0) throw ConfigError("negative probability");
            sum += v;
          }
          if (std::fabs(sum - 1.0) > 1e-9) throw ConfigError("row does not sum to 1");
        }
      }
    }
  }

  /// Fully observed MDP: observation = state.
  static TabularPomdp fully_observed(std::vector<Matrix> transitions, Matrix rewards) {
    const std::size_t s = rewards.cols();
    Matrix eye = Matrix::square(s);
    for (std::size_t i = 0; i < s; ++i) eye(i, i) = 1.0;
    TabularPomdp m{std::move(transitions), {}, std::move(rewards), {}};
    m.observations.assign(m.rewards.rows(), eye);
    return m;
  }
};

template <PomdpModel M>
double expected_slot_reward(const M& model, const Belief& b, std::size_t action) {
  double r = 0.0;
  for (std::size_t s = 0; s < b.size(); ++s)
    if (b[s] != 0.0) r += b[s] * model.reward(action, s);
  return r;
}

namespace detail {

// true if `a` should replace the incumbent `best` (ties: lower energy, then
// lower index, which is the incumbent since actions are scanned in order)
inline bool better(double qa, double ea, double qbest, double ebest) {
  double tol = 1e-12 * std::max(1.0, std::fabs(qbest));
  if (qa > qbest + tol) return true;
  if (qa < qbest - tol) return false;
  return ea < ebest;
}

template <PomdpModel M>
class Lookahead {
 public:
  Lookahead(const M& model, double gamma) : m_(model), gamma_(gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("discount must lie in [0, 1]");
  }

  double q(const Belief& b, std::size_t a, int depth) {
    double r = expected_slot_reward(m_, b, a);
    if (depth == 0 || gamma_ == 0.0) return r;
    const std::size_t n = m_.state_count();
    Belief pred(n, 0.0);
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t p = 0; p < n; ++p)
        if (b[p] != 0.0) pred[u] += m_.transition(a, p, u) * b[p];
    double future = 0.0;
    for (std::size_t o = 0; o < m_.observation_count(); ++o) {
      double po = 0.0;
      for (std::size_t u = 0; u < n; ++u) po += m_.observation(a, u, o) * pred[u];
      if (po <= 0.0) continue;
      auto next = update_env_belief(m_, b, a, o);
      future += po * value(next.belief, depth - 1);
    }
    return r + gamma_ * future;
  }

  double value(const Belief& b, int depth) {
    auto key = std::make_pair(depth, b);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    double v = q(b, best(b, depth), depth);
    memo_.emplace(std::move(key), v);
    return v;
  }

  std::size_t best(const Belief& b, int depth) {
    std::size_t arg = 0;
    double qbest = -kInf;
    for (std::size_t a = 0; a < m_.action_count(); ++a) {
      double qa = q(b, a, depth);
      if (a == 0 || better(qa, m_.energy(a), qbest, m_.energy(arg))) {
        arg = a;
        qbest = qa;
      }
    }
    return arg;
  }

 private:
  const M& m_;
  double gamma_;
  std::map<std::pair<int, Belief>, double> memo_;
};

}  // namespace detail

/// Value of acting optimally for depth + 1 slots from belief b: depth 0 is
/// the best expected one-slot reward.
template <PomdpModel M>
double bellman_value(const M& model, const Belief& b, int depth, double gamma = 0.9) {
  if (depth < 0) throw std::invalid_argument("depth must be nonnegative");
  if (b.size() != model.state_count()) throw DimensionMismatch("belief size does not match state count");
  detail::Lookahead<M> la(model, gamma);
  return la.value(b, depth);
}

/// Argmax of the depth-limited Q values; ties go to lower energy, then to
/// the lower action index.
template <PomdpModel M>
std::size_t select_action(const M& model, const Belief& b, int depth, double gamma = 0.9) {
  if (depth < 0) throw std::invalid_argument("depth must be nonnegative");
  if (b.size() != model.state_count()) throw DimensionMismatch("belief size does not match state count");
  detail::Lookahead<M> la(model, gamma);
  return la.best(b, depth);
}

// Types ---------------------------------------------------------------------

/// A neighbor type: net surplus capability in processing units, observed
/// within [lo, hi], predicted as `level`.
struct NodeType {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.0;
};

struct TypeSpace {
  std::vector<NodeType> types;

  std::size_t size() const { return types.size(); }

  void validate(double max_units) const {
    if (types.empty()) throw ConfigError("type space must be nonempty");
    for (const auto& t : types)
      if (!(t.lo <= t.hi) || std::fabs(t.level) > max_units || std::fabs(t.lo) > max_units ||
          std::fabs(t.hi) > max_units)
        throw ConfigError("type " + t.name + " has capability outside [-max_units, max_units]");
  }

  /// Normalised weights of the types whose range contains `capability`
  /// (shared edges split the weight). Empty if no type fits.
  std::vector<double> likelihood(double capability) const {
    std::vector<double> w(size(), 0.0);
    double total = 0.0;
    for (std::size_t y = 0; y < size(); ++y)
      if (capability >= types[y].lo - 1e-12 && capability <= types[y].hi + 1e-12) {
        w[y] = 1.0;
        total += 1.0;
      }
    if (total == 0.0) return {};
    for (double& v : w) v /= total;
    return w;
  }

  /// deficit / neutral / surplus around +-`surplus` units.
  static TypeSpace three_level(double max_units, double surplus) {
    double h = 0.5 * surplus;
    return {{{"deficit", -max_units, -h, -surplus}, {"neutral", -h, h, 0.0}, {"surplus", h, max_units, surplus}}};
  }
};

/// Dirichlet pseudo-counts per (neighbor, state, type).
class TypeBelief {
 public:
  TypeBelief(std::size_t neighbors, std::size_t states, std::size_t types, double prior = 1.0)
      : states_(states), types_(types), counts_(neighbors * states * types, prior) {
    if (!(prior > 0.0)) throw ConfigError("Dirichlet prior counts must be positive");
    if (types == 0 || states == 0) throw ConfigError("type belief needs states and types");
  }

  std::size_t neighbor_count() const { return states_ == 0 ? 0 : counts_.size() / (states_ * types_); }
  std::size_t state_count() const { return states_; }
  std::size_t type_count() const { return types_; }

  double count(std::size_t j, std::size_t s, std::size_t y) const { return counts_[index(j, s, y)]; }

  /// Adds `weights` (one per type) to the cell; false and unchanged if the
  /// weights are empty or all zero.
  bool observe(std::size_t j, std::size_t s, const std::vector<double>& weights) {
    if (weights.empty()) return false;
    if (weights.size() != types_) throw DimensionMismatch("one weight per type expected");
    double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) return false;
    for (std::size_t y = 0; y < types_; ++y) counts_[index(j, s, y)] += weights[y];
    return true;
  }

  std::vector<double> mean(std::size_t j, std::size_t s) const {
    std::vector<double> m(types_);
    double total = 0.0;
    for (std::size_t y = 0; y < types_; ++y) total += m[y] = counts_[index(j, s, y)];
    for (double& v : m) v /= total;
    return m;
  }

 private:
  std::size_t index(std::size_t j, std::size_t s, std::size_t y) const {
    if (s >= states_ || y >= types_ || (j * states_ + s) * types_ + y >= counts_.size())
      throw std::out_of_range("type belief cell out of range");
    return (j * states_ + s) * types_ + y;
  }

  std::size_t states_, types_;
  std::vector<double> counts_;
};

/// Conjugate update from one realized outcome: the observed capability of
/// `neighbor` in `state`. Returns false (counts unchanged) when no type is
/// consistent with it.
inline bool update_type_belief(TypeBelief& counts, const TypeSpace& space, std::size_t neighbor, double capability,
                               std::size_t state) {
  return counts.observe(neighbor, state, space.likelihood(capability));
}

inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw DimensionMismatch("distributions differ in size");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += std::fabs(p[i] - q[i]);
  return 0.5 * d;
}

}  // namespace fogslice::belief
