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
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fogslice/queueing.hpp"
#include "fogslice/types.hpp"

namespace fogslice {

struct ServiceTypeSpec {
  std::size_t id = 0;
  std::string name;
  double deadline_theta = 0.1;  // seconds
  double reward_rho = 1.0;      // reward per offloaded request
  double unit_rate = 10.0;      // requests/s per activated unit

  void validate() const {
    if (!(deadline_theta > 0.0)) throw ConfigError("service " + name + ": deadline must be > 0");
    if (!(reward_rho >= 0.0)) throw ConfigError("service " + name + ": reward must be >= 0");
    if (!(unit_rate > 0.0)) throw ConfigError("service " + name + ": unit rate must be > 0");
  }
};

struct Position {
  double x = 0.0;  // meters
  double y = 0.0;

  friend bool operator==(const Position&, const Position&) = default;
};

inline double distance(const Position& a, const Position& b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct FogNodeSpec {
  std::size_t id = 0;
  int max_units = 100;
  double unit_energy = 1.0;
  double battery_cap = 100.0;
  Position position;
  double rate_multiplier = 1.0;  // scales every service's unit rate at this node

  double max_energy() const { return max_units * unit_energy; }

  void validate() const {
    if (max_units < 1) throw ConfigError("node " + std::to_string(id) + ": max_units must be >= 1");
    if (!(unit_energy > 0.0)) throw ConfigError("node " + std::to_string(id) + ": unit_energy must be > 0");
    if (!(battery_cap > 0.0)) throw ConfigError("node " + std::to_string(id) + ": battery_cap must be > 0");
    if (!(rate_multiplier > 0.0)) throw ConfigError("node " + std::to_string(id) + ": rate multiplier must be > 0");
  }
};

/// Static description of the network: services, nodes, sender-side neighbor
/// sets and round-trip times (seconds, infinite where no link exists).
struct NetworkSpec {
  std::vector<ServiceTypeSpec> services;
  std::vector<FogNodeSpec> nodes;
  std::vector<std::vector<std::size_t>> neighbors;
  Matrix rtt;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t service_count() const { return services.size(); }

  double unit_rate(std::size_t node, std::size_t service) const {
    return services[service].unit_rate * nodes[node].rate_multiplier;
  }

  bool is_neighbor(std::size_t i, std::size_t m) const {
    const auto& c = neighbors[i];
    return std::find(c.begin(), c.end(), m) != c.end();
  }
};

/// Per-slot dynamic state seen by the slicing game.
struct SlotState {
  std::vector<double> battery;         // per node, energy units
  Matrix arrivals;                     // node x service, requests/s
  std::vector<double> harvested_prev;  // per node, energy harvested last slot
};

/// Energy units allotted per node (rows) and service (columns).
struct EnergyDistribution {
  Matrix units;

  EnergyDistribution() = default;
  EnergyDistribution(std::size_t nodes, std::size_t services) : units(nodes, services) {}

  double operator()(std::size_t i, std::size_t k) const { return units(i, k); }
  double& operator()(std::size_t i, std::size_t k) { return units(i, k); }
  double node_total(std::size_t i) const { return units.row_sum(i); }

  friend bool operator==(const EnergyDistribution&, const EnergyDistribution&) = default;
};

/// Square matrix of offload fractions for one service; (i, i) is processed locally.
using OffloadMatrix = Matrix;

struct SlicingAgreement {
  EnergyDistribution energy;
  std::vector<OffloadMatrix> offload;  // one per service
  std::vector<double> rewards;         // per node, summed over services
  std::vector<double> allocation;      // negotiated split of the welfare; empty means rewards
  bool certified = true;               // false when the solver stopped on its round limit
};

/// Reward node i earns for service k: rho * lambda_i * sum_m alpha_im.
inline double node_service_reward(const OffloadMatrix& alpha, std::size_t i, double lambda,
                                  double rho) {
  return rho * alpha.row_sum(i) * lambda;
}

enum class Constraint {
  compute_capacity,  // aggregate load at a node exceeds w * p
  offload_sum,       // offload fractions sum above one
  negative_fraction,
  non_neighbor,      // forwarding to a node outside C_i
  energy_budget,     // sum of slices exceeds the battery
  negative_energy,
  unit_limit,        // more processing units activated than installed
  deadline,          // mean response time above theta, or a saturated queue
  reward_accounting,
};

inline const char* to_string(Constraint c) {
  switch (c) {
    case Constraint::compute_capacity: return "compute_capacity";
    case Constraint::offload_sum: return "offload_sum";
    case Constraint::negative_fraction: return "negative_fraction";
    case Constraint::non_neighbor: return "non_neighbor";
    case Constraint::energy_budget: return "energy_budget";
    case Constraint::negative_energy: return "negative_energy";
    case Constraint::unit_limit: return "unit_limit";
    case Constraint::deadline: return "deadline";
    case Constraint::reward_accounting: return "reward_accounting";
  }
  return "unknown";
}

struct Violation {
  Constraint constraint;
  std::size_t node;
  std::optional<std::size_t> service;
  double excess;  // amount by which the constraint is exceeded

  std::string describe() const {
    std::ostringstream os;
    os << to_string(constraint) << " at node " << node;
    if (service) os << ", service " << *service;
    os << " (excess " << excess << ")";
    return os.str();
  }

  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Service capacities w_m * p_m for one service under an energy distribution.
inline std::vector<double> service_capacities(const NetworkSpec& spec, const EnergyDistribution& energy,
                                              std::size_t k) {
  std::vector<double> cap(spec.node_count());
  for (std::size_t m = 0; m < cap.size(); ++m)
    cap[m] = spec.unit_rate(m, k) *
             queueing::activated_units(energy(m, k), spec.nodes[m].unit_energy);
  return cap;
}

/// Every violated constraint of the agreement, in node-major order per
/// constraint family. Empty iff the agreement is feasible for this slot.
inline std::vector<Violation> validate_agreement(const NetworkSpec& spec, const SlotState& state,
                                                 const SlicingAgreement& agr) {
  const std::size_t n = spec.node_count();
  const std::size_t kk = spec.service_count();
  if (state.battery.size() != n || state.arrivals.rows() != n || state.arrivals.cols() != kk ||
      agr.energy.units.rows() != n || agr.energy.units.cols() != kk || agr.offload.size() != kk ||
      spec.neighbors.size() != n || spec.rtt.rows() != n || spec.rtt.cols() != n)
    throw DimensionMismatch("agreement dimensions do not match the network");
  for (const auto& a : agr.offload)
    if (a.rows() != n || a.cols() != n) throw DimensionMismatch("offload matrix is not n x n");
  if (!agr.rewards.empty() && agr.rewards.size() != n)
    throw DimensionMismatch("reward vector size differs from node count");

  std::vector<Violation> out;
  const double tol = kFeasibilityTol;

  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    double units = 0.0;
    for (std::size_t k = 0; k < kk; ++k) {
      double e = agr.energy(i, k);
      if (e < -tol) out.push_back({Constraint::negative_energy, i, k, -e});
      total += e;
      units += queueing::activated_units(e, spec.nodes[i].unit_energy);
    }
    if (total > state.battery[i] + tol)
      out.push_back({Constraint::energy_budget, i, std::nullopt, total - state.battery[i]});
    if (units > spec.nodes[i].max_units + tol)
      out.push_back({Constraint::unit_limit, i, std::nullopt, units - spec.nodes[i].max_units});
  }

  for (std::size_t k = 0; k < kk; ++k) {
    const OffloadMatrix& alpha = agr.offload[k];
    std::vector<double> lambda(n);
    for (std::size_t i = 0; i < n; ++i) lambda[i] = state.arrivals(i, k);
    auto cap = service_capacities(spec, agr.energy, k);

    bool structural_ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t m = 0; m < n; ++m) {
        double a = alpha(i, m);
        if (a < -tol) {
          out.push_back({Constraint::negative_fraction, i, k, -a});
          structural_ok = false;
        }
        if (m != i && a > tol && !spec.is_neighbor(i, m)) {
          out.push_back({Constraint::non_neighbor, i, k, a});
          structural_ok = false;
        }
      }
      double s = alpha.row_sum(i);
      if (s > 1.0 + tol) out.push_back({Constraint::offload_sum, i, k, s - 1.0});
    }

    std::vector<bool> saturated(n, false);
    for (std::size_t m = 0; m < n; ++m) {
      double load = queueing::destination_load(alpha, lambda, m);
      if (load > cap[m] + tol) out.push_back({Constraint::compute_capacity, m, k, load - cap[m]});
      if (cap[m] - load <= kSaturationTol) saturated[m] = true;
    }

    if (!structural_ok) continue;
    const double theta = spec.services[k].deadline_theta;
    for (std::size_t i = 0; i < n; ++i) {
      if (alpha.row_sum(i) <= tol || lambda[i] <= 0.0) continue;
      bool blocked = false;
      for (std::size_t m = 0; m < n; ++m)
        if (alpha(i, m) > 0.0 && saturated[m]) blocked = true;
      if (blocked) {
        out.push_back({Constraint::deadline, i, k, kInf});
        continue;
      }
      double pi = queueing::mean_response_time(i, alpha, cap, lambda, spec.rtt);
      if (pi > theta + tol) out.push_back({Constraint::deadline, i, k, pi - theta});
    }
  }

  if (!agr.rewards.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      double r = 0.0;
      for (std::size_t k = 0; k < kk; ++k)
        r += node_service_reward(agr.offload[k], i, state.arrivals(i, k), spec.services[k].reward_rho);
      if (std::fabs(r - agr.rewards[i]) > 1e-9 * std::max(1.0, std::fabs(r)))
        out.push_back({Constraint::reward_accounting, i, std::nullopt, agr.rewards[i] - r});
    }
  }
  return out;
}

}  // namespace fogslice
