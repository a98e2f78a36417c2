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

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "fogslice/model.hpp"
#include "fogslice/queueing.hpp"

namespace fogslice::game {

/// One service's slice: the energy every node contributes to it plus the
/// data needed to evaluate offloading among the contributors.
struct SliceInstance {
  std::size_t service = 0;
  double theta = 0.1;
  std::vector<double> energy;       // e^(k)_i
  std::vector<double> unit_energy;  // e_{i,unit}
  std::vector<double> unit_rate;    // w_i for this service
  std::vector<double> arrivals;     // lambda^(k)_i
  std::vector<std::vector<std::size_t>> neighbors;
  Matrix rtt;
  queueing::Activation activation = queueing::Activation::whole_units;

  std::size_t size() const { return energy.size(); }

  double capacity(std::size_t i) const {
    return unit_rate[i] * queueing::activated_units(energy[i], unit_energy[i], activation);
  }

  std::vector<double> capacities() const {
    std::vector<double> c(size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = capacity(i);
    return c;
  }

  /// supp(c^(k)): nodes contributing energy.
  std::vector<std::size_t> support() const {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < size(); ++i)
      if (energy[i] > 0.0) s.push_back(i);
    return s;
  }

  bool may_forward(std::size_t i, std::size_t m) const {
    if (i == m) return true;
    for (auto j : neighbors[i])
      if (j == m) return true;
    return false;
  }

  void check() const {
    std::size_t n = size();
    if (unit_energy.size() != n || unit_rate.size() != n || arrivals.size() != n ||
        neighbors.size() != n || rtt.rows() != n || rtt.cols() != n)
      throw DimensionMismatch("slice instance dimensions disagree");
  }
};

/// Per-slot game: fixed arrivals, energy budgets decided elsewhere.
struct GameInstance {
  NetworkSpec network;
  Matrix arrivals;  // node x service

  std::size_t node_count() const { return network.node_count(); }
  std::size_t service_count() const { return network.service_count(); }

  SliceInstance slice(std::size_t k, const std::vector<double>& energy) const {
    const std::size_t n = node_count();
    SliceInstance s;
    s.service = k;
    s.theta = network.services[k].deadline_theta;
    s.energy = energy;
    s.unit_energy.resize(n);
    s.unit_rate.resize(n);
    s.arrivals.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      s.unit_energy[i] = network.nodes[i].unit_energy;
      s.unit_rate[i] = network.unit_rate(i, k);
      s.arrivals[i] = arrivals(i, k);
    }
    s.neighbors = network.neighbors;
    s.rtt = network.rtt;
    return s;
  }

  SliceInstance slice(std::size_t k, const EnergyDistribution& energy) const {
    std::vector<double> e(node_count());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = energy(i, k);
    return slice(k, e);
  }
};

/// Offload matrix rejected by slice_worth.
class InfeasibleOffload : public std::runtime_error {
 public:
  explicit InfeasibleOffload(std::vector<Violation> v)
      : std::runtime_error(summary(v)), violations_(std::move(v)) {}

  const std::vector<Violation>& violations() const { return violations_; }

 private:
  static std::string summary(const std::vector<Violation>& v) {
    std::string s = "infeasible offload:";
    for (const auto& x : v) s += " " + x.describe() + ";";
    return s;
  }
  std::vector<Violation> violations_;
};

/// Constraint violations of an offload matrix within one slice (capacity,
/// offload sum, neighbor structure, deadline). Empty iff feasible.
inline std::vector<Violation> slice_violations(const SliceInstance& slice, const OffloadMatrix& alpha) {
  slice.check();
  const std::size_t n = slice.size();
  if (alpha.rows() != n || alpha.cols() != n) throw DimensionMismatch("offload matrix is not n x n");
  const double tol = kFeasibilityTol;
  const std::size_t k = slice.service;
  std::vector<Violation> out;
  auto cap = slice.capacities();
  bool structural_ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < n; ++m) {
      double a = alpha(i, m);
      if (a < -tol) {
        out.push_back({Constraint::negative_fraction, i, k, -a});
        structural_ok = false;
      }
      if (a > tol && !slice.may_forward(i, m)) {
        out.push_back({Constraint::non_neighbor, i, k, a});
        structural_ok = false;
      }
    }
    double s = alpha.row_sum(i);
    if (s > 1.0 + tol) out.push_back({Constraint::offload_sum, i, k, s - 1.0});
  }
  std::vector<bool> saturated(n, false);
  for (std::size_t m = 0; m < n; ++m) {
    double load = queueing::destination_load(alpha, slice.arrivals, m);
    if (load > cap[m] + tol) out.push_back({Constraint::compute_capacity, m, k, load - cap[m]});
    if (cap[m] - load <= kSaturationTol) saturated[m] = true;
  }
  if (!structural_ok) return out;
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha.row_sum(i) <= tol || slice.arrivals[i] <= 0.0) continue;
    bool blocked = false;
    for (std::size_t m = 0; m < n; ++m)
      if (alpha(i, m) > 0.0 && saturated[m]) blocked = true;
    if (blocked) {
      out.push_back({Constraint::deadline, i, k, kInf});
      continue;
    }
    double pi = queueing::mean_response_time(i, alpha, cap, slice.arrivals, slice.rtt);
    if (pi > slice.theta + tol) out.push_back({Constraint::deadline, i, k, pi - slice.theta});
  }
  return out;
}

/// Requests per second offloaded by node i: lambda_i * sum_m alpha_im.
inline double served_requests(const SliceInstance& slice, const OffloadMatrix& alpha, std::size_t i) {
  return alpha.row_sum(i) * slice.arrivals[i];
}

/// Worth of the slice: total reward of its members, rho * sum_i lambda_i * sum_m alpha_im.
/// Throws InfeasibleOffload when the offload matrix breaks a constraint.
inline double slice_worth(const SliceInstance& slice, const OffloadMatrix& alpha, double rho) {
  auto v = slice_violations(slice, alpha);
  if (!v.empty()) throw InfeasibleOffload(std::move(v));
  double total = 0.0;
  for (std::size_t i = 0; i < slice.size(); ++i) total += served_requests(slice, alpha, i);
  return rho * total;
}

}  // namespace fogslice::game
