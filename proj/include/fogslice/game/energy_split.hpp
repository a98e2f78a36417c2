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
#include <span>
#include <vector>

#include "fogslice/model.hpp"
#include "fogslice/queueing.hpp"

namespace fogslice::game {

/// Processing units a node can activate from `budget` energy.
inline int usable_units(const FogNodeSpec& node, double budget) {
  if (budget <= 0.0) return 0;
  int p = static_cast<int>(queueing::activated_units(budget, node.unit_energy));
  return std::min(p, node.max_units);
}

/// Reward a node earns alone from `units` activated units of service k.
inline double isolated_service_reward(const FogNodeSpec& node, const ServiceTypeSpec& service, int units,
                                      double lambda) {
  if (lambda <= 0.0 || units <= 0) return 0.0;
  double cap = service.unit_rate * node.rate_multiplier * units;
  return service.reward_rho * lambda *
         queueing::optimal_local_fraction_for_capacity(cap, lambda, service.deadline_theta);
}

/// Splits a node's budget over services to maximise its reward when acting
/// alone. Returns energy per service in multiples of the unit energy; energy
/// that cannot activate a whole unit (or exceeds max_units) is left unspent.
/// Exact dynamic program over units; among equal-reward splits the most
/// balanced one wins, then the one favouring lower service indices.
inline std::vector<double> solve_energy_split(const FogNodeSpec& node, double budget,
                                              std::span<const double> arrivals,
                                              const std::vector<ServiceTypeSpec>& services) {
  const std::size_t kk = services.size();
  if (arrivals.size() != kk) throw DimensionMismatch("one arrival rate per service expected");
  std::vector<double> out(kk, 0.0);
  if (kk == 0) return out;
  const int units = usable_units(node, budget);

  struct Cell {
    double value = -1.0;
    double spread = 0.0;  // sum of squared unit counts
    int take = 0;
  };
  // best[k][u]: services k.. sharing exactly u units
  std::vector<std::vector<Cell>> best(kk + 1, std::vector<Cell>(units + 1));
  best[kk][0] = {0.0, 0.0, 0};
  for (std::size_t k = kk; k-- > 0;) {
    for (int u = 0; u <= units; ++u) {
      Cell& c = best[k][u];
      for (int p = u; p >= 0; --p) {
        const Cell& rest = best[k + 1][u - p];
        if (rest.value < 0.0) continue;
        double v = rest.value + isolated_service_reward(node, services[k], p, arrivals[k]);
        double s = rest.spread + static_cast<double>(p) * p;
        double tol = 1e-12 * std::max(1.0, std::fabs(v));
        if (v > c.value + tol || (std::fabs(v - c.value) <= tol && s < c.spread)) c = {v, s, p};
      }
    }
  }
  int u = units;
  for (std::size_t k = 0; k < kk; ++k) {
    int p = best[k][u].take;
    out[k] = p * node.unit_energy;
    u -= p;
  }
  return out;
}

/// Reward of a node acting alone under a given split.
inline double isolated_reward(const FogNodeSpec& node, std::span<const double> energy,
                              std::span<const double> arrivals, const std::vector<ServiceTypeSpec>& services) {
  double r = 0.0;
  for (std::size_t k = 0; k < services.size(); ++k)
    r += isolated_service_reward(node, services[k],
                                 static_cast<int>(queueing::activated_units(energy[k], node.unit_energy)),
                                 arrivals[k]);
  return r;
}

}  // namespace fogslice::game
