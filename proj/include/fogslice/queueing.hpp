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
#include <span>
#include <stdexcept>
#include <string>

#include "fogslice/types.hpp"

/// M/M/1 response times for local processing and offload forwarding.
namespace fogslice::queueing {

/// The queue at `destination` has no spare capacity for the offered load.
class Unstable : public std::domain_error {
 public:
  explicit Unstable(std::size_t destination)
      : std::domain_error("queue at node " + std::to_string(destination) + " is saturated"),
        destination_(destination) {}

  std::size_t destination() const { return destination_; }

 private:
  std::size_t destination_;
};

/// Zero arrival rate: the optimal fraction is undefined.
class DegenerateArrival : public std::domain_error {
 public:
  DegenerateArrival() : std::domain_error("arrival rate is zero") {}
};

enum class Activation {
  whole_units,  // p = floor(e / e_unit)
  continuous,   // p = e / e_unit, used only for oracle comparisons
};

inline double activated_units(double energy, double unit_energy,
                              Activation mode = Activation::whole_units) {
  if (energy <= 0.0) return 0.0;
  double p = energy / unit_energy;
  if (mode == Activation::continuous) return p;
  return std::floor(p + 1e-9);
}

/// Mean sojourn time of a single M/M/1 queue serving `alpha * lambda`.
inline double response_time_local(double alpha, double lambda, double service_rate,
                                  std::size_t node = 0) {
  if (alpha < 0.0 || alpha > 1.0 + kFeasibilityTol)
    throw std::invalid_argument("alpha must lie in [0, 1]");
  if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
  if (service_rate <= 0.0) throw Unstable(node);
  double spare = service_rate - alpha * lambda;
  if (spare <= kSaturationTol) throw Unstable(node);
  return 1.0 / spare;
}

/// Aggregate load offered to `destination` by every sender.
inline double destination_load(const Matrix& offload, std::span<const double> arrivals,
                               std::size_t destination) {
  double load = 0.0;
  for (std::size_t j = 0; j < offload.rows(); ++j) load += offload(j, destination) * arrivals[j];
  return load;
}

namespace detail {

inline void check_dims(std::size_t i, const Matrix& offload, std::span<const double> capacity,
                       std::span<const double> arrivals, const Matrix& rtt) {
  std::size_t n = offload.rows();
  if (offload.cols() != n || capacity.size() != n || arrivals.size() != n || rtt.rows() != n ||
      rtt.cols() != n || i >= n)
    throw DimensionMismatch("offload/capacity/arrival/rtt dimensions disagree");
}

// Sum over destinations of alpha_im * (tau_im + 1 / (cap_m - load_m)).
inline double weighted_delay(std::size_t i, const Matrix& offload,
                             std::span<const double> capacity, std::span<const double> arrivals,
                             const Matrix& rtt) {
  double total = 0.0;
  for (std::size_t m = 0; m < offload.cols(); ++m) {
    double a = offload(i, m);
    if (a <= 0.0) continue;
    double spare = capacity[m] - destination_load(offload, arrivals, m);
    if (spare <= kSaturationTol) throw Unstable(m);
    double tau = m == i ? 0.0 : rtt(i, m);
    total += a * (tau + 1.0 / spare);
  }
  return total;
}

}  // namespace detail

/// Response time of node i's type-k workload under offload forwarding, as the
/// alpha-weighted sum over destinations of round trip plus M/M/1 sojourn.
/// `capacity[m]` is w_m * p_m and `arrivals[j]` is lambda_j for this service.
inline double response_time_forwarding(std::size_t i, const Matrix& offload,
                                       std::span<const double> capacity,
                                       std::span<const double> arrivals, const Matrix& rtt) {
  detail::check_dims(i, offload, capacity, arrivals, rtt);
  return detail::weighted_delay(i, offload, capacity, arrivals, rtt);
}

/// Mean response time of the requests node i actually offloads: the
/// forwarding response time divided by the offloaded share. Equals
/// response_time_forwarding when the whole load is offloaded and reduces to
/// response_time_local for any purely local share. Zero when nothing is
/// offloaded. This is the quantity the deadline constraint bounds.
inline double mean_response_time(std::size_t i, const Matrix& offload,
                                 std::span<const double> capacity,
                                 std::span<const double> arrivals, const Matrix& rtt) {
  detail::check_dims(i, offload, capacity, arrivals, rtt);
  double share = offload.row_sum(i);
  if (share <= 0.0) return 0.0;
  return detail::weighted_delay(i, offload, capacity, arrivals, rtt) / share;
}

/// Largest local share meeting the deadline: clamp(w e/(lambda e_unit) - 1/(theta lambda), 0, 1),
/// with e/e_unit replaced by the activated unit count under `mode`.
inline double optimal_local_fraction(double energy, double unit_energy, double unit_rate,
                                     double lambda, double theta,
                                     Activation mode = Activation::whole_units) {
  if (energy < 0.0 || unit_energy <= 0.0 || unit_rate < 0.0 || lambda < 0.0)
    throw std::invalid_argument("optimal_local_fraction: negative input");
  if (theta <= 0.0) throw std::invalid_argument("optimal_local_fraction: theta must be positive");
  if (lambda == 0.0) throw DegenerateArrival();
  double capacity = unit_rate * activated_units(energy, unit_energy, mode);
  double alpha = capacity / lambda - 1.0 / (theta * lambda);
  return std::clamp(alpha, 0.0, 1.0);
}

/// Same closed form with the service capacity given directly.
inline double optimal_local_fraction_for_capacity(double capacity, double lambda, double theta) {
  if (lambda == 0.0) throw DegenerateArrival();
  return std::clamp(capacity / lambda - 1.0 / (theta * lambda), 0.0, 1.0);
}

}  // namespace fogslice::queueing
