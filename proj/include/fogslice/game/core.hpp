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
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "fogslice/game/oracle.hpp"
#include "fogslice/game/welfare.hpp"

namespace fogslice::game {

struct CoreOptions {
  std::size_t max_coalition = 4;  // n_max
  double grid = 0.05;             // offload fraction resolution of deviations
  double gain_tolerance = 1e-9;   // relative; a gain must exceed this to count
};

struct Deviation {
  std::vector<std::size_t> members;
  double current = 0.0;    // members' combined payoff under the agreement
  double deviating = 0.0;  // welfare they secure on their own
  std::vector<std::vector<int>> units;  // [member][service]
};

struct CoreReport {
  std::optional<Deviation> deviation;
  bool complete = true;             // false if coalitions above max_coalition were skipped
  std::size_t largest_checked = 0;  // largest coalition size enumerated
  std::uint64_t coalitions_checked = 0;

  bool in_core() const { return !deviation.has_value(); }
};

struct CoalitionValue {
  std::vector<std::size_t> members;  // sorted
  double value = 0.0;
};

namespace detail {

// Calls f(members) for every subset of 0..n-1 with 1..limit members,
// smallest subsets first, lexicographic within a size.
template <class F>
void for_each_coalition(std::size_t n, std::size_t limit, F&& f) {
  for (std::size_t size = 1; size <= std::min(limit, n); ++size) {
    std::vector<bool> mask(n, false);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(size), true);
    do {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < n; ++i)
        if (mask[i]) members.push_back(i);
      if (!f(members)) return;
    } while (std::prev_permutation(mask.begin(), mask.end()));
  }
}

inline std::vector<double> member_budgets(std::span<const double> budgets, const std::vector<std::size_t>& members) {
  std::vector<double> b;
  for (auto i : members) b.push_back(budgets[i]);
  return b;
}

}  // namespace detail

/// Welfare each coalition of at most max_size nodes secures on its own,
/// forwarding only among its members, as computed by the welfare solver.
inline std::vector<CoalitionValue> coalition_values(const GameInstance& g, std::span<const double> budgets,
                                                    std::size_t max_size, const WelfareOptions& opt = {}) {
  std::vector<CoalitionValue> out;
  detail::for_each_coalition(g.node_count(), max_size, [&](const std::vector<std::size_t>& members) {
    auto b = detail::member_budgets(budgets, members);
    out.push_back({members, welfare(solve_social_welfare(sub_instance(g, members), b, opt))});
    return true;
  });
  return out;
}

/// Split of `total` among n nodes that maximises the smallest coalition
/// surplus sum_{j in N} x_j - v(N) (a least-core point). Payoffs are kept
/// nonnegative. Any leftover from the minimal-cost solution is shared equally.
inline std::vector<double> least_core_allocation(std::size_t n, const std::vector<CoalitionValue>& values,
                                                 double total) {
  if (n == 0) return {};
  const double cap = std::max(total, 0.0);
  // For a fixed margin eps, minimise sum x subject to every coalition
  // receiving v(N) + eps. Written in s = cap - x so the right-hand sides stay
  // nonnegative, as the simplex requires.
  auto cheapest = [&](double eps, std::vector<double>& x) {
    Matrix a(values.size(), n, 0.0);
    std::vector<double> b(values.size());
    for (std::size_t r = 0; r < values.size(); ++r) {
      for (auto j : values[r].members) a(r, j) = 1.0;
      b[r] = static_cast<double>(values[r].members.size()) * cap - values[r].value - eps;
      if (b[r] < 0.0) return false;
    }
    auto res = fogslice::detail::solve_bounded_lp(std::vector<double>(n, 1.0), a, b, std::vector<double>(n, cap));
    if (!res.optimal) return false;
    x.resize(n);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += x[j] = cap - res.x[j];
    return sum <= total + 1e-12 * std::max(1.0, total);
  };
  std::vector<double> best(n, total / static_cast<double>(n)), x;
  double lo = -cap - 1.0, hi = cap + 1.0;
  if (cheapest(lo, x)) best = x;
  for (int it = 0; it < 100 && hi - lo > 1e-12 * std::max(1.0, cap); ++it) {
    double mid = 0.5 * (lo + hi);
    if (cheapest(mid, x)) {
      lo = mid;
      best = x;
    } else {
      hi = mid;
    }
  }
  double spent = std::accumulate(best.begin(), best.end(), 0.0);
  for (double& v : best) v += (total - spent) / static_cast<double>(n);
  return best;
}

/// Welfare-maximising agreement whose welfare is shared by a least-core
/// allocation over coalitions of at most max_coalition nodes.
inline SlicingAgreement solve_core_agreement(const GameInstance& g, std::span<const double> budgets,
                                             std::size_t max_coalition = 4, const WelfareOptions& opt = {}) {
  auto agr = solve_social_welfare(g, budgets, opt);
  auto values = coalition_values(g, budgets, std::min(max_coalition, g.node_count() - 1), opt);
  agr.allocation = least_core_allocation(g.node_count(), values, welfare(agr));
  return agr;
}

/// Looks for a profitable deviation from `agr`: a coalition of at most
/// max_coalition nodes that, keeping each member's energy budget and
/// forwarding only among themselves, can re-split energy (whole units) and
/// choose grid offload fractions earning more than the agreement pays its
/// members together. Utility is transferable inside the coalition, so a
/// surplus can always be shared so that every member strictly gains.
/// Payoffs are agr.allocation when present, else the contribution rewards.
/// Coalitions are tried smallest first; the first deviation found is reported.
inline CoreReport check_core(const SlicingAgreement& agr, const GameInstance& g, std::span<const double> budgets,
                             const CoreOptions& opt = {}) {
  const std::size_t n = g.node_count();
  if (budgets.size() != n) throw DimensionMismatch("one budget per node expected");
  std::vector<double> payoff = !agr.allocation.empty() ? agr.allocation
                               : !agr.rewards.empty()  ? agr.rewards
                                                       : contribution_rewards(g, agr.offload);
  if (payoff.size() != n) throw DimensionMismatch("payoff vector size differs from node count");

  CoreReport rep;
  const std::size_t limit = std::min(opt.max_coalition, n);
  rep.complete = limit == n;
  detail::for_each_coalition(n, limit, [&](const std::vector<std::size_t>& members) {
    ++rep.coalitions_checked;
    rep.largest_checked = members.size();
    auto b = detail::member_budgets(budgets, members);
    auto best = oracle::best_welfare(sub_instance(g, members), b, opt.grid);
    double current = 0.0;
    for (auto i : members) current += payoff[i];
    if (best.welfare > current + opt.gain_tolerance * std::max(1.0, std::fabs(current))) {
      rep.deviation = Deviation{members, current, best.welfare, best.units};
      return false;
    }
    return true;
  });
  return rep;
}

}  // namespace fogslice::game
