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

// Brute-force references for the slicing game. Deliberately independent of
// the queueing helpers and the solvers: capacities, delays and the deadline
// test are re-derived here so a shared bug cannot hide on both sides.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "fogslice/game/slice.hpp"

namespace fogslice::game::oracle {

struct SliceOptimum {
  double served = 0.0;
  Matrix alpha;
  std::uint64_t nodes_visited = 0;
};

namespace detail {

inline double capacity(const SliceInstance& s, std::size_t i) {
  if (s.energy[i] <= 0.0) return 0.0;
  double p = s.energy[i] / s.unit_energy[i];
  if (s.activation == queueing::Activation::whole_units) p = std::floor(p + 1e-9);
  return p * s.unit_rate[i];
}

// All vectors of d nonnegative integers with sum <= steps, largest sums first.
inline std::vector<std::vector<int>> compositions(std::size_t d, int steps) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(d, 0);
  auto rec = [&](auto& self, std::size_t pos, int left) -> void {
    if (pos + 1 == d) {
      cur[pos] = left;
      out.push_back(cur);
      return;
    }
    for (int v = left; v >= 0; --v) {
      cur[pos] = v;
      self(self, pos + 1, left - v);
    }
  };
  if (d == 0) return out;
  for (int total = steps; total >= 0; --total) rec(rec, 0, total);
  return out;
}

class GridSearch {
 public:
  GridSearch(const SliceInstance& s, double grid) : s_(s), n_(s.size()) {
    steps_ = static_cast<int>(std::lround(1.0 / grid));
    for (std::size_t i = 0; i < n_; ++i) cap_.push_back(capacity(s, i));
    dest_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      if (s.arrivals[i] <= 0.0) continue;
      if (cap_[i] > 0.0) dest_[i].push_back(i);
      for (auto m : s.neighbors[i])
        if (m != i && cap_[m] > 0.0 && std::isfinite(s.rtt(i, m))) dest_[i].push_back(m);
      if (!dest_[i].empty()) order_.push_back(i);
    }
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return s.arrivals[a] > s.arrivals[b]; });
    rows_.resize(n_);
    for (auto i : order_) rows_[i] = compositions(dest_[i].size(), steps_);
    rest_.assign(order_.size() + 1, 0.0);
    for (std::size_t d = order_.size(); d-- > 0;) rest_[d] = rest_[d + 1] + s.arrivals[order_[d]];
  }

  SliceOptimum run(double known_lower_bound) {
    best_ = known_lower_bound;
    found_ = false;
    load_.assign(n_, 0.0);
    flow_.assign(n_, std::vector<double>(n_, 0.0));
    best_flow_ = flow_;
    dfs(0, 0.0);
    SliceOptimum out;
    out.alpha = Matrix::square(n_);
    out.nodes_visited = visited_;
    if (!found_) return out;  // nothing beats the bound: zero offload
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t m = 0; m < n_; ++m)
        if (best_flow_[i][m] > 0.0) out.alpha(i, m) = best_flow_[i][m] / s_.arrivals[i];
    out.served = best_;
    return out;
  }

 private:
  bool meets_deadline(std::size_t i) const {
    double weighted = 0.0, total = 0.0;
    for (auto m : dest_[i]) {
      double f = flow_[i][m];
      if (f <= 0.0) continue;
      double spare = cap_[m] - load_[m];
      if (spare <= 1e-9) return false;
      double tau = m == i ? 0.0 : s_.rtt(i, m);
      weighted += f * (tau + 1.0 / spare);
      total += f;
    }
    return weighted <= (s_.theta + 1e-9) * total;
  }

  void dfs(std::size_t depth, double served) {
    ++visited_;
    if (depth == order_.size()) {
      if (served > best_) {
        best_ = served;
        best_flow_ = flow_;
        found_ = true;
      }
      return;
    }
    const std::size_t i = order_[depth];
    if (depth + 1 == order_.size()) {
      last_sender(depth, served);
      return;
    }
    const double lambda = s_.arrivals[i];
    const auto& dests = dest_[i];
    for (const auto& row : rows_[i]) {
      int sum = std::accumulate(row.begin(), row.end(), 0);
      double own = lambda * sum / steps_;
      // rows come in nonincreasing sum, so nothing later can win either
      if (served + own + rest_[depth + 1] <= best_) break;
      bool ok = true;
      for (std::size_t a = 0; a < dests.size(); ++a) {
        double f = lambda * row[a] / steps_;
        flow_[i][dests[a]] = f;
        load_[dests[a]] += f;
        if (f > 0.0 && load_[dests[a]] >= cap_[dests[a]] - 1e-9) ok = false;
      }
      // loads only grow deeper in the tree, so a violated deadline stays violated
      for (std::size_t d = 0; ok && d <= depth; ++d) ok = meets_deadline(order_[d]);
      if (ok) dfs(depth + 1, served + own);
      for (std::size_t a = 0; a < dests.size(); ++a) {
        load_[dests[a]] -= flow_[i][dests[a]];
        flow_[i][dests[a]] = 0.0;
      }
    }
  }

  void set_flow(std::size_t i, std::size_t m, double f) {
    load_[m] += f - flow_[i][m];
    flow_[i][m] = f;
  }

  // Constraints of everyone but `last`, plus capacity at every destination
  // `last` uses. Monotone: raising any flow of `last` can only break them.
  bool others_ok(std::size_t depth, std::size_t last) const {
    for (auto m : dest_[last])
      if (flow_[last][m] > 0.0 && load_[m] >= cap_[m] - 1e-9) return false;
    for (std::size_t d = 0; d < depth; ++d)
      if (!meets_deadline(order_[d])) return false;
    return true;
  }

  // Deadline slack of `last`, scaled so that >= 0 matches meets_deadline.
  // Concave in each of its own flows.
  double own_slack(std::size_t i) const {
    double weighted = 0.0, total = 0.0;
    for (auto m : dest_[i]) {
      double f = flow_[i][m];
      if (f <= 0.0) continue;
      double spare = cap_[m] - load_[m];
      if (spare <= 1e-9) return -kInf;
      weighted += f * ((m == i ? 0.0 : s_.rtt(i, m)) + 1.0 / spare);
      total += f;
    }
    return (s_.theta + 1e-9) * total - weighted;
  }

  // The last sender needs only its best row: enumerate all but its final
  // destination and place the largest feasible flow there by search.
  void last_sender(std::size_t depth, double served) {
    const std::size_t i = order_[depth];
    const double lambda = s_.arrivals[i];
    const auto& dests = dest_[i];
    const std::size_t d = dests.size();
    const std::size_t tail = dests[d - 1];
    if (prefix_rows_.empty()) prefix_rows_ = d == 1 ? std::vector<std::vector<int>>{{}} : compositions(d - 1, steps_);
    if (served + lambda <= best_) return;
    for (const auto& row : prefix_rows_) {
      ++visited_;
      int sum = std::accumulate(row.begin(), row.end(), 0);
      for (std::size_t a = 0; a + 1 < d; ++a) set_flow(i, dests[a], lambda * row[a] / steps_);
      set_flow(i, tail, 0.0);
      auto at = [&](int b) { set_flow(i, tail, lambda * b / steps_); };
      auto restore = [&] {
        for (auto m : dests) set_flow(i, m, 0.0);
      };
      if (!others_ok(depth, i)) {
        restore();
        continue;
      }
      // largest b keeping the others feasible
      int lo = 0, hi = steps_ - sum;
      at(hi);
      if (!others_ok(depth, i)) {
        while (hi - lo > 1) {
          int mid = (lo + hi) / 2;
          at(mid);
          if (others_ok(depth, i)) lo = mid;
          else hi = mid;
        }
        hi = lo;
      }
      const int cap_b = hi;
      auto slack = [&](int b) {
        at(b);
        return own_slack(i);
      };
      int best_b = -1;
      if (slack(cap_b) >= 0.0) {
        best_b = cap_b;
      } else {
        // peak of the concave slack on [0, cap_b]
        int a = 0, c = cap_b;
        while (c - a > 2) {
          int m1 = a + (c - a) / 3, m2 = c - (c - a) / 3;
          if (slack(m1) < slack(m2)) a = m1 + 1;
          else c = m2;
        }
        int peak = a;
        for (int b = a + 1; b <= c; ++b)
          if (slack(b) > slack(peak)) peak = b;
        if (slack(peak) >= 0.0) {
          int l = peak, h = cap_b;  // slack(l) >= 0 > slack(h)
          while (h - l > 1) {
            int mid = (l + h) / 2;
            if (slack(mid) >= 0.0) l = mid;
            else h = mid;
          }
          best_b = l;
        }
      }
      if (best_b >= 0) {
        at(best_b);
        double total = served + lambda * (sum + best_b) / steps_;
        if (total > best_) {
          best_ = total;
          best_flow_ = flow_;
          found_ = true;
        }
      }
      restore();
    }
  }

  const SliceInstance& s_;
  std::size_t n_;
  int steps_;
  std::vector<std::vector<int>> prefix_rows_;
  std::vector<double> cap_;
  std::vector<std::vector<std::size_t>> dest_;
  std::vector<std::size_t> order_;
  std::vector<std::vector<std::vector<int>>> rows_;
  std::vector<double> rest_;
  std::vector<double> load_;
  std::vector<std::vector<double>> flow_, best_flow_;
  double best_ = 0.0;
  bool found_ = false;
  std::uint64_t visited_ = 0;
};

}  // namespace detail

/// Exhaustive search over offload matrices whose entries are multiples of
/// `grid`, with branch-and-bound pruning. Returns the best total offloaded
/// requests strictly above `lower_bound` (served = 0 and a zero matrix if no
/// grid point beats it).
inline SliceOptimum best_offload(const SliceInstance& slice, double grid, double lower_bound = 0.0) {
  slice.check();
  return detail::GridSearch(slice, grid).run(lower_bound);
}

/// Grid search at `fine` resolution seeded with the optimum found at
/// `coarse`, which prunes most of the fine grid without changing the answer.
inline SliceOptimum best_offload_refined(const SliceInstance& slice, double coarse, double fine) {
  auto rough = best_offload(slice, coarse);
  auto exact = best_offload(slice, fine, rough.served * (1.0 - 1e-12));
  if (exact.served < rough.served) return rough;
  return exact;
}

struct WelfareOptimum {
  double welfare = 0.0;
  std::vector<std::vector<int>> units;  // [node][service] activated units
};

/// Enumerates every whole-unit energy split of every node and the grid
/// optimum of each resulting slice. Budgets are in energy; at most
/// min(floor(budget / unit_energy), max_units) units are activated per node.
inline WelfareOptimum best_welfare(const GameInstance& g, std::span<const double> budgets, double grid) {
  const std::size_t n = g.node_count();
  const std::size_t kk = g.service_count();
  std::vector<std::vector<std::vector<int>>> options(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = g.network.nodes[i];
    int units = budgets[i] <= 0.0 ? 0 : static_cast<int>(std::floor(budgets[i] / node.unit_energy + 1e-9));
    units = std::min(units, node.max_units);
    std::vector<int> cur(kk, 0);
    auto rec = [&](auto& self, std::size_t k, int left) -> void {
      if (k + 1 == kk) {
        cur[k] = left;
        options[i].push_back(cur);
        return;
      }
      for (int v = 0; v <= left; ++v) {
        cur[k] = v;
        self(self, k + 1, left - v);
      }
    };
    if (kk > 0) rec(rec, 0, units);
  }

  std::vector<std::map<std::vector<int>, double>> memo(kk);
  auto slice_value = [&](std::size_t k, const std::vector<int>& units) {
    auto it = memo[k].find(units);
    if (it != memo[k].end()) return it->second;
    std::vector<double> e(n);
    for (std::size_t i = 0; i < n; ++i) e[i] = units[i] * g.network.nodes[i].unit_energy;
    double v = g.network.services[k].reward_rho * best_offload(g.slice(k, e), grid).served;
    memo[k][units] = v;
    return v;
  };

  WelfareOptimum best;
  best.welfare = -1.0;
  std::vector<std::size_t> pick(n, 0);
  while (true) {
    double w = 0.0;
    for (std::size_t k = 0; k < kk; ++k) {
      std::vector<int> units(n);
      for (std::size_t i = 0; i < n; ++i) units[i] = options[i][pick[i]][k];
      w += slice_value(k, units);
    }
    if (w > best.welfare) {
      best.welfare = w;
      best.units.clear();
      for (std::size_t i = 0; i < n; ++i) best.units.push_back(options[i][pick[i]]);
    }
    std::size_t i = 0;
    while (i < n && ++pick[i] == options[i].size()) pick[i++] = 0;
    if (i == n) break;
  }
  return best;
}

}  // namespace fogslice::game::oracle
