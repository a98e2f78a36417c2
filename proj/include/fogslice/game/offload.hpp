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
#include <vector>

#include "fogslice/detail/simplex.hpp"
#include "fogslice/game/slice.hpp"

namespace fogslice::game {

struct OffloadOptions {
  double initial_trust = 0.25;  // step bound, as a fraction of each sender's arrivals
  double min_trust = 1e-10;
  int max_iterations = 400;
  std::size_t grid_destinations = 3;  // load-grid seeding up to this many destinations
  int grid_levels = 8;                // load levels per destination in the seed grid
  int max_load_evaluations = 4000;    // LP budget of the load-space search
};

struct OffloadResult {
  OffloadMatrix alpha;
  double served = 0.0;  // sum_i lambda_i * sum_m alpha_im
  bool converged = true;
  int iterations = 0;
};

namespace detail {

// The offload problem in flow variables f_im = alpha_im * lambda_i:
//   max sum f  s.t.  sum_m f_im <= lambda_i,
//                    h_i(f) = sum_m f_im (theta - tau_im - 1/(cap_m - L_m)) >= 0,
//                    L_m = sum_j f_jm < cap_m.
// h_i >= 0 is the deadline on node i's mean response time.
class FlowProblem {
 public:
  struct Arc {
    std::size_t sender;
    std::size_t dest;
    double tau;
    double weight;  // objective weight; tiny offsets encode the tie-break order
  };

  FlowProblem(const SliceInstance& s) : n_(s.size()), theta_(s.theta), lambda_(s.arrivals) {
    cap_ = s.capacities();
    by_sender_.resize(n_);
    by_dest_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      if (lambda_[i] <= 0.0) continue;
      auto add = [&](std::size_t m, double tau) {
        if (cap_[m] <= 0.0 || !(tau < theta_ + 1.0 / cap_[m] + 1e3)) return;
        // local first, then lower destination index
        double w = m == i ? 1.0 + 1e-9 : 1.0 - 1e-10 * static_cast<double>(m + 1) / static_cast<double>(n_ + 1);
        by_sender_[i].push_back(arcs_.size());
        by_dest_[m].push_back(arcs_.size());
        arcs_.push_back({i, m, tau, w});
      };
      add(i, 0.0);
      for (auto m : s.neighbors[i])
        if (m != i && std::isfinite(s.rtt(i, m))) add(m, s.rtt(i, m));
    }
    for (std::size_t i = 0; i < n_; ++i)
      if (!by_sender_[i].empty()) senders_.push_back(i);
    for (std::size_t m = 0; m < n_; ++m)
      if (!by_dest_[m].empty()) dests_.push_back(m);
  }

  std::size_t arc_count() const { return arcs_.size(); }
  const std::vector<Arc>& arcs() const { return arcs_; }

  std::vector<double> loads(const std::vector<double>& f) const {
    std::vector<double> l(n_, 0.0);
    for (std::size_t p = 0; p < arcs_.size(); ++p) l[arcs_[p].dest] += f[p];
    return l;
  }

  // Deadline slack of sender i; -inf if it uses a saturated queue.
  double slack(std::size_t i, const std::vector<double>& f, const std::vector<double>& l) const {
    double h = 0.0;
    for (auto p : by_sender_[i]) {
      if (f[p] <= 0.0) continue;
      const Arc& a = arcs_[p];
      double spare = cap_[a.dest] - l[a.dest];
      if (spare <= kSaturationTol) return -kInf;
      h += f[p] * (theta_ - a.tau - 1.0 / spare);
    }
    return h;
  }

  double weighted(const std::vector<double>& f) const {
    double v = 0.0;
    for (std::size_t p = 0; p < arcs_.size(); ++p) v += arcs_[p].weight * f[p];
    return v;
  }

  static double total(const std::vector<double>& f) {
    double v = 0.0;
    for (double x : f) v += x;
    return v;
  }

  std::vector<double> isolated_start() const {
    std::vector<double> f(arcs_.size(), 0.0);
    for (std::size_t p = 0; p < arcs_.size(); ++p) {
      const Arc& a = arcs_[p];
      if (a.sender != a.dest) continue;
      f[p] = std::clamp(cap_[a.dest] - 1.0 / theta_, 0.0, lambda_[a.sender]);
    }
    return f;
  }

  // Lowers flows until every constraint holds. Never raises a flow, so other
  // senders' slack can only improve.
  void repair(std::vector<double>& f) const {
    for (auto& x : f) x = std::max(x, 0.0);
    for (auto i : senders_) {
      double row = 0.0;
      for (auto p : by_sender_[i]) row += f[p];
      if (row > lambda_[i]) {
        double scale = lambda_[i] / row;
        for (auto p : by_sender_[i]) f[p] *= scale;
      }
    }
    auto l = loads(f);
    for (auto m : dests_) {
      double limit = cap_[m] * (1.0 - 1e-7);
      if (l[m] > limit && l[m] > 0.0) {
        double scale = limit / l[m];
        for (auto p : by_dest_[m]) f[p] *= scale;
        l[m] = 0.0;
        for (auto p : by_dest_[m]) l[m] += f[p];
      }
    }
    for (std::size_t guard = 0; guard < 10 * arcs_.size() + 10; ++guard) {
      std::size_t worst = n_;
      double worst_h = 0.0;
      for (auto i : senders_) {
        double h = slack(i, f, l) / lambda_[i];
        if (h < worst_h) {
          worst_h = h;
          worst = i;
        }
      }
      if (worst == n_) return;
      // cut the flow on the sender's slowest path
      std::size_t cut = arcs_.size();
      double min_path = kInf;
      for (auto p : by_sender_[worst]) {
        if (f[p] <= 0.0) continue;
        const Arc& a = arcs_[p];
        double spare = cap_[a.dest] - l[a.dest];
        double s = spare <= kSaturationTol ? -kInf : theta_ - a.tau - 1.0 / spare;
        if (s < min_path) {
          min_path = s;
          cut = p;
        }
      }
      if (cut == arcs_.size()) return;
      const std::size_t d = arcs_[cut].dest;
      const double original = f[cut];
      auto set_flow = [&](double x) {
        l[d] += x - f[cut];
        f[cut] = x;
      };
      set_flow(0.0);
      if (slack(worst, f, l) < 0.0) continue;
      double lo = 0.0, hi = original;
      for (int it = 0; it < 80 && hi - lo > 1e-15 * std::max(1.0, original); ++it) {
        double mid = 0.5 * (lo + hi);
        set_flow(mid);
        if (slack(worst, f, l) >= 0.0) lo = mid;
        else hi = mid;
      }
      set_flow(lo);
    }
  }

  // Step from a restriction of the problem around f: within a box of
  // half-width trust * lambda_sender per arc, the deadline rows bound every
  // delay change with the delay's slope at the far end of the box (the delay
  // is convex in load), so any solution of the LP is feasible for the true
  // constraints. Writing a_m / b_m for the flow added to / removed from
  // destination m, the change of 1/(cap_m - L_m) lies below
  // K+_m a_m - K-_m b_m, and its magnitude below the box-wide maximum M_m,
  // which bounds the cross term d_im * (delay change) by |d_im| M_m.
  // With `exact` set the slopes are taken at f itself and the margins
  // dropped: the step may overshoot a curved deadline and needs repair.
  std::vector<double> linear_step(const std::vector<double>& f, double trust, bool exact = false) const {
    const std::size_t np = arcs_.size();
    auto l = loads(f);
    std::vector<double> delay(n_, 0.0), up(n_, 0.0), down(n_, 0.0);
    std::vector<double> k_up(n_, 0.0), k_down(n_, 0.0), swing(n_, 0.0), box(np);
    for (std::size_t p = 0; p < np; ++p) {
      box[p] = trust * lambda_[arcs_[p].sender];
      up[arcs_[p].dest] += box[p];
      down[arcs_[p].dest] += std::min(box[p], f[p]);
    }
    for (auto m : dests_) {
      double spare = cap_[m] - l[m];
      up[m] = std::min(up[m], 0.5 * spare);
      delay[m] = 1.0 / spare;
      if (exact) {
        k_up[m] = k_down[m] = delay[m] * delay[m];
        continue;
      }
      k_up[m] = 1.0 / ((spare - up[m]) * (spare - up[m]));
      k_down[m] = 1.0 / ((spare + down[m]) * (spare + down[m]));
      swing[m] = std::max(1.0 / (spare - up[m]) - delay[m], delay[m] - 1.0 / (spare + down[m]));
    }

    const std::size_t rows = 2 * senders_.size() + dests_.size();
    Matrix a(rows, 2 * np, 0.0);
    std::vector<double> b(rows, 0.0);
    std::size_t r = 0;
    // flow of sender i towards destination m
    std::vector<double> own(n_ * n_, 0.0);
    for (std::size_t p = 0; p < np; ++p) own[arcs_[p].sender * n_ + arcs_[p].dest] = f[p];

    for (auto i : senders_) {
      for (std::size_t q = 0; q < np; ++q) {
        const Arc& arc = arcs_[q];
        const std::size_t m = arc.dest;
        double fi = own[i * n_ + m];
        double g_add = -fi * k_up[m];
        double g_remove = fi * k_down[m];
        if (arc.sender == i) {
          double slope = theta_ - arc.tau - delay[m];
          g_add += slope - swing[m];
          g_remove -= slope + swing[m];
        }
        a(r, q) = -g_add;
        a(r, np + q) = -g_remove;
      }
      b[r] = std::max(0.0, slack(i, f, l));
      ++r;
    }
    for (auto i : senders_) {
      double row = 0.0;
      for (auto p : by_sender_[i]) {
        a(r, p) = 1.0;
        a(r, np + p) = -1.0;
        row += f[p];
      }
      b[r] = std::max(0.0, lambda_[i] - row);
      ++r;
    }
    for (auto m : dests_) {
      for (auto p : by_dest_[m]) a(r, p) = 1.0;
      b[r] = up[m];
      ++r;
    }

    std::vector<double> c(2 * np), ub(2 * np);
    for (std::size_t p = 0; p < np; ++p) {
      c[p] = arcs_[p].weight;
      c[np + p] = -arcs_[p].weight;
      ub[p] = box[p];
      ub[np + p] = std::min(box[p], f[p]);
    }
    auto res = fogslice::detail::solve_bounded_lp(c, a, b, ub);
    std::vector<double> d(np, 0.0);
    if (res.x.empty()) return d;
    for (std::size_t p = 0; p < np; ++p) d[p] = res.x[p] - res.x[np + p];
    return d;
  }

  std::size_t destination_count() const { return dests_.size(); }

  // Best flow when each destination's load is capped at `limit`: delays are
  // then fixed, so the problem is an LP, and its solutions stay feasible
  // because actual loads can only be lower than the caps.
  std::vector<double> flow_at_loads(const std::vector<double>& limit) const {
    const std::size_t np = arcs_.size();
    Matrix a(2 * senders_.size() + dests_.size(), np, 0.0);
    std::vector<double> b(a.rows(), 0.0), c(np), ub(np);
    std::size_t r = 0;
    for (auto i : senders_) {
      for (auto p : by_sender_[i]) {
        const std::size_t m = arcs_[p].dest;
        a(r, p) = -(theta_ - arcs_[p].tau - 1.0 / (cap_[m] - limit[m]));
      }
      ++r;
    }
    for (auto i : senders_) {
      for (auto p : by_sender_[i]) a(r, p) = 1.0;
      b[r++] = lambda_[i];
    }
    for (auto m : dests_) {
      for (auto p : by_dest_[m]) a(r, p) = 1.0;
      b[r++] = limit[m];
    }
    for (std::size_t p = 0; p < np; ++p) {
      c[p] = arcs_[p].weight;
      ub[p] = lambda_[arcs_[p].sender];
    }
    auto res = fogslice::detail::solve_bounded_lp(c, a, b, ub);
    std::vector<double> f(np, 0.0);
    if (!res.x.empty()) f = res.x;
    repair(f);
    return f;
  }

  // Derivative-free search over destination loads, each point scored by
  // flow_at_loads. Small instances are seeded from a coarse load grid, which
  // steps over the plateaus a local search cannot leave (a queue must shed a
  // finite amount before a neighbor's deadline can be met through it).
  std::vector<double> load_search(std::vector<double> f, const OffloadOptions& opt) const {
    const std::size_t d = dests_.size();
    double value = weighted(f);
    int evals = 0;
    auto consider = [&](const std::vector<double>& limit, std::vector<double>& point) {
      ++evals;
      auto g = flow_at_loads(limit);
      double v = weighted(g);
      if (v > value + 1e-12 * (1.0 + value)) {
        value = v;
        f = std::move(g);
        point = limit;
        return true;
      }
      return false;
    };
    auto top = [&](std::size_t m) { return cap_[m] * (1.0 - 1e-9); };

    // largest load at which each arc into a destination still meets the
    // deadline unloaded elsewhere; value jumps where these thresholds are crossed
    std::vector<std::vector<double>> breaks(d);
    for (std::size_t a = 0; a < d; ++a) {
      const std::size_t m = dests_[a];
      for (auto p : by_dest_[m]) {
        double slack = theta_ - arcs_[p].tau;
        if (slack <= 0.0) continue;
        double b = (cap_[m] - 1.0 / slack) * (1.0 - 1e-9);
        if (b > 0.0) breaks[a].push_back(b);
      }
      std::sort(breaks[a].begin(), breaks[a].end());
      breaks[a].erase(std::unique(breaks[a].begin(), breaks[a].end()), breaks[a].end());
    }

    std::vector<double> point = loads(f);
    if (d <= opt.grid_destinations && opt.grid_levels > 0) {
      std::vector<std::vector<double>> levels(d);
      for (std::size_t a = 0; a < d; ++a) {
        levels[a] = breaks[a];
        for (int j = 1; j <= opt.grid_levels; ++j) levels[a].push_back(top(dests_[a]) * j / (opt.grid_levels + 1));
        std::sort(levels[a].begin(), levels[a].end());
      }
      std::vector<std::size_t> idx(d, 0);
      std::vector<double> limit(n_, 0.0);
      while (true) {
        for (std::size_t a = 0; a < d; ++a) limit[dests_[a]] = levels[a][idx[a]];
        consider(limit, point);
        std::size_t a = 0;
        while (a < d && ++idx[a] == levels[a].size()) idx[a++] = 0;
        if (a == d) break;
      }
    }

    // move sets: every +-step combination for small instances, otherwise
    // single coordinates and pairs of destinations sharing a sender
    std::vector<std::vector<int>> moves;
    if (d <= opt.grid_destinations) {
      std::vector<int> dir(d, -1);
      while (true) {
        if (std::any_of(dir.begin(), dir.end(), [](int x) { return x != 0; })) moves.push_back(dir);
        std::size_t a = 0;
        while (a < d && ++dir[a] == 2) dir[a++] = -1;
        if (a == d) break;
      }
    } else {
      std::vector<int> pos(n_, -1);
      for (std::size_t a = 0; a < d; ++a) pos[dests_[a]] = static_cast<int>(a);
      for (std::size_t a = 0; a < d; ++a)
        for (int sgn : {1, -1}) {
          std::vector<int> dir(d, 0);
          dir[a] = sgn;
          moves.push_back(dir);
        }
      std::vector<std::vector<bool>> linked(d, std::vector<bool>(d, false));
      for (auto i : senders_)
        for (auto p : by_sender_[i])
          for (auto q : by_sender_[i]) linked[pos[arcs_[p].dest]][pos[arcs_[q].dest]] = true;
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b2 = a + 1; b2 < d; ++b2)
          if (linked[a][b2])
            for (int sa : {1, -1})
              for (int sb : {1, -1}) {
                std::vector<int> dir(d, 0);
                dir[a] = sa;
                dir[b2] = sb;
                moves.push_back(dir);
              }
    }

    double scale = 0.25;
    while (scale > 1e-7 && evals < opt.max_load_evaluations) {
      bool improved = false;
      for (std::size_t a = 0; a < d && !improved; ++a)
        for (double b : breaks[a]) {
          if (b == point[dests_[a]]) continue;
          std::vector<double> limit = point;
          limit[dests_[a]] = b;
          if (consider(limit, point)) {
            improved = true;
            break;
          }
        }
      if (improved) continue;
      for (const auto& dir : moves) {
        std::vector<double> limit = point;
        bool changed = false;
        for (std::size_t a = 0; a < d; ++a) {
          if (dir[a] == 0) continue;
          const std::size_t m = dests_[a];
          double v = std::clamp(point[m] + dir[a] * scale * cap_[m], 0.0, top(m));
          changed = changed || v != point[m];
          limit[m] = v;
        }
        if (changed && consider(limit, point)) {
          improved = true;
          break;
        }
        if (evals >= opt.max_load_evaluations) break;
      }
      if (!improved) scale *= 0.5;
    }
    return f;
  }

  // Trust-region ascent on the restricted LPs of linear_step.
  std::vector<double> ascend(std::vector<double> f, const OffloadOptions& opt, bool& converged, int& iterations) const {
    double value = weighted(f);
    double trust = opt.initial_trust;
    converged = false;
    int it = 0;
    double mark = value;  // value at the start of the current stall window
    for (; it < opt.max_iterations; ++it) {
      if (it % 25 == 24) {
        if (value - mark <= 1e-10 * (1.0 + value)) {
          converged = true;
          break;
        }
        mark = value;
      }
      auto d = linear_step(f, trust);
      double predicted = 0.0;
      for (std::size_t p = 0; p < d.size(); ++p) predicted += arcs_[p].weight * d[p];
      std::vector<double> cand(f.size());
      for (std::size_t p = 0; p < f.size(); ++p) cand[p] = f[p] + d[p];
      repair(cand);
      double cv = weighted(cand);
      // the safe step crawls along an active curved deadline; an exact
      // linearisation pulled back by repair often moves much further
      auto e = linear_step(f, trust, true);
      std::vector<double> alt(f.size());
      for (std::size_t p = 0; p < f.size(); ++p) alt[p] = f[p] + e[p];
      repair(alt);
      if (double av = weighted(alt); av > cv) {
        double pe = 0.0;
        for (std::size_t p = 0; p < e.size(); ++p) pe += arcs_[p].weight * e[p];
        cand = std::move(alt);
        cv = av;
        predicted = pe;
      }
      if (predicted > 1e-12 * (1.0 + value) && cv > value + 1e-13 * (1.0 + value)) {
        // the restriction is tight when steps are small; widen while it keeps paying
        if (cv - value > 0.5 * predicted) trust = std::min(1.0, 2.0 * trust);
        f = std::move(cand);
        value = cv;
      } else {
        // a smaller box also shrinks the curvature margin, so retry before stopping
        trust *= 0.25;
        if (trust < opt.min_trust) {
          converged = true;
          break;
        }
      }
    }
    iterations += it;
    return f;
  }

  OffloadMatrix to_alpha(const std::vector<double>& f) const {
    OffloadMatrix alpha = OffloadMatrix::square(n_);
    for (std::size_t p = 0; p < arcs_.size(); ++p) {
      const Arc& a = arcs_[p];
      if (f[p] > 0.0) alpha(a.sender, a.dest) = f[p] / lambda_[a.sender];
    }
    return alpha;
  }

 private:
  std::size_t n_;
  double theta_;
  std::vector<double> lambda_;
  std::vector<double> cap_;
  std::vector<Arc> arcs_;
  std::vector<std::vector<std::size_t>> by_sender_;
  std::vector<std::vector<std::size_t>> by_dest_;
  std::vector<std::size_t> senders_;
  std::vector<std::size_t> dests_;
};

}  // namespace detail

/// Offload matrix maximising the slice's total offloaded requests subject to
/// capacity, offload-sum and per-sender deadline constraints. Two candidates
/// are compared: trust-region ascent from every node processing its
/// deadline-optimal local share, and the same ascent started from a search
/// over destination loads. The result is always feasible; when nothing can
/// be offloaded it is the zero matrix. Ties go to local processing, then to
/// lower destination indices.
inline OffloadResult solve_offload(const SliceInstance& slice, const OffloadOptions& opt = {}) {
  slice.check();
  detail::FlowProblem prob(slice);
  OffloadResult res;
  if (prob.arc_count() == 0) {
    res.alpha = OffloadMatrix::square(slice.size());
    return res;
  }
  std::vector<double> start = prob.isolated_start();
  prob.repair(start);
  bool conv_a = false, conv_b = false;
  auto a = prob.ascend(start, opt, conv_a, res.iterations);
  auto b = prob.ascend(prob.load_search(start, opt), opt, conv_b, res.iterations);
  bool pick_b = prob.weighted(b) > prob.weighted(a);
  const auto& f = pick_b ? b : a;
  res.converged = pick_b ? conv_b : conv_a;
  res.alpha = prob.to_alpha(f);
  res.served = detail::FlowProblem::total(f);
  return res;
}

}  // namespace fogslice::game
