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

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "fogslice/types.hpp"

namespace fogslice::detail {

struct LpResult {
  std::vector<double> x;
  double objective = 0.0;
  bool optimal = false;
  int iterations = 0;
};

/// Dense bounded-variable primal simplex for
///
///   max c'x  s.t.  A x <= b,  0 <= x <= upper
///
/// with b >= 0, so the all-slack basis is feasible and no phase one is needed.
/// Upper bounds may be infinite. Dantzig pricing, switching to Bland's rule
/// after a stall budget to rule out cycling.
inline LpResult solve_bounded_lp(const std::vector<double>& c, const Matrix& a,
                                 const std::vector<double>& b, const std::vector<double>& upper,
                                 int max_iterations = 5000) {
  const std::size_t m = a.rows();
  const std::size_t n = c.size();
  const std::size_t cols = n + m;
  const double eps = 1e-12;

  LpResult res;
  for (double v : b)
    if (v < -1e-12) return res;

  // tableau holds B^{-1} [A | I]
  Matrix t(m, cols, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t j = 0; j < n; ++j) t(r, j) = a(r, j);
    t(r, n + r) = 1.0;
  }
  std::vector<double> ub(cols, kInf);
  for (std::size_t j = 0; j < n; ++j) ub[j] = upper[j];
  std::vector<double> cost(cols, 0.0);
  for (std::size_t j = 0; j < n; ++j) cost[j] = c[j];

  std::vector<std::size_t> basis(m);
  std::vector<double> xb(m);
  std::vector<int> pos(cols, -1);  // row of a basic variable, -1 if nonbasic
  std::vector<bool> at_upper(cols, false);
  for (std::size_t r = 0; r < m; ++r) {
    basis[r] = n + r;
    pos[n + r] = static_cast<int>(r);
    xb[r] = std::max(0.0, b[r]);
  }
  std::vector<double> rc = cost;  // reduced costs c_j - c_B B^{-1} A_j

  const int bland_after = 50 + 4 * static_cast<int>(cols);
  int it = 0;
  for (; it < max_iterations; ++it) {
    bool bland = it > bland_after;
    std::size_t enter = cols;
    double best = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      if (pos[j] >= 0) continue;
      double score = 0.0;
      if (!at_upper[j] && rc[j] > 1e-11 && ub[j] > eps) score = rc[j];
      else if (at_upper[j] && rc[j] < -1e-11) score = -rc[j];
      if (score <= 0.0) continue;
      if (bland) {
        enter = j;
        break;
      }
      if (score > best) {
        best = score;
        enter = j;
      }
    }
    if (enter == cols) {
      res.optimal = true;
      break;
    }

    const double dir = at_upper[enter] ? -1.0 : 1.0;
    double step = ub[enter];
    std::size_t leave_row = m;
    bool leave_to_upper = false;
    for (std::size_t r = 0; r < m; ++r) {
      double coef = dir * t(r, enter);
      if (coef > eps) {
        double lim = xb[r] / coef;
        if (lim < step - 1e-15 || (bland && leave_row < m && lim <= step && basis[r] < basis[leave_row])) {
          step = lim;
          leave_row = r;
          leave_to_upper = false;
        }
      } else if (coef < -eps && std::isfinite(ub[basis[r]])) {
        double lim = (ub[basis[r]] - xb[r]) / (-coef);
        if (lim < step - 1e-15 || (bland && leave_row < m && lim <= step && basis[r] < basis[leave_row])) {
          step = lim;
          leave_row = r;
          leave_to_upper = true;
        }
      }
    }
    if (!std::isfinite(step)) return res;  // unbounded
    step = std::max(step, 0.0);

    for (std::size_t r = 0; r < m; ++r) xb[r] -= dir * t(r, enter) * step;

    if (leave_row == m) {
      at_upper[enter] = !at_upper[enter];
      continue;
    }

    double entering_value = at_upper[enter] ? ub[enter] - step : step;
    std::size_t leaving = basis[leave_row];
    pos[leaving] = -1;
    at_upper[leaving] = leave_to_upper;
    basis[leave_row] = enter;
    pos[enter] = static_cast<int>(leave_row);
    at_upper[enter] = false;
    xb[leave_row] = entering_value;

    double piv = t(leave_row, enter);
    auto prow = t.row(leave_row);
    for (double& v : prow) v /= piv;
    for (std::size_t r = 0; r < m; ++r) {
      if (r == leave_row) continue;
      double f = t(r, enter);
      if (f == 0.0) continue;
      auto row = t.row(r);
      for (std::size_t j = 0; j < cols; ++j) row[j] -= f * prow[j];
    }
    double f = rc[enter];
    for (std::size_t j = 0; j < cols; ++j) rc[j] -= f * prow[j];
  }
  res.iterations = it;

  std::vector<double> full(cols, 0.0);
  for (std::size_t j = 0; j < cols; ++j)
    if (pos[j] < 0 && at_upper[j]) full[j] = ub[j];
  for (std::size_t r = 0; r < m; ++r) full[basis[r]] = xb[r];
  res.x.assign(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(n));
  res.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) res.objective += c[j] * res.x[j];
  return res;
}

}  // namespace fogslice::detail
