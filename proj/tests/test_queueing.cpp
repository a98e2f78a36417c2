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


#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fogslice/queueing.hpp"
#include "fogslice/types.hpp"

using namespace fogslice;
using namespace fogslice::queueing;

TEST(ResponseTimeLocal, HandValues) {
  EXPECT_NEAR(response_time_local(1.0, 40, 50), 0.100, 1e-12);
  EXPECT_NEAR(response_time_local(0.0, 40, 50), 0.020, 1e-12);
  EXPECT_THROW(response_time_local(1.0, 50, 50), Unstable);
  EXPECT_THROW(response_time_local(1.0, 60, 50), Unstable);
}

TEST(ResponseTimeForwarding, CollapsesToLocal) {
  Matrix a = Matrix::square(2);
  a(0, 0) = 0.7;
  std::vector<double> cap{50, 30}, lam{40, 10};
  Matrix rtt = Matrix::from_rows({{0, 0.02}, {0.02, 0}});
  EXPECT_NEAR(response_time_forwarding(0, a, cap, lam, rtt), 0.7 * response_time_local(0.7, 40, 50), 1e-12);
  EXPECT_NEAR(mean_response_time(0, a, cap, lam, rtt), response_time_local(0.7, 40, 50), 1e-12);
}

TEST(ResponseTimeForwarding, SplitHalfAndHalf) {
  Matrix a = Matrix::square(2);
  a(0, 0) = 0.5;
  a(0, 1) = 0.5;
  std::vector<double> cap{30, 40}, lam{40, 0};
  Matrix rtt = Matrix::from_rows({{0, 0.02}, {0.02, 0}});
  EXPECT_NEAR(response_time_forwarding(0, a, cap, lam, rtt), 0.085, 1e-12);
}

TEST(ResponseTimeForwarding, CrossLoad) {
  // node 0 sends everything to node 1, which also gets 30 from node 2
  Matrix a = Matrix::square(3);
  a(0, 1) = 1.0;
  a(2, 1) = 1.0;
  std::vector<double> cap{0, 50, 0}, lam{10, 0, 30};
  Matrix rtt = Matrix::square(3, 0.02);
  for (int i = 0; i < 3; ++i) rtt(i, i) = 0.0;
  EXPECT_NEAR(response_time_forwarding(0, a, cap, lam, rtt), 0.120, 1e-12);
}

TEST(ResponseTimeForwarding, SaturatedDestinationNamed) {
  Matrix a = Matrix::square(2);
  a(0, 1) = 1.0;
  std::vector<double> cap{10, 20}, lam{20, 0};
  Matrix rtt = Matrix::square(2, 0.01);
  rtt(0, 0) = rtt(1, 1) = 0.0;
  try {
    response_time_forwarding(0, a, cap, lam, rtt);
    FAIL() << "expected Unstable";
  } catch (const Unstable& e) {
    EXPECT_EQ(e.destination(), 1u);
  }
}

TEST(ResponseTimeForwarding, DimensionMismatch) {
  Matrix a = Matrix::square(2);
  std::vector<double> cap{10}, lam{1, 1};
  EXPECT_THROW(response_time_forwarding(0, a, cap, lam, Matrix::square(2)), DimensionMismatch);
}

TEST(OptimalLocalFraction, HandValues) {
  double a = optimal_local_fraction(10, 2, 10, 100, 0.05);
  EXPECT_NEAR(a, 0.3, 1e-12);
  EXPECT_NEAR(response_time_local(a, 100, 50), 0.05, 1e-12);
  EXPECT_DOUBLE_EQ(optimal_local_fraction(20, 1, 10, 50, 0.1), 1.0);
  EXPECT_DOUBLE_EQ(optimal_local_fraction(1, 1, 5, 50, 0.1), 0.0);
  EXPECT_THROW(optimal_local_fraction(1, 1, 5, 0, 0.1), DegenerateArrival);
}

TEST(OptimalLocalFraction, WholeUnitActivation) {
  // 9 energy at 2 per unit activates 4 units, not 4.5
  EXPECT_NEAR(optimal_local_fraction(9, 2, 10, 100, 0.05), 0.2, 1e-12);
  EXPECT_NEAR(optimal_local_fraction(9, 2, 10, 100, 0.05, Activation::continuous), 0.25, 1e-12);
}

// Bisection on response_time_local(alpha) = theta agrees with the closed form.
TEST(OptimalLocalFraction, AgreesWithBisection) {
  Rng rng(11);
  int checked = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    double w = 1 + 49 * rng.uniform();
    double units = std::floor(1 + 20 * rng.uniform());
    double lam = 1 + 300 * rng.uniform();
    double theta = 0.01 + 0.2 * rng.uniform();
    double cap = w * units;
    double a = optimal_local_fraction(units, 1.0, w, lam, theta);
    if (a <= 0.0 || a >= 1.0) continue;
    double lo = 0.0, hi = std::min(1.0, cap / lam * (1 - 1e-15));
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      (response_time_local(mid, lam, cap) <= theta ? lo : hi) = mid;
    }
    EXPECT_NEAR(a, lo, 1e-9);
    ++checked;
  }
  EXPECT_GT(checked, 300);
}

TEST(ResponseTimeForwarding, MonotoneProperties) {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 3;
    Matrix a = Matrix::square(n);
    std::vector<double> cap(n), lam(n);
    Matrix rtt = Matrix::square(n);
    for (std::size_t i = 0; i < n; ++i) {
      lam[i] = 5 + 20 * rng.uniform();
      cap[i] = 100 + 100 * rng.uniform();
      double left = 1.0;
      for (std::size_t m = 0; m < n; ++m) {
        double f = left * rng.uniform() * 0.6;
        a(i, m) = f;
        left -= f;
      }
      for (std::size_t m = 0; m < i; ++m) rtt(i, m) = rtt(m, i) = 0.05 * rng.uniform();
    }
    double base = response_time_forwarding(0, a, cap, lam, rtt);
    Matrix a2 = a;
    a2(0, 1) += 0.05;
    EXPECT_GE(response_time_forwarding(0, a2, cap, lam, rtt), base - 1e-12);
    auto lam2 = lam;
    lam2[2] += 3.0;
    EXPECT_GE(response_time_forwarding(0, a, cap, lam2, rtt), base - 1e-12);
    auto cap2 = cap;
    cap2[0] += 5.0;
    if (a(0, 0) > 0) {
      EXPECT_LT(response_time_forwarding(0, a, cap2, lam, rtt), base);
    }
  }
}
