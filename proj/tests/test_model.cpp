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

#include <algorithm>

#include "fogslice/model.hpp"

using namespace fogslice;

namespace {

NetworkSpec two_nodes() {
  NetworkSpec net;
  net.services = {{0, "a", 0.1, 1.0, 10.0}};
  net.nodes.resize(2);
  for (std::size_t i = 0; i < 2; ++i) {
    net.nodes[i].id = i;
    net.nodes[i].max_units = 10;
  }
  net.neighbors = {{1}, {0}};
  net.rtt = Matrix::from_rows({{0, 0.02}, {0.02, 0}});
  return net;
}

SlotState slot(double b0, double b1, double l0, double l1) {
  SlotState s;
  s.battery = {b0, b1};
  s.arrivals = Matrix::from_rows({{l0}, {l1}});
  s.harvested_prev = {0, 0};
  return s;
}

SlicingAgreement empty_agreement(std::size_t n, std::size_t kk) {
  SlicingAgreement agr;
  agr.energy = EnergyDistribution(n, kk);
  agr.offload.assign(kk, OffloadMatrix::square(n));
  return agr;
}

bool has(const std::vector<Violation>& v, Constraint c, std::size_t node) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.constraint == c && x.node == node; });
}

}  // namespace

TEST(Validate, ZeroAgreementIsFeasible) {
  auto net = two_nodes();
  EXPECT_TRUE(validate_agreement(net, slot(5, 5, 40, 40), empty_agreement(2, 1)).empty());
}

TEST(Validate, CapacityViolation) {
  auto net = two_nodes();
  auto agr = empty_agreement(2, 1);
  agr.energy(0, 0) = 5;  // 50 req/s
  agr.offload[0](0, 0) = 1.0;
  auto v = validate_agreement(net, slot(5, 0, 60, 0), agr);
  EXPECT_TRUE(has(v, Constraint::compute_capacity, 0));
  EXPECT_TRUE(has(v, Constraint::deadline, 0));
}

TEST(Validate, BudgetViolation) {
  auto net = two_nodes();
  auto agr = empty_agreement(2, 1);
  agr.energy(1, 0) = 6;
  auto v = validate_agreement(net, slot(5, 5, 0, 0), agr);
  ASSERT_TRUE(has(v, Constraint::energy_budget, 1));
  EXPECT_FALSE(has(v, Constraint::energy_budget, 0));
}

TEST(Validate, StructuralChecks) {
  auto net = two_nodes();
  net.neighbors = {{}, {}};
  auto agr = empty_agreement(2, 1);
  agr.energy(1, 0) = 5;
  agr.offload[0](0, 1) = 0.6;
  agr.offload[0](0, 0) = 0.6;
  agr.offload[0](1, 1) = -0.1;
  auto v = validate_agreement(net, slot(0, 5, 10, 10), agr);
  EXPECT_TRUE(has(v, Constraint::non_neighbor, 0));
  EXPECT_TRUE(has(v, Constraint::offload_sum, 0));
  EXPECT_TRUE(has(v, Constraint::negative_fraction, 1));
}

TEST(Validate, UnitLimit) {
  auto net = two_nodes();
  auto agr = empty_agreement(2, 1);
  agr.energy(0, 0) = 11;
  auto v = validate_agreement(net, slot(20, 0, 0, 0), agr);
  EXPECT_TRUE(has(v, Constraint::unit_limit, 0));
}

TEST(Validate, FeasibleForwardingPasses) {
  auto net = two_nodes();
  auto agr = empty_agreement(2, 1);
  agr.energy(1, 0) = 10;  // 100 req/s at node 1
  agr.offload[0](0, 1) = 1.0;
  agr.offload[0](1, 1) = 1.0;
  // load 60 at node 1: delay 1/40 + 0.02 = 0.045 <= 0.1
  EXPECT_TRUE(validate_agreement(net, slot(0, 10, 30, 30), agr).empty());
}

TEST(Validate, DimensionMismatchIsStructural) {
  auto net = two_nodes();
  auto agr = empty_agreement(3, 1);
  EXPECT_THROW(validate_agreement(net, slot(1, 1, 1, 1), agr), DimensionMismatch);
}

TEST(Validate, PureFunction) {
  auto net = two_nodes();
  auto agr = empty_agreement(2, 1);
  agr.energy(0, 0) = 9;
  agr.offload[0](0, 0) = 1.0;
  auto s = slot(5, 5, 80, 0);
  EXPECT_EQ(validate_agreement(net, s, agr), validate_agreement(net, s, agr));
}

TEST(Specs, Invariants) {
  ServiceTypeSpec s{0, "x", 0.0, 1.0, 10.0};
  EXPECT_THROW(s.validate(), ConfigError);
  FogNodeSpec n;
  n.max_units = 0;
  EXPECT_THROW(n.validate(), ConfigError);
  n.max_units = 1;
  n.battery_cap = 0;
  EXPECT_THROW(n.validate(), ConfigError);
}
