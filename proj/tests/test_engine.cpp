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
#include <cmath>
#include <cstdlib>

#include "fogslice/engine.hpp"

using namespace fogslice;
using engine::Policy;
using engine::PolicyKind;
using json = nlohmann::json;

namespace {

json base(double harvest, double cap, std::size_t count, double lambda) {
  json j = json::parse(R"({
    "slots": 12, "gamma": 0.9, "initial_battery": 0,
    "services": [{"name": "a", "deadline": 0.1, "reward": 2, "unit_rate": 10,
                  "arrival": {"preset": "constant", "value": 60}}],
    "nodes": {"max_units": 10, "unit_energy": 1, "battery_cap": 20},
    "harvest": {"preset": "constant", "value": 5},
    "topology": {"source": "synthetic", "count": 1, "radius": 300, "rings": 2, "decay": 0.5},
    "neighbors": {"radius": 1000, "k": 1, "rtt": 0.01},
    "agent": {"depth": 1, "action_levels": 0}
  })");
  j["harvest"]["value"] = harvest;
  j["nodes"]["battery_cap"] = cap;
  j["topology"]["count"] = count;
  j["services"][0]["arrival"]["value"] = lambda;
  return j;
}

report::ExperimentReport run(const json& j, const std::string& policy, std::uint64_t seed = 3) {
  return engine::run_episode(config::parse(j), Policy::parse(policy), seed);
}

}  // namespace

TEST(PolicyParse, NamesRoundTrip) {
  for (std::string s : {"no_coop", "nearest_neighbor", "radius_coop", "myopic", "bpomdp:4"})
    EXPECT_EQ(Policy::parse(s).name(), s);
  EXPECT_EQ(Policy::parse("bpomdp", 3).name(), "bpomdp:3");
  EXPECT_EQ(Policy::parse("myopic").lookahead(), 0);
  EXPECT_FALSE(Policy::parse("radius_coop").learns());
  for (std::string s : {"", "bpomdp:", "bpomdp:x", "bpomdp:-1", "greedy"})
    EXPECT_THROW(Policy::parse(s), ConfigError) << s;
}

TEST(Episode, NoHarvestNoReward) {
  auto r = run(base(0, 20, 3, 60), "radius_coop");
  auto a = report::aggregate(r);
  EXPECT_EQ(a.total_offloaded, 0.0);
  for (double d : a.discounted_reward) EXPECT_EQ(d, 0.0);
  EXPECT_EQ(r.records.size(), 12u);
}

// One node, one service: with u whole units the deadline admits
// u*rate - 1/theta requests/s.
TEST(Episode, IsolatedNodeMatchesClosedForm) {
  for (std::string pol : {"no_coop", "radius_coop"}) {
    auto r = run(base(5, 20, 1, 60), pol);
    for (const auto& rec : r.records) {
      const auto& n = rec.nodes[0];
      double units = std::min(std::floor(n.battery + 1e-9), 10.0);
      double served = std::clamp(units * 10.0 - 10.0, 0.0, 60.0);
      EXPECT_NEAR(n.offloaded[0], served, 1e-6) << pol << " slot " << rec.slot;
      EXPECT_NEAR(n.reward, 2.0 * served, 2e-6);
    }
    EXPECT_EQ(r.records[0].nodes[0].reward, 0.0);
    EXPECT_GT(r.records[1].nodes[0].reward, 0.0);
  }
}

TEST(Episode, BatteryAndRewardBookkeeping) {
  auto j = base(5, 20, 4, 60);
  j["harvest"] = json::parse(R"({"preset": "uniform", "max": 12, "levels": 4})");
  j["services"][0]["arrival"] = json::parse(R"({"preset": "uniform", "max": 120, "levels": 4})");
  for (std::string pol : {"no_coop", "nearest_neighbor", "radius_coop", "myopic", "bpomdp:1"}) {
    auto r = run(j, pol, 11);
    for (std::size_t t = 0; t < r.records.size(); ++t) {
      double slot_reward = 0.0, slot_offloaded = 0.0;
      for (std::size_t i = 0; i < r.node_count; ++i) {
        const auto& n = r.records[t].nodes[i];
        EXPECT_LE(n.consumed, n.battery + 1e-9);
        EXPECT_LE(n.consumed, n.budget + 1e-9);
        EXPECT_EQ(n.consumed, std::floor(n.consumed));
        EXPECT_GE(n.share[0], -1e-9);
        EXPECT_LE(n.share[0], 1.0 + 1e-9);
        EXPECT_LE(n.offloaded[0], n.arrival[0] + 1e-6);
        EXPECT_NEAR(n.offloaded[0], n.share[0] * n.arrival[0], 1e-9);
        slot_reward += n.reward;
        slot_offloaded += n.offloaded[0];
        if (t + 1 < r.records.size())
          EXPECT_DOUBLE_EQ(r.records[t + 1].nodes[i].battery, env::battery_step(n.battery, n.harvested, n.consumed, 20))
              << pol << " node " << i << " slot " << t;
      }
      EXPECT_NEAR(slot_reward, 2.0 * slot_offloaded, 1e-6 * std::max(1.0, slot_reward)) << pol;
    }
    EXPECT_EQ(r.beliefs.is_null(), !Policy::parse(pol).learns());
  }
}

// Harvest at or above the cap refills every battery each slot, so both
// policies face the same batteries and arrivals every slot.
TEST(Episode, RadiusCooperationNeverBelowNoCooperation) {
  auto j = base(8, 8, 5, 60);
  j["services"][0]["arrival"] = json::parse(R"({"preset": "uniform", "max": 100, "levels": 5})");
  j["slots"] = 8;
  for (std::uint64_t seed : {1, 2, 3}) {
    auto nc = run(j, "no_coop", seed), rc = run(j, "radius_coop", seed);
    for (std::size_t t = 0; t < nc.records.size(); ++t) {
      double a = 0.0, b = 0.0;
      for (std::size_t i = 0; i < nc.node_count; ++i) {
        EXPECT_EQ(nc.records[t].nodes[i].arrival, rc.records[t].nodes[i].arrival);
        a += nc.records[t].nodes[i].reward;
        b += rc.records[t].nodes[i].reward;
      }
      EXPECT_GE(b, a - 1e-6 * std::max(1.0, a)) << "seed " << seed << " slot " << t;
    }
  }
}

TEST(Episode, LearnedBeliefsAreDistributions) {
  auto j = base(5, 20, 3, 60);
  j["harvest"] = json::parse(R"({"preset": "bursty", "low": 0, "high": 6, "persistence": 0.7})");
  auto r = run(j, "bpomdp:2", 5);
  ASSERT_EQ(r.beliefs.size(), 3u);
  for (const auto& node : r.beliefs) {
    double s = 0.0;
    for (double v : node["harvest_belief"]) s += v;
    EXPECT_NEAR(s, 1.0, 1e-9);
    for (const auto& per_neighbor : node["type_means"])
      for (const auto& per_state : per_neighbor) {
        double t = 0.0;
        for (double v : per_state) t += v;
        EXPECT_NEAR(t, 1.0, 1e-9);
      }
  }
}

TEST(Episode, DeterministicInSeed) {
  auto j = base(5, 20, 4, 60);
  j["harvest"] = json::parse(R"({"preset": "uniform", "max": 12, "levels": 4})");
  EXPECT_EQ(report::to_csv(run(j, "myopic", 9)), report::to_csv(run(j, "myopic", 9)));
  EXPECT_NE(report::to_csv(run(j, "myopic", 9)), report::to_csv(run(j, "myopic", 10)));
}

TEST(Backlogged, ArrivalsPinnedAtTop) {
  auto j = base(5, 20, 2, 60);
  j["backlogged"] = true;
  j["services"][0]["arrival"] = json::parse(R"({"preset": "uniform", "max": 90, "levels": 4})");
  for (std::string pol : {"radius_coop", "myopic"})
    for (const auto& rec : run(j, pol).records)
      for (const auto& n : rec.nodes) EXPECT_EQ(n.arrival[0], 90.0);
}

TEST(Sweep, LayoutAndThreadIndependence) {
  auto j = base(5, 20, 3, 60);
  j["harvest"] = json::parse(R"({"preset": "uniform", "max": 12, "levels": 4})");
  std::vector<Policy> pols{Policy::parse("no_coop"), Policy::parse("radius_coop")};
  std::vector<json> values{40, 80};
  ::setenv("FOGSLICE_THREADS", "1", 1);
  auto one = engine::run_sweep(j, "services.0.arrival.value", values, 2, pols, 4);
  ::setenv("FOGSLICE_THREADS", "4", 1);
  auto four = engine::run_sweep(j, "services.0.arrival.value", values, 2, pols, 4);
  ::unsetenv("FOGSLICE_THREADS");
  ASSERT_EQ(one.reports.size(), 8u);
  ASSERT_EQ(one.summary.size(), 4u);
  for (std::size_t t = 0; t < 8; ++t) EXPECT_EQ(report::to_csv(one.reports[t]), report::to_csv(four.reports[t]));
  EXPECT_EQ(one.summary[3].policy, "radius_coop");
  EXPECT_EQ(one.summary[3].value, 80);
  EXPECT_EQ(one.reports[5].seed, 5u);  // value 1, policy 0, replication 1
  EXPECT_EQ(one.reports[5].records[0].nodes[0].arrival[0], 80.0);
}

TEST(Sweep, EmptyAndInvalid) {
  auto j = base(5, 20, 2, 60);
  auto r = engine::run_sweep(j, "gamma", {}, 3, {Policy::parse("no_coop")});
  EXPECT_TRUE(r.reports.empty());
  EXPECT_TRUE(r.summary.empty());
  EXPECT_THROW(engine::run_sweep(j, "nodes.bogus", {json(1)}, 1, {Policy::parse("no_coop")}), ConfigError);
  EXPECT_THROW(engine::run_sweep(j, "gamma", {json(2.0)}, 1, {Policy::parse("no_coop")}), ConfigError);
}
