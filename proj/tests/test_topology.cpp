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
#include <numbers>
#include <sstream>
#include <string>

#include "fogslice/topology.hpp"

using namespace fogslice;
using namespace fogslice::topology;

namespace {

std::vector<Site> read(const std::string& text, CoordinateMode mode = CoordinateMode::meters) {
  std::istringstream in(text);
  return read_positions(in, mode);
}

std::size_t error_line(const std::string& text) {
  try {
    read(text);
  } catch (const PositionParseError& e) {
    return e.line();
  }
  return 0;
}

std::vector<Position> line_of(std::size_t n, double spacing) {
  std::vector<Position> p;
  for (std::size_t i = 0; i < n; ++i) p.push_back({spacing * static_cast<double>(i), 0.0});
  return p;
}

}  // namespace

TEST(LoadPositions, WellFormedRows) {
  auto s = read("id,x,y\n# depot\n1,0,0\n2,100.5,-20\n\n7,3e2,4\n");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[1].id, 2);
  EXPECT_EQ(s[1].position, (Position{100.5, -20}));
  EXPECT_EQ(s[2].position, (Position{300, 4}));
}

TEST(LoadPositions, ErrorsNameTheLine) {
  EXPECT_EQ(error_line("1,0,0\n2,5,5\n1,9,9\n"), 3u);
  EXPECT_EQ(error_line("id,x,y\n1,0,0\n2,abc,5\n"), 3u);
  EXPECT_EQ(error_line("1,0,0\n2,5\n"), 2u);
  EXPECT_EQ(error_line("1,0,0\n2.5,1,1\n"), 2u);
  EXPECT_EQ(error_line("1,0,0\nid,x,y\n"), 2u);  // a header only counts first
  EXPECT_THROW(load_positions("/nonexistent/positions.csv"), std::runtime_error);
}

TEST(LoadPositions, LonLatProjection) {
  auto s = read("1,-6.26,53\n2,-6.25,53\n", CoordinateMode::lonlat);
  double d = distance(s[0].position, s[1].position);
  double expected = kEarthRadius * 0.01 * std::numbers::pi / 180.0 * std::cos(53.0 * std::numbers::pi / 180.0);
  EXPECT_NEAR(d, expected, 1e-6);
  EXPECT_NEAR(d, 666.0, 0.01 * 666.0);
  EXPECT_THROW(read("1,0,95\n", CoordinateMode::lonlat), PositionParseError);
}

TEST(BuildNeighbors, NearestTieGoesToLowerIndex) {
  auto t = build_neighbors(line_of(3, 100), NeighborRule::nearest(1));
  EXPECT_EQ(t.neighbors[1], (std::vector<std::size_t>{0}));
  EXPECT_EQ(t.neighbors[0], (std::vector<std::size_t>{1}));
  EXPECT_EQ(t.neighbors[2], (std::vector<std::size_t>{1}));
}

TEST(BuildNeighbors, RadiusClusterIsComplete) {
  // equilateral triangle with 400 m sides
  std::vector<Position> p{{0, 0}, {400, 0}, {200, 400 * std::sqrt(3.0) / 2}};
  auto t = build_neighbors(p, NeighborRule::within(500));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(t.neighbors[i].size(), 2u);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(t.rtt(i, j), i == j ? 0.0 : 0.020);
  }
}

TEST(BuildNeighbors, RadiusIsSymmetricAndIrreflexive) {
  for (int trial = 0; trial < 20; ++trial) {
    auto p = synth_topology(25, {}, 100 + trial);
    auto t = build_neighbors(p, NeighborRule::within(300 + 20 * trial));
    for (std::size_t i = 0; i < t.size(); ++i) {
      EXPECT_EQ(std::count(t.neighbors[i].begin(), t.neighbors[i].end(), i), 0);
      for (std::size_t j : t.neighbors[i]) {
        auto& back = t.neighbors[j];
        EXPECT_TRUE(std::find(back.begin(), back.end(), i) != back.end());
        EXPECT_LE(distance(p[i], p[j]), 300 + 20 * trial);
      }
      for (std::size_t j = 0; j < t.size(); ++j) {
        EXPECT_EQ(t.rtt(i, j), t.rtt(j, i));
        bool linked = std::find(t.neighbors[i].begin(), t.neighbors[i].end(), j) != t.neighbors[i].end();
        if (i != j) {
          EXPECT_EQ(std::isfinite(t.rtt(i, j)), linked);
        }
      }
    }
  }
}

TEST(BuildNeighbors, NearestIsNotSymmetric) {
  // node 2 is far out: its nearest is 1, but 1's nearest is 0
  auto t = build_neighbors({{0, 0}, {10, 0}, {100, 0}}, NeighborRule::nearest(1));
  EXPECT_EQ(t.neighbors[2], (std::vector<std::size_t>{1}));
  EXPECT_EQ(t.neighbors[1], (std::vector<std::size_t>{0}));
  EXPECT_TRUE(std::isfinite(t.rtt(1, 2)));  // the link exists for the sender
}

TEST(BuildNeighbors, DistanceProportionalRtt) {
  auto t = build_neighbors(line_of(3, 250), NeighborRule::within(600), RttModel{0.005, 1e-5});
  EXPECT_NEAR(t.rtt(0, 1), 0.0075, 1e-15);
  EXPECT_NEAR(t.rtt(0, 2), 0.010, 1e-15);
}

TEST(BuildNeighbors, IsolatedNodesAllowed) {
  auto t = build_neighbors({{0, 0}, {5000, 0}}, NeighborRule::within(500));
  EXPECT_TRUE(t.neighbors[0].empty());
  EXPECT_TRUE(std::isinf(t.rtt(0, 1)));
  EXPECT_THROW(build_neighbors({}, NeighborRule::within(500)), ConfigError);
}

TEST(SynthTopology, DeterministicPerSeed) {
  EXPECT_EQ(synth_topology(30, {}, 7), synth_topology(30, {}, 7));
  EXPECT_NE(synth_topology(30, {}, 7), synth_topology(30, {}, 8));
  EXPECT_EQ(synth_topology(1, {}, 3), std::vector<Position>{Position{}});
}

TEST(SynthTopology, CenterDenserThanEdge) {
  DensityProfile prof;  // 5 rings, decay 0.5
  const double w = prof.radius / static_cast<double>(prof.rings);
  double center = 0, outer = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed)
    for (const auto& p : synth_topology(200, prof, seed)) {
      double r = std::hypot(p.x, p.y);
      EXPECT_LE(r, prof.radius + 1e-9);
      if (r < w) center += 1;
      if (r >= prof.radius - w) outer += 1;
    }
  double center_area = w * w, outer_area = prof.radius * prof.radius - (prof.radius - w) * (prof.radius - w);
  EXPECT_GE((center / center_area) / (outer / outer_area), 4.0);
}

TEST(SynthPairs, PartnersAtOffset) {
  auto p = synth_pairs(10, {}, 50, 4);
  ASSERT_EQ(p.size(), 10u);
  for (std::size_t m = 0; m < 5; ++m) EXPECT_NEAR(distance(p[2 * m], p[2 * m + 1]), 50.0, 1e-9);
  EXPECT_THROW(synth_pairs(5, {}, 50, 4), ConfigError);
}
