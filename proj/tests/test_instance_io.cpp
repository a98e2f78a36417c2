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

#include <sstream>
#include <string>

#include "fogslice/game/instance_io.hpp"
#include "fogslice/game/welfare.hpp"
#include "game_fixtures.hpp"

using namespace fogslice;
using namespace fogslice::game;
namespace fx = fogslice::fixtures;

namespace {

StoredInstance parse(const std::string& text) {
  std::istringstream in(text);
  return read_instance(in);
}

std::size_t error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const InstanceParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST(InstanceIo, ParsesRecordsInAnyOrder) {
  auto s = parse(
      "# two nodes\n"
      "arrival 1 0 20\n"
      "node 1 4 1 3\n"
      "rtt 0 1 0.02\n"
      "service 0 0.1 1 10\n"
      "node 0 4 1 2 1.5   # faster hardware\n"
      "neighbors 0 1\n"
      "arrival 0 0 30\n"
      "\n"
      "grid 0.1\n");
  ASSERT_EQ(s.game.node_count(), 2u);
  EXPECT_EQ(s.budgets, (std::vector<double>{2, 3}));
  EXPECT_EQ(s.game.network.nodes[0].rate_multiplier, 1.5);
  EXPECT_EQ(s.game.network.neighbors[0], (std::vector<std::size_t>{1}));
  EXPECT_TRUE(s.game.network.neighbors[1].empty());
  EXPECT_EQ(s.game.network.rtt(1, 0), 0.02);
  EXPECT_EQ(s.game.arrivals(0, 0), 30.0);
  EXPECT_EQ(s.grid, 0.1);
}

TEST(InstanceIo, RoundTripIsExact) {
  for (std::uint64_t seed : {3, 14}) {
    auto g = fx::seeded_game(seed);
    StoredInstance s{g.game, g.budgets, 0.05};
    std::ostringstream os;
    write_instance(os, s);
    auto back = parse(os.str());
    EXPECT_EQ(back.budgets, s.budgets);
    EXPECT_EQ(back.game.arrivals, s.game.arrivals);
    EXPECT_EQ(back.game.network.rtt, s.game.network.rtt);
    EXPECT_EQ(back.game.network.neighbors, s.game.network.neighbors);
    EXPECT_EQ(welfare(solve_social_welfare(back.game, back.budgets)), welfare(solve_social_welfare(g.game, g.budgets)));
    std::ostringstream again;
    write_instance(again, back);
    EXPECT_EQ(again.str(), os.str());
  }
}

TEST(InstanceIo, ErrorsCarryLineNumbers) {
  EXPECT_EQ(error_line("service 0 0.1 1 10\nnode 0 4 1\n"), 2u);
  EXPECT_EQ(error_line("service 0 0.1 1 10\nservice 0 0.2 1 10\n"), 2u);
  EXPECT_EQ(error_line("service 0 -0.1 1 10\n"), 1u);
  EXPECT_EQ(error_line("\n\nlink 0 1\n"), 3u);
  EXPECT_EQ(error_line("grid 0\n"), 1u);
  EXPECT_EQ(error_line("rtt 0 1 0.02 extra\n"), 1u);
  EXPECT_EQ(error_line("service 0 0.1 1 10\nnode 0 4 1 2 fast\n"), 2u);
  EXPECT_EQ(error_line("service 0 0.1 1 10\nnode 0 4 1 2 1 9\n"), 2u);
  EXPECT_EQ(error_line("service 0 0.1 1 10\nnode 0 4 1 2\narrival 3 0 5\n"), 3u);
}

TEST(InstanceIo, RejectsNumberingGaps) {
  EXPECT_THROW(parse("service 1 0.1 1 10\nnode 0 4 1 2\n"), ConfigError);
  EXPECT_THROW(parse("service 0 0.1 1 10\nnode 1 4 1 2\n"), ConfigError);
  EXPECT_THROW(parse("service 0 0.1 1 10\nnode 0 4 1 2\nneighbors 0 0\n"), ConfigError);
}
