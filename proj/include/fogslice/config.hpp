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

// Experiment configuration. The JSON document is kept verbatim so sweeps
// can override any key by dotted path and re-parse.
//
// {
//   "slots": 50, "gamma": 0.9, "backlogged": false, "initial_battery": 0,
//   "services": [{"name": "image", "deadline": 0.05, "reward": 1, "unit_rate": 10,
//                 "arrival": <chain>}, ...],
//   "nodes": {"max_units": 100, "unit_energy": 1, "battery_cap": 100},
//   "harvest": <chain> | [<chain>, ...],   (node i uses entry i mod size; uniform
//                                           levels are rounded to whole units)
//   "harvest_correlation": 0,
//   "topology": {"source": "synthetic", "count": 20, "radius": 2000, "rings": 5,
//                "decay": 0.5, "seed": null, "pair_offset": 0}
//             | {"source": "csv", "path": "sites.csv", "coordinates": "meters"},
//   "neighbors": {"radius": 500, "k": 1, "rtt": 0.02, "rtt_per_meter": 0},
//   "agent": {"depth": 2, "action_levels": 11, "type_surplus": 10, "prior": 1},
//   "solver": {"max_rounds": 200, "max_evaluations": 0, "offload_iterations": 400,
//              "load_evaluations": 4000}
// }
//
// <chain> is {"preset": "uniform", "max": M, "levels": 5}
//          | {"preset": "bursty", "low": L, "high": H, "persistence": P}
//          | {"preset": "constant", "value": V}
//          | {"levels": [...], "transition": [[...], ...]}

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fogslice/env.hpp"
#include "fogslice/game/welfare.hpp"
#include "fogslice/model.hpp"
#include "fogslice/topology.hpp"

namespace fogslice::config {

using json = nlohmann::json;

struct TopologyConfig {
  enum class Source { synthetic, csv } source = Source::synthetic;
  std::size_t count = 20;
  topology::DensityProfile profile;
  std::optional<std::uint64_t> seed;  // empty: derived from the episode seed
  double pair_offset = 0.0;           // > 0: co-sited pairs, see topology::synth_pairs
  std::string path;
  topology::CoordinateMode coordinates = topology::CoordinateMode::meters;
};

struct AgentConfig {
  int depth = 2;
  std::size_t action_levels = 11;
  double type_surplus = 10.0;
  double prior = 1.0;
};

struct Config {
  json raw;
  std::size_t slots = 50;
  double gamma = 0.9;
  bool backlogged = false;
  double initial_battery = 0.0;
  std::vector<ServiceTypeSpec> services;
  std::vector<env::MarkovChainSpec> arrival;  // per service
  FogNodeSpec node;                           // template for every node
  std::vector<env::MarkovChainSpec> harvest;  // node i uses harvest[i % size]
  double harvest_correlation = 0.0;
  TopologyConfig topology;
  double radius = 500.0;
  std::size_t k = 1;
  topology::RttModel rtt;
  AgentConfig agent;
  game::WelfareOptions solver;
};

namespace detail {

inline double num(const json& j, const char* key, double def) {
  if (!j.contains(key) || j[key].is_null()) return def;
  if (!j[key].is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  return j[key].get<double>();
}

inline std::size_t count(const json& j, const char* key, std::size_t def) {
  double v = num(j, key, static_cast<double>(def));
  if (v < 0.0 || v != std::floor(v)) throw ConfigError(std::string("'") + key + "' must be a nonnegative integer");
  return static_cast<std::size_t>(v);
}

inline void whole(double v, const std::string& what) {
  if (v < 0.0 || std::fabs(v - std::round(v)) > 1e-9)
    throw ConfigError(what + " must be a whole number of energy units");
}

}  // namespace detail

/// Energy chains round uniform-preset levels to whole units.
inline env::MarkovChainSpec parse_chain(const json& j, const std::string& what, bool energy = false) {
  if (!j.is_object()) throw ConfigError(what + ": chain must be an object");
  env::MarkovChainSpec c;
  std::string preset = j.value("preset", std::string());
  if (preset == "uniform") {
    c = env::uniform_chain(detail::num(j, "min", 0.0), detail::num(j, "max", 0.0), detail::count(j, "levels", 5));
    if (energy)
      for (double& v : c.levels) v = std::round(v);
  } else if (preset == "bursty") {
    c = env::bursty_chain(detail::num(j, "low", 0.0), detail::num(j, "high", 0.0), detail::num(j, "persistence", 0.9));
  } else if (preset == "constant") {
    c = env::constant_chain(detail::num(j, "value", 0.0));
  } else if (preset.empty()) {
    if (!j.contains("levels") || !j.contains("transition")) throw ConfigError(what + ": needs levels and transition");
    try {
      c.levels = j["levels"].get<std::vector<double>>();
      c.transition = Matrix::from_rows(j["transition"].get<std::vector<std::vector<double>>>());
    } catch (const json::exception& e) {
      throw ConfigError(what + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(what + ": " + e.what());
    }
  } else {
    throw ConfigError(what + ": unknown preset '" + preset + "'");
  }
  c.validate(what);
  return c;
}

/// Parses and validates. Throws ConfigError.
inline Config parse(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  Config c;
  c.raw = j;
  c.slots = detail::count(j, "slots", 50);
  c.gamma = detail::num(j, "gamma", 0.9);
  if (c.gamma < 0.0 || c.gamma > 1.0) throw ConfigError("gamma must lie in [0, 1]");
  if (j.contains("backlogged")) {
    if (!j["backlogged"].is_boolean()) throw ConfigError("'backlogged' must be true or false");
    c.backlogged = j["backlogged"].get<bool>();
  }

  const json nodes = j.value("nodes", json::object());
  c.node.max_units = static_cast<int>(detail::count(nodes, "max_units", 100));
  c.node.unit_energy = detail::num(nodes, "unit_energy", 1.0);
  c.node.battery_cap = detail::num(nodes, "battery_cap", 100.0);
  c.node.validate();
  detail::whole(c.node.unit_energy, "nodes.unit_energy");
  detail::whole(c.node.battery_cap, "nodes.battery_cap");
  c.initial_battery = detail::num(j, "initial_battery", 0.0);
  detail::whole(c.initial_battery, "initial_battery");
  if (c.initial_battery > c.node.battery_cap) throw ConfigError("initial_battery exceeds battery_cap");

  if (!j.contains("services") || !j["services"].is_array() || j["services"].empty())
    throw ConfigError("'services' must be a nonempty array");
  for (const auto& s : j["services"]) {
    ServiceTypeSpec spec;
    spec.id = c.services.size();
    spec.name = s.value("name", "service" + std::to_string(spec.id));
    spec.deadline_theta = detail::num(s, "deadline", 0.1);
    spec.reward_rho = detail::num(s, "reward", 1.0);
    spec.unit_rate = detail::num(s, "unit_rate", 10.0);
    spec.validate();
    c.services.push_back(spec);
    if (!s.contains("arrival")) throw ConfigError("service " + spec.name + " needs an arrival chain");
    c.arrival.push_back(parse_chain(s["arrival"], "services." + spec.name + ".arrival"));
  }

  if (!j.contains("harvest")) throw ConfigError("'harvest' chain required");
  const json& h = j["harvest"];
  if (h.is_array()) {
    if (h.empty()) throw ConfigError("'harvest' array must be nonempty");
    for (std::size_t i = 0; i < h.size(); ++i) c.harvest.push_back(parse_chain(h[i], "harvest." + std::to_string(i), true));
  } else {
    c.harvest.push_back(parse_chain(h, "harvest", true));
  }
  for (const auto& chain : c.harvest)
    for (double v : chain.levels) detail::whole(v, "harvest level");
  c.harvest_correlation = detail::num(j, "harvest_correlation", 0.0);
  if (c.harvest_correlation < 0.0 || c.harvest_correlation > 1.0)
    throw ConfigError("harvest_correlation must lie in [0, 1]");

  const json topo = j.value("topology", json::object());
  std::string src = topo.value("source", std::string("synthetic"));
  if (src == "synthetic") {
    c.topology.source = TopologyConfig::Source::synthetic;
    c.topology.count = detail::count(topo, "count", 20);
    if (c.topology.count == 0) throw ConfigError("topology.count must be >= 1");
    c.topology.profile.radius = detail::num(topo, "radius", 2000.0);
    c.topology.profile.rings = detail::count(topo, "rings", 5);
    c.topology.profile.decay = detail::num(topo, "decay", 0.5);
    if (!(c.topology.profile.radius > 0.0) || c.topology.profile.rings == 0 || !(c.topology.profile.decay > 0.0))
      throw ConfigError("invalid topology density profile");
    if (topo.contains("seed") && !topo["seed"].is_null()) c.topology.seed = detail::count(topo, "seed", 0);
    c.topology.pair_offset = detail::num(topo, "pair_offset", 0.0);
    if (c.topology.pair_offset < 0.0) throw ConfigError("topology.pair_offset must be nonnegative");
    if (c.topology.pair_offset > 0.0 && c.topology.count % 2 != 0)
      throw ConfigError("topology.count must be even with pair_offset");
  } else if (src == "csv") {
    c.topology.source = TopologyConfig::Source::csv;
    c.topology.path = topo.value("path", std::string());
    if (c.topology.path.empty()) throw ConfigError("topology.path required for csv source");
    std::string mode = topo.value("coordinates", std::string("meters"));
    if (mode == "lonlat") c.topology.coordinates = topology::CoordinateMode::lonlat;
    else if (mode != "meters") throw ConfigError("topology.coordinates must be meters or lonlat");
  } else {
    throw ConfigError("topology.source must be synthetic or csv");
  }

  const json nb = j.value("neighbors", json::object());
  c.radius = detail::num(nb, "radius", 500.0);
  c.k = detail::count(nb, "k", 1);
  c.rtt.constant = detail::num(nb, "rtt", 0.020);
  c.rtt.per_meter = detail::num(nb, "rtt_per_meter", 0.0);
  if (c.radius < 0.0 || c.rtt.constant < 0.0 || c.rtt.per_meter < 0.0)
    throw ConfigError("neighbor radius and rtt must be nonnegative");

  const json ag = j.value("agent", json::object());
  c.agent.depth = static_cast<int>(detail::count(ag, "depth", 2));
  c.agent.action_levels = detail::count(ag, "action_levels", 11);
  c.agent.type_surplus = detail::num(ag, "type_surplus", c.node.max_units / 10.0);
  c.agent.prior = detail::num(ag, "prior", 1.0);
  if (!(c.agent.prior > 0.0)) throw ConfigError("agent.prior must be positive");
  if (c.agent.type_surplus < 0.0 || c.agent.type_surplus > c.node.max_units)
    throw ConfigError("agent.type_surplus must lie in [0, max_units]");

  const json sv = j.value("solver", json::object());
  c.solver.max_rounds = static_cast<int>(detail::count(sv, "max_rounds", 200));
  c.solver.max_evaluations = detail::count(sv, "max_evaluations", 0);
  c.solver.offload.max_iterations = static_cast<int>(detail::count(sv, "offload_iterations", 400));
  c.solver.offload.max_load_evaluations = detail::count(sv, "load_evaluations", 4000);
  return c;
}

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline Config load(const std::string& path) { return parse(read_json(path)); }

/// Overrides an existing key addressed by a dotted path ("a.b.0.c"). Array
/// elements are addressed by index. Throws ConfigError if the key is absent.
inline void set_key(json& j, const std::string& dotted, const json& value) {
  json* cur = &j;
  std::stringstream ss(dotted);
  std::vector<std::string> parts;
  for (std::string p; std::getline(ss, p, '.');) parts.push_back(p);
  if (parts.empty()) throw ConfigError("empty config key");
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string& p = parts[i];
    json* next = nullptr;
    if (cur->is_object() && cur->contains(p)) {
      next = &(*cur)[p];
    } else if (cur->is_array() && !p.empty() && p.find_first_not_of("0123456789") == std::string::npos &&
               std::stoul(p) < cur->size()) {
      next = &(*cur)[std::stoul(p)];
    }
    if (!next) throw ConfigError("config has no key '" + dotted + "'");
    cur = next;
  }
  *cur = value;
}

/// Worker threads for sweeps: FOGSLICE_THREADS if set, else the hardware
/// concurrency.
inline std::size_t thread_count() {
  if (const char* v = std::getenv("FOGSLICE_THREADS")) {
    char* end = nullptr;
    long n = std::strtol(v, &end, 10);
    if (end != v && *end == '\0' && n >= 1) return static_cast<std::size_t>(n);
    throw ConfigError("FOGSLICE_THREADS must be a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace fogslice::config
