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


// Command-line front end.
//
//   fogslice run --config F --policy P --seed N --out DIR
//   fogslice sweep --config F --axis KEY --values LIST --reps N --out DIR [--policy P ...]
//   fogslice validate --config F
//   fogslice oracle --instance F [--core]
//
// Exit codes: 0 ok, 1 configuration error, 2 runtime error.

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fogslice/fogslice.hpp"

namespace fs = std::filesystem;
using namespace fogslice;
using json = nlohmann::json;

namespace {

// "10,20,40" -> numbers where they parse, strings otherwise
std::vector<json> parse_values(const std::string& list) {
  std::vector<json> out;
  std::stringstream ss(list);
  for (std::string v; std::getline(ss, v, ',');) {
    if (v.empty()) continue;
    try {
      out.push_back(json::parse(v));
    } catch (const json::parse_error&) {
      out.push_back(v);
    }
  }
  return out;
}

std::string value_label(const json& v) {
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  for (char& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-') c = '_';
  return s;
}

int run(const std::string& cfg_path, const std::string& policy, std::uint64_t seed, const std::string& out) {
  auto cfg = config::load(cfg_path);
  auto pol = engine::Policy::parse(policy, cfg.agent.depth);
  auto rep = engine::run_episode(cfg, pol, seed);
  report::emit(rep, out);
  auto a = report::aggregate(rep);
  std::printf("%s seed %llu: %zu slots, %zu nodes, total offloaded %.6g, uncertified slots %zu\n", pol.name().c_str(),
              static_cast<unsigned long long>(seed), rep.records.size(), rep.node_count, a.total_offloaded,
              a.uncertified_slots);
  return 0;
}

int sweep(const std::string& cfg_path, const std::string& axis, const std::string& values, std::size_t reps,
          std::vector<std::string> policies, std::uint64_t seed, const std::string& out) {
  json base = config::read_json(cfg_path);
  config::parse(base);
  std::vector<engine::Policy> pols;
  int depth = base.contains("agent") ? base["agent"].value("depth", 2) : 2;
  if (policies.empty()) policies.push_back(base.value("policy", std::string("radius_coop")));
  for (const auto& p : policies) pols.push_back(engine::Policy::parse(p, depth));
  auto res = engine::run_sweep(base, axis, parse_values(values), reps, pols, seed);

  fs::create_directories(out);
  std::size_t idx = 0;
  auto vals = parse_values(values);
  for (const auto& v : vals)
    for (const auto& p : pols)
      for (std::size_t r = 0; r < reps; ++r) {
        std::string name = value_label(v) + "_" + value_label(p.name()) + "_rep" + std::to_string(r);
        report::emit(res.reports[idx++], fs::path(out) / name);
      }
  std::ofstream csv(fs::path(out) / "summary.csv", std::ios::binary);
  csv << "# axis " << axis << "; offload = total deadline-met requests/s summed over slots and nodes;\n"
      << "# reward = network discounted reward; stderr over replications\n"
      << "value,policy,reps,mean_offloaded,stderr_offloaded,mean_reward,stderr_reward\n";
  json summary = json::array();
  for (const auto& row : res.summary) {
    csv << value_label(row.value) << ',' << row.policy << ',' << row.reps << ',' << report::fmt(row.mean_offloaded)
        << ',' << report::fmt(row.stderr_offloaded) << ',' << report::fmt(row.mean_reward) << ','
        << report::fmt(row.stderr_reward) << '\n';
    summary.push_back({{"value", row.value},
                       {"policy", row.policy},
                       {"reps", row.reps},
                       {"mean_offloaded", row.mean_offloaded},
                       {"stderr_offloaded", row.stderr_offloaded},
                       {"mean_reward", row.mean_reward},
                       {"stderr_reward", row.stderr_reward}});
    std::printf("%s=%s %s: offloaded %.6g +- %.3g\n", axis.c_str(), value_label(row.value).c_str(),
                row.policy.c_str(), row.mean_offloaded, row.stderr_offloaded);
  }
  csv.close();
  std::ofstream js(fs::path(out) / "summary.json", std::ios::binary);
  js << json{{"axis", axis}, {"rows", summary}}.dump(2) << '\n';
  js.close();
  if (!csv || !js) throw std::runtime_error("cannot write sweep summary in " + out);
  return 0;
}

int validate(const std::string& cfg_path) {
  auto cfg = config::load(cfg_path);
  auto pos = engine::positions(cfg, 0);
  std::printf("ok: %zu services, %zu nodes, %zu slots\n", cfg.services.size(), pos.size(), cfg.slots);
  return 0;
}

int oracle_replay(const std::string& path, bool core) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open instance " + path);
  auto inst = game::read_instance(in);
  auto agr = game::solve_social_welfare(inst.game, inst.budgets);
  double solver = game::welfare(agr);
  auto opt = game::oracle::best_welfare(inst.game, inst.budgets, inst.grid);
  double gap = opt.welfare > 0.0 ? (opt.welfare - solver) / opt.welfare : 0.0;
  bool ok = solver >= opt.welfare - 1e-3 * opt.welfare;
  std::printf("solver welfare %.9g, oracle welfare %.9g (grid %g), relative shortfall %.3g: %s\n", solver,
              opt.welfare, inst.grid, gap, ok ? "agree" : "DISAGREE");
  if (core) {
    auto ca = game::solve_core_agreement(inst.game, inst.budgets);
    auto rep = game::check_core(ca, inst.game, inst.budgets);
    if (rep.deviation) {
      std::printf("core: profitable deviation by {");
      for (std::size_t i = 0; i < rep.deviation->members.size(); ++i)
        std::printf("%s%zu", i ? "," : "", rep.deviation->members[i]);
      std::printf("}: %.9g > %.9g\n", rep.deviation->deviating, rep.deviation->current);
      ok = false;
    } else {
      std::printf("core: no profitable deviation among %zu coalitions up to size %zu%s\n", static_cast<std::size_t>(rep.coalitions_checked),
                  rep.largest_checked, rep.complete ? "" : " (partial)");
    }
  }
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fogslice: energy-harvesting fog network slicing simulator"};
  app.require_subcommand(1);

  std::string cfg, policy = "radius_coop", out = "out", axis, values, instance;
  std::uint64_t seed = 1;
  std::size_t reps = 1;
  std::vector<std::string> policies;
  bool core = false;

  auto* r = app.add_subcommand("run", "run one episode");
  r->add_option("--config", cfg, "config JSON")->required();
  r->add_option("--policy", policy, "no_coop | nearest_neighbor | radius_coop | myopic | bpomdp[:depth]");
  r->add_option("--seed", seed, "episode seed");
  r->add_option("--out", out, "output directory");

  auto* s = app.add_subcommand("sweep", "sweep one config key");
  s->add_option("--config", cfg, "config JSON")->required();
  s->add_option("--axis", axis, "dotted config key")->required();
  s->add_option("--values", values, "comma-separated values");
  s->add_option("--reps", reps, "replications per value");
  s->add_option("--policy", policies, "policies (repeatable); default: config 'policy' or radius_coop");
  s->add_option("--seed", seed, "seed of the first replication");
  s->add_option("--out", out, "output directory");

  auto* v = app.add_subcommand("validate", "check a config");
  v->add_option("--config", cfg, "config JSON")->required();

  auto* o = app.add_subcommand("oracle", "replay a game instance against brute force");
  o->add_option("--instance", instance, "instance file")->required();
  o->add_flag("--core", core, "also check the core agreement");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*r) return run(cfg, policy, seed, out);
    if (*s) return sweep(cfg, axis, values, reps, policies, seed, out);
    if (*v) return validate(cfg);
    if (*o) return oracle_replay(instance, core);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
