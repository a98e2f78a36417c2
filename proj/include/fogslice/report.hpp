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

// Episode records, aggregates and their CSV / JSON files.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fogslice/types.hpp"

namespace fogslice::report {

using json = nlohmann::json;

struct NodeSlot {
  double battery = 0.0;    // at the start of the slot
  double harvested = 0.0;  // during the slot, credited at the next one
  double consumed = 0.0;
  double budget = 0.0;
  std::vector<double> arrival;    // per service, requests/s
  std::vector<double> share;      // per service, sum_m alpha_im
  std::vector<double> offloaded;  // per service, deadline-met requests/s
  double reward = 0.0;

  friend bool operator==(const NodeSlot&, const NodeSlot&) = default;
};

struct SlotRecord {
  std::size_t slot = 0;
  std::vector<NodeSlot> nodes;
  bool certified = true;

  friend bool operator==(const SlotRecord&, const SlotRecord&) = default;
};

struct Aggregates {
  double total_offloaded = 0.0;
  std::vector<double> mean_offloaded;     // per service, per slot, summed over nodes
  std::vector<double> discounted_reward;  // per node
  std::vector<double> running_average;    // network reward, cumulative mean per slot
  std::size_t uncertified_slots = 0;
};

struct ExperimentReport {
  json config;
  std::string policy;
  std::uint64_t seed = 0;
  double gamma = 0.9;
  std::vector<std::string> services;
  std::size_t node_count = 0;
  std::vector<SlotRecord> records;
  json beliefs;  // final belief snapshot, null when the policy keeps none
};

inline Aggregates aggregate(const ExperimentReport& r) {
  const std::size_t kk = r.services.size();
  Aggregates a;
  a.mean_offloaded.assign(kk, 0.0);
  a.discounted_reward.assign(r.node_count, 0.0);
  double disc = 1.0, cum = 0.0;
  for (const auto& rec : r.records) {
    double slot_reward = 0.0;
    for (std::size_t i = 0; i < rec.nodes.size(); ++i) {
      const auto& n = rec.nodes[i];
      for (std::size_t k = 0; k < kk; ++k) {
        a.total_offloaded += n.offloaded[k];
        a.mean_offloaded[k] += n.offloaded[k];
      }
      a.discounted_reward[i] += disc * n.reward;
      slot_reward += n.reward;
    }
    cum += slot_reward;
    a.running_average.push_back(cum / static_cast<double>(a.running_average.size() + 1));
    if (!rec.certified) ++a.uncertified_slots;
    disc *= r.gamma;
  }
  if (!r.records.empty())
    for (double& v : a.mean_offloaded) v /= static_cast<double>(r.records.size());
  return a;
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline const char* kCsvDoc =
    "# fogslice slot records, one row per (slot, node)\n"
    "# battery: energy at slot start; harvested: energy harvested during the slot (usable from the next);\n"
    "# consumed: energy of activated units; budget: energy offered to the game;\n"
    "# per service s: arrival_s (requests/s), share_s (fraction of own arrivals served within the deadline,\n"
    "# locally or forwarded), offloaded_s = share_s * arrival_s;\n"
    "# reward: rho-weighted offloaded requests; certified: 1 if the slot's solver certified its result\n";

inline std::string to_csv(const ExperimentReport& r) {
  std::ostringstream os;
  os << kCsvDoc << "slot,node,battery,harvested,consumed,budget";
  for (const auto& s : r.services) os << ",arrival_" << s << ",share_" << s << ",offloaded_" << s;
  os << ",reward,certified\n";
  for (const auto& rec : r.records)
    for (std::size_t i = 0; i < rec.nodes.size(); ++i) {
      const auto& n = rec.nodes[i];
      os << rec.slot << ',' << i << ',' << fmt(n.battery) << ',' << fmt(n.harvested) << ',' << fmt(n.consumed) << ','
         << fmt(n.budget);
      for (std::size_t k = 0; k < r.services.size(); ++k)
        os << ',' << fmt(n.arrival[k]) << ',' << fmt(n.share[k]) << ',' << fmt(n.offloaded[k]);
      os << ',' << fmt(n.reward) << ',' << (rec.certified ? 1 : 0) << '\n';
    }
  return os.str();
}

inline json summary(const ExperimentReport& r) {
  Aggregates a = aggregate(r);
  json j;
  j["policy"] = r.policy;
  j["seed"] = r.seed;
  j["gamma"] = r.gamma;
  j["services"] = r.services;
  j["nodes"] = r.node_count;
  j["slots"] = r.records.size();
  j["total_offloaded"] = a.total_offloaded;
  j["mean_offloaded"] = a.mean_offloaded;
  j["discounted_reward"] = a.discounted_reward;
  j["running_average"] = a.running_average;
  j["uncertified_slots"] = a.uncertified_slots;
  j["config"] = r.config;
  j["beliefs"] = r.beliefs;
  return j;
}

/// Writes records.csv and summary.json into `dir` (created if missing).
inline void emit(const ExperimentReport& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  auto write = [&](const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
    out.close();
    if (!out) throw std::runtime_error("cannot write " + p.string());
  };
  write(dir / "records.csv", to_csv(r));
  write(dir / "summary.json", summary(r).dump(2) + "\n");
}

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads a report back and checks the stored aggregates against the ones
/// recomputed from the records.
inline ExperimentReport load(const std::filesystem::path& dir, double tol = 1e-9) {
  std::ifstream js(dir / "summary.json");
  if (!js) throw ReportError("cannot open " + (dir / "summary.json").string());
  json j;
  try {
    j = json::parse(js);
  } catch (const json::parse_error& e) {
    throw ReportError(std::string("summary.json: ") + e.what());
  }
  ExperimentReport r;
  r.policy = j.at("policy").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.gamma = j.at("gamma").get<double>();
  r.services = j.at("services").get<std::vector<std::string>>();
  r.node_count = j.at("nodes").get<std::size_t>();
  r.config = j.at("config");
  r.beliefs = j.value("beliefs", json());
  const std::size_t kk = r.services.size();

  std::ifstream cs(dir / "records.csv");
  if (!cs) throw ReportError("cannot open " + (dir / "records.csv").string());
  std::string line;
  bool header = false;
  std::size_t lineno = 0;
  while (std::getline(cs, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    std::vector<double> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(std::stod(cell));
    if (f.size() != 8 + 3 * kk) throw ReportError("records.csv line " + std::to_string(lineno) + ": wrong column count");
    auto slot = static_cast<std::size_t>(f[0]);
    auto node = static_cast<std::size_t>(f[1]);
    if (r.records.empty() || r.records.back().slot != slot) r.records.push_back({slot, {}, true});
    auto& rec = r.records.back();
    if (node != rec.nodes.size()) throw ReportError("records.csv line " + std::to_string(lineno) + ": node out of order");
    NodeSlot n{f[2], f[3], f[4], f[5], {}, {}, {}, f[6 + 3 * kk]};
    for (std::size_t k = 0; k < kk; ++k) {
      n.arrival.push_back(f[6 + 3 * k]);
      n.share.push_back(f[7 + 3 * k]);
      n.offloaded.push_back(f[8 + 3 * k]);
    }
    rec.certified = rec.certified && f[7 + 3 * kk] != 0.0;
    rec.nodes.push_back(std::move(n));
  }

  Aggregates a = aggregate(r);
  auto close = [&](double x, double y) { return std::fabs(x - y) <= tol * std::max(1.0, std::fabs(y)); };
  auto close_all = [&](const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!close(x[i], y[i])) return false;
    return true;
  };
  if (j.at("slots").get<std::size_t>() != r.records.size() || !close(a.total_offloaded, j.at("total_offloaded")) ||
      !close_all(a.mean_offloaded, j.at("mean_offloaded")) ||
      !close_all(a.discounted_reward, j.at("discounted_reward")) ||
      !close_all(a.running_average, j.at("running_average")) ||
      a.uncertified_slots != j.at("uncertified_slots").get<std::size_t>())
    throw ReportError("aggregates in summary.json do not match records.csv");
  return r;
}

}  // namespace fogslice::report
