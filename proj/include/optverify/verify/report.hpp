// Copyright 2026 The optverify Authors
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

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "optverify/dcopf/formulations.hpp"
#include "optverify/milp/branch_and_bound.hpp"

namespace optverify {

enum class Family { kDcopf, kKnapsack };

inline const char* to_string(Family f) { return f == Family::kDcopf ? "dcopf" : "knapsack"; }

struct VerificationReport {
  Family family = Family::kDcopf;
  Formulation formulation = Formulation::kCompact;
  std::string obbt;
  std::string warm_start;
  double u = 0.0;
  double primal = 0.0;          // re-certified true gap at `incumbent`
  double dual = 0.0;            // best bound
  double milp_objective = 0.0;  // incumbent value as the MILP reports it
  double warm_start_gap = 0.0;  // true gap at the warm-start point, if any
  Eigen::VectorXd incumbent;
  MilpStatus status = MilpStatus::kInfeasible;
  std::vector<std::string> flags;
  double seconds = 0.0;         // whole pipeline
  double milp_seconds = 0.0;
  double obbt_seconds = 0.0;
  double attack_seconds = 0.0;
  SolveLog log;
  ModelSize size_full;          // every neuron encoded
  ModelSize size_reduced;       // stable neurons eliminated

  bool has_flag(const std::string& f) const { return std::find(flags.begin(), flags.end(), f) != flags.end(); }
  // Relative distance between the bounds, (dual - primal) / max(1, |primal|).
  double gap() const { return (dual - primal) / std::max(1.0, std::abs(primal)); }
};

// (prod (x_i + s))^(1/n) - s, accumulated in log space.
inline double shifted_geomean(const std::vector<double>& values, double shift) {
  if (values.empty()) throw ModelError("shifted_geomean of an empty list");
  double acc = 0.0;
  for (double v : values) {
    if (!(v + shift > 0.0)) throw ModelError("shifted_geomean: every value plus shift must be positive");
    acc += std::log(v + shift);
  }
  return std::exp(acc / static_cast<double>(values.size())) - shift;
}

inline nlohmann::json to_json(const ModelSize& s) {
  return {{"continuous", s.continuous}, {"binaries", s.binaries}, {"rows", s.rows}};
}

inline nlohmann::json to_json(const VerificationReport& r) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : "-inf";
  };
  return {{"family", to_string(r.family)},
          {"formulation", to_string(r.formulation)},
          {"obbt", r.obbt},
          {"warm_start", r.warm_start},
          {"u", r.u},
          {"status", to_string(r.status)},
          {"primal", num(r.primal)},
          {"dual", num(r.dual)},
          {"gap", num(r.gap())},
          {"milp_objective", num(r.milp_objective)},
          {"warm_start_gap", num(r.warm_start_gap)},
          {"incumbent", std::vector<double>(r.incumbent.data(), r.incumbent.data() + r.incumbent.size())},
          {"flags", r.flags},
          {"seconds", r.seconds},
          {"milp_seconds", r.milp_seconds},
          {"obbt_seconds", r.obbt_seconds},
          {"attack_seconds", r.attack_seconds},
          {"size_full", to_json(r.size_full)},
          {"size_reduced", to_json(r.size_reduced)},
          {"log", to_json(r.log)}};
}

inline std::string csv_header() { return "system,u,formulation,status,primal,dual,time"; }

inline std::string csv_row(const std::string& system, const VerificationReport& r) {
  std::ostringstream os;
  os << std::setprecision(10) << system << ',' << r.u << ',' << to_string(r.formulation) << ','
     << to_string(r.status) << ',' << r.primal << ',' << r.dual << ',' << r.seconds;
  return os.str();
}

}  // namespace optverify
