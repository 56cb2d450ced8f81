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

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "optverify/lp/linear_program.hpp"

namespace optverify {

namespace detail {

inline nlohmann::json bound_to_json(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  return v;
}

inline double bound_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    throw ModelError("bad bound literal '" + s + "'");
  }
  return j.get<double>();
}

inline const char* relation_tag(Relation r) {
  switch (r) {
    case Relation::kLessEqual: return "<=";
    case Relation::kEqual: return "=";
    case Relation::kGreaterEqual: return ">=";
  }
  return "?";
}

// Fixed MPS numeric fields are 12 characters wide.
inline std::string mps_number(double v) {
  char buf[64];
  for (int prec = 12; prec >= 1; --prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::string(buf).size() <= 12) return buf;
  }
  return buf;
}

inline std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace detail

inline nlohmann::json to_json(const LinearProgram& lp,
                              const std::vector<int>& integer_cols = {}) {
  nlohmann::json j;
  j["sense"] = lp.sense() == Sense::kMinimize ? "min" : "max";
  auto& vars = j["vars"] = nlohmann::json::array();
  for (const auto& v : lp.vars())
    vars.push_back({{"lb", detail::bound_to_json(v.lower)},
                    {"ub", detail::bound_to_json(v.upper)},
                    {"obj", v.objective},
                    {"name", v.name}});
  auto& rows = j["rows"] = nlohmann::json::array();
  for (const auto& r : lp.rows()) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : r.terms) terms.push_back({t.col, t.coef});
    rows.push_back({{"terms", terms},
                    {"rel", detail::relation_tag(r.relation)},
                    {"rhs", r.rhs},
                    {"name", r.name}});
  }
  j["integers"] = integer_cols;
  return j;
}

inline LinearProgram lp_from_json(const nlohmann::json& j,
                                  std::vector<int>* integer_cols = nullptr) {
  LinearProgram lp(j.at("sense").get<std::string>() == "max" ? Sense::kMaximize
                                                              : Sense::kMinimize);
  for (const auto& v : j.at("vars"))
    lp.add_var(detail::bound_from_json(v.at("lb")),
               detail::bound_from_json(v.at("ub")), v.at("obj").get<double>(),
               v.value("name", std::string{}));
  for (const auto& r : j.at("rows")) {
    std::vector<Term> terms;
    for (const auto& t : r.at("terms"))
      terms.push_back({t.at(0).get<int>(), t.at(1).get<double>()});
    const auto rel = r.at("rel").get<std::string>();
    Relation relation;
    if (rel == "<=") relation = Relation::kLessEqual;
    else if (rel == "=") relation = Relation::kEqual;
    else if (rel == ">=") relation = Relation::kGreaterEqual;
    else throw ModelError("bad relation '" + rel + "'");
    lp.add_row(std::move(terms), relation, r.at("rhs").get<double>(),
               r.value("name", std::string{}));
  }
  if (integer_cols != nullptr && j.contains("integers"))
    *integer_cols = j.at("integers").get<std::vector<int>>();
  lp.validate();
  return lp;
}

// Fixed-format MPS. Columns are named C0000001.., rows R0000001.. so every
// identifier fits the 8-character field. Integer columns are wrapped in
// MARKER blocks; a maximization model gets an OBJSENSE section.
inline void write_mps(std::ostream& os, const LinearProgram& lp,
                      const std::vector<int>& integer_cols = {},
                      const std::string& name = "OPTVERIF") {
  using detail::mps_number;
  using detail::pad;
  auto col_name = [](int j) {
    char b[16];
    std::snprintf(b, sizeof(b), "C%07d", j + 1);
    return std::string(b);
  };
  auto row_name = [](int i) {
    char b[16];
    std::snprintf(b, sizeof(b), "R%07d", i + 1);
    return std::string(b);
  };
  auto line = [&](const std::string& f1, const std::string& f2,
                  const std::string& f3, const std::string& f4) {
    // Fields start at columns 2, 5, 15, 25.
    os << ' ' << pad(f1, 2) << ' ' << pad(f2, 8) << "  " << pad(f3, 8) << "  "
       << f4 << '\n';
  };

  os << pad("NAME", 14) << name << '\n';
  if (lp.sense() == Sense::kMaximize) os << "OBJSENSE\n    MAX\n";
  os << "ROWS\n";
  os << " N  OBJ\n";
  for (int i = 0; i < lp.num_rows(); ++i) {
    const char* t = "L";
    if (lp.row(i).relation == Relation::kEqual) t = "E";
    if (lp.row(i).relation == Relation::kGreaterEqual) t = "G";
    os << ' ' << pad(t, 2) << ' ' << row_name(i) << '\n';
  }

  std::vector<std::map<int, double>> cols(lp.num_vars());
  for (int i = 0; i < lp.num_rows(); ++i)
    for (const auto& t : lp.row(i).terms) cols[t.col][i] += t.coef;
  const std::set<int> ints(integer_cols.begin(), integer_cols.end());

  os << "COLUMNS\n";
  bool in_int = false;
  int marker = 0;
  for (int j = 0; j < lp.num_vars(); ++j) {
    const bool is_int = ints.count(j) > 0;
    if (is_int != in_int) {
      char b[16];
      std::snprintf(b, sizeof(b), "M%07d", ++marker);
      line("", b, "'MARKER'", is_int ? "             'INTORG'"
                                     : "             'INTEND'");
      in_int = is_int;
    }
    const double c = lp.var(j).objective;
    if (c != 0.0) line("", col_name(j), "OBJ", mps_number(c));
    for (const auto& [i, a] : cols[j])
      if (a != 0.0) line("", col_name(j), row_name(i), mps_number(a));
    if (c == 0.0 && cols[j].empty()) line("", col_name(j), "OBJ", "0");
  }
  if (in_int) {
    char b[16];
    std::snprintf(b, sizeof(b), "M%07d", ++marker);
    line("", b, "'MARKER'", "             'INTEND'");
  }

  os << "RHS\n";
  for (int i = 0; i < lp.num_rows(); ++i)
    if (lp.row(i).rhs != 0.0)
      line("", "RHS", row_name(i), mps_number(lp.row(i).rhs));

  os << "BOUNDS\n";
  for (int j = 0; j < lp.num_vars(); ++j) {
    const double lo = lp.var(j).lower, hi = lp.var(j).upper;
    const std::string c = col_name(j);
    if (lo == hi) {
      line("FX", "BND", c, mps_number(lo));
      continue;
    }
    if (lo == -kInf && hi == kInf) {
      line("FR", "BND", c, "");
      continue;
    }
    if (lo == -kInf) line("MI", "BND", c, "");
    else if (lo != 0.0) line("LO", "BND", c, mps_number(lo));
    if (hi != kInf) line("UP", "BND", c, mps_number(hi));
  }
  os << "ENDATA\n";
}

}  // namespace optverify
