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

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace optverify {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Sense { kMinimize, kMaximize };
enum class Relation { kLessEqual, kEqual, kGreaterEqual };

struct Term {
  int col = 0;
  double coef = 0.0;
};

struct Constraint {
  std::vector<Term> terms;
  Relation relation = Relation::kLessEqual;
  double rhs = 0.0;
  std::string name;
};

struct Variable {
  double lower = 0.0;
  double upper = kInf;
  double objective = 0.0;
  std::string name;
};

// A linear program  opt c.x  s.t.  rows (<=, =, >=)  and  l <= x <= u.
// Rows are kept as coefficient lists for convenient construction; the solver
// densifies them once.
class LinearProgram {
 public:
  LinearProgram() = default;
  explicit LinearProgram(Sense sense) : sense_(sense) {}

  Sense sense() const { return sense_; }
  void set_sense(Sense s) { sense_ = s; }

  int num_vars() const { return static_cast<int>(vars_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }

  int add_var(double lower, double upper, double objective = 0.0,
              std::string name = {}) {
    vars_.push_back({lower, upper, objective, std::move(name)});
    return num_vars() - 1;
  }

  int add_row(std::vector<Term> terms, Relation rel, double rhs,
              std::string name = {}) {
    rows_.push_back({std::move(terms), rel, rhs, std::move(name)});
    return num_rows() - 1;
  }

  const Variable& var(int j) const { return vars_.at(j); }
  Variable& var(int j) { return vars_.at(j); }
  const Constraint& row(int i) const { return rows_.at(i); }
  Constraint& row(int i) { return rows_.at(i); }
  const std::vector<Variable>& vars() const { return vars_; }
  const std::vector<Constraint>& rows() const { return rows_; }

  void set_bounds(int j, double lo, double hi) {
    vars_.at(j).lower = lo;
    vars_.at(j).upper = hi;
  }
  void set_objective(int j, double c) { vars_.at(j).objective = c; }

  // Throws ModelError on the first violated structural invariant.
  void validate() const {
    for (int j = 0; j < num_vars(); ++j) {
      const auto& v = vars_[j];
      if (std::isnan(v.lower) || std::isnan(v.upper) ||
          !std::isfinite(v.objective))
        throw ModelError("variable " + std::to_string(j) +
                         " has non-finite data");
      if (v.lower > v.upper)
        throw ModelError("variable " + std::to_string(j) +
                         " has lower bound above upper bound");
    }
    for (int i = 0; i < num_rows(); ++i) {
      const auto& r = rows_[i];
      if (!std::isfinite(r.rhs))
        throw ModelError("row " + std::to_string(i) + " has non-finite rhs");
      for (const auto& t : r.terms) {
        if (t.col < 0 || t.col >= num_vars())
          throw ModelError("row " + std::to_string(i) +
                           " references undeclared variable " +
                           std::to_string(t.col));
        if (!std::isfinite(t.coef))
          throw ModelError("row " + std::to_string(i) +
                           " has a non-finite coefficient");
      }
    }
  }

  double objective_value(const std::vector<double>& x) const {
    double s = 0.0;
    for (int j = 0; j < num_vars(); ++j) s += vars_[j].objective * x[j];
    return s;
  }

  double row_activity(int i, const std::vector<double>& x) const {
    double s = 0.0;
    for (const auto& t : rows_[i].terms) s += t.coef * x[t.col];
    return s;
  }

  // Largest bound or row violation of x, scaled by max(1, |rhs|).
  double max_violation(const std::vector<double>& x) const {
    double worst = 0.0;
    for (int j = 0; j < num_vars(); ++j) {
      const auto& v = vars_[j];
      worst = std::max(worst, (v.lower - x[j]) / std::max(1.0, std::abs(v.lower)));
      worst = std::max(worst, (x[j] - v.upper) / std::max(1.0, std::abs(v.upper)));
    }
    for (int i = 0; i < num_rows(); ++i) {
      const double a = row_activity(i, x);
      const auto& r = rows_[i];
      const double scale = std::max(1.0, std::abs(r.rhs));
      double viol = 0.0;
      switch (r.relation) {
        case Relation::kLessEqual: viol = a - r.rhs; break;
        case Relation::kGreaterEqual: viol = r.rhs - a; break;
        case Relation::kEqual: viol = std::abs(a - r.rhs); break;
      }
      worst = std::max(worst, viol / scale);
    }
    return worst;
  }

 private:
  Sense sense_ = Sense::kMinimize;
  std::vector<Variable> vars_;
  std::vector<Constraint> rows_;
};

}  // namespace optverify
