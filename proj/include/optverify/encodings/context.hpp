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

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "optverify/lp/linear_program.hpp"
#include "optverify/milp/branch_and_bound.hpp"

namespace optverify {

// Affine expression sum(coef * x[col]) + constant over model columns.
struct LinExpr {
  std::vector<Term> terms;
  double constant = 0.0;

  LinExpr() = default;
  explicit LinExpr(double c) : constant(c) {}
  static LinExpr var(int col, double coef = 1.0) {
    LinExpr e;
    e.terms.push_back({col, coef});
    return e;
  }

  LinExpr& operator+=(const LinExpr& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    constant += o.constant;
    return normalize();
  }
  LinExpr& operator-=(const LinExpr& o) { return *this += o * -1.0; }
  LinExpr& operator+=(double c) {
    constant += c;
    return *this;
  }
  LinExpr& operator*=(double s) {
    for (auto& t : terms) t.coef *= s;
    constant *= s;
    return normalize();
  }
  friend LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
  friend LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
  friend LinExpr operator+(LinExpr a, double c) { return a += c; }
  friend LinExpr operator-(LinExpr a, double c) { return a += -c; }
  friend LinExpr operator*(LinExpr a, double s) { return a *= s; }
  friend LinExpr operator*(double s, LinExpr a) { return a *= s; }
  LinExpr operator-() const { return *this * -1.0; }

  // Merge duplicate columns, drop zero coefficients, sort by column.
  LinExpr& normalize() {
    std::sort(terms.begin(), terms.end(),
              [](const Term& a, const Term& b) { return a.col < b.col; });
    std::vector<Term> out;
    for (const auto& t : terms) {
      if (!out.empty() && out.back().col == t.col) out.back().coef += t.coef;
      else out.push_back(t);
    }
    out.erase(std::remove_if(out.begin(), out.end(), [](const Term& t) { return t.coef == 0.0; }),
              out.end());
    terms = std::move(out);
    return *this;
  }

  bool is_constant() const { return terms.empty(); }

  double eval(const std::vector<double>& x) const {
    double s = constant;
    for (const auto& t : terms) s += t.coef * x[t.col];
    return s;
  }
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Incremental MILP builder: named columns, rows from affine expressions, and
// "completers" that extend a partial assignment (usually the free inputs) to
// every auxiliary column in build order.
class EncodingContext {
 public:
  using Completer = std::function<void(std::vector<double>&)>;

  explicit EncodingContext(Sense sense = Sense::kMaximize) { p_.lp.set_sense(sense); }

  // Fixed-point relus and clamps skip their binaries when true.
  bool eliminate_stable = true;

  int add_var(const std::string& name, double lo, double hi, double obj = 0.0) {
    if (names_.count(name)) throw ModelError("duplicate variable name '" + name + "'");
    const int j = p_.lp.add_var(lo, hi, obj, name);
    names_[name] = j;
    return j;
  }

  int add_binary(const std::string& name) {
    const int j = add_var(name, 0.0, 1.0);
    p_.binaries.push_back(j);
    return j;
  }

  // lhs (rel) rhs; the expression constant moves to the right-hand side.
  void add_constraint(const LinExpr& lhs, Relation rel, double rhs,
                      const std::string& name = "") {
    LinExpr e = lhs;
    e.normalize();
    p_.lp.add_row(e.terms, rel, rhs - e.constant, name);
  }

  // Adds `e` to the objective. Constants go on a column fixed at 1.
  void add_objective(const LinExpr& e) {
    for (const auto& t : e.terms) p_.lp.var(t.col).objective += t.coef;
    if (e.constant != 0.0) {
      if (one_ < 0) {
        one_ = add_var("const/one", 1.0, 1.0);
        on_complete([j = one_](std::vector<double>& x) { x[j] = 1.0; });
      }
      p_.lp.var(one_).objective += e.constant;
    }
  }

  int col(const std::string& name) const {
    const auto it = names_.find(name);
    if (it == names_.end()) throw ModelError("unknown variable '" + name + "'");
    return it->second;
  }
  bool has(const std::string& name) const { return names_.count(name) > 0; }
  const std::map<std::string, int>& registry() const { return names_; }

  // Interval arithmetic over the current column bounds.
  Interval bounds(const LinExpr& e) const {
    Interval r{e.constant, e.constant};
    for (const auto& t : e.terms) {
      const auto& v = p_.lp.var(t.col);
      if (t.coef > 0) {
        r.lo += t.coef * v.lower;
        r.hi += t.coef * v.upper;
      } else {
        r.lo += t.coef * v.upper;
        r.hi += t.coef * v.lower;
      }
    }
    return r;
  }

  void on_complete(Completer c) { completers_.push_back(std::move(c)); }

  // Runs every completer in build order on `x` (resized to all columns).
  std::vector<double> complete(std::vector<double> x) const {
    x.resize(p_.lp.num_vars(), 0.0);
    for (const auto& c : completers_) c(x);
    return x;
  }

  int num_binaries() const { return static_cast<int>(p_.binaries.size()); }
  MilpProblem& problem() { return p_; }
  const MilpProblem& problem() const { return p_; }

 private:
  MilpProblem p_;
  std::map<std::string, int> names_;
  std::vector<Completer> completers_;
  int one_ = -1;
};

}  // namespace optverify
