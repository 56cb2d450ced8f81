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

// Brute-force LP oracle: enumerate every basic solution of a small LP.
// Infinite bounds are replaced by an artificial box; an optimum that touches
// the artificial box is reported as unbounded.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "optverify/lp/linear_program.hpp"

namespace oracle {

enum class EnumStatus { kOptimal, kInfeasible, kUnbounded };

struct EnumResult {
  EnumStatus status = EnumStatus::kInfeasible;
  double objective = 0.0;
  std::vector<double> x;
};

inline EnumResult enumerate_vertices(const optverify::LinearProgram& lp,
                                     double box = 1e6, double tol = 1e-9) {
  using optverify::Relation;
  const int n = lp.num_vars();
  // Every constraint as a . x (<=|=) b.
  struct Half {
    Eigen::VectorXd a;
    double b;
    bool eq;
    bool artificial;
  };
  std::vector<Half> cons;
  for (const auto& r : lp.rows()) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    for (const auto& t : r.terms) a(t.col) += t.coef;
    switch (r.relation) {
      case Relation::kLessEqual: cons.push_back({a, r.rhs, false, false}); break;
      case Relation::kGreaterEqual: cons.push_back({-a, -r.rhs, false, false}); break;
      case Relation::kEqual: cons.push_back({a, r.rhs, true, false}); break;
    }
  }
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(j) = 1.0;
    const double lo = lp.var(j).lower, hi = lp.var(j).upper;
    cons.push_back({-e, std::isfinite(lo) ? -lo : box, false, !std::isfinite(lo)});
    cons.push_back({e, std::isfinite(hi) ? hi : box, false, !std::isfinite(hi)});
  }
  const double sign = lp.sense() == optverify::Sense::kMinimize ? 1.0 : -1.0;
  Eigen::VectorXd c(n);
  for (int j = 0; j < n; ++j) c(j) = sign * lp.var(j).objective;

  // Equalities stay in the candidate pool: dependent equality rows must not
  // hide vertices. Feasibility of each candidate enforces all of them.
  std::vector<int> ineqs;
  for (int k = 0; k < static_cast<int>(cons.size()); ++k) ineqs.push_back(k);

  EnumResult best;
  double best_val = optverify::kInf;
  bool best_artificial = false;
  std::vector<int> pick;

  auto feasible = [&](const Eigen::VectorXd& x) {
    for (const auto& h : cons) {
      const double s = h.a.dot(x);
      const double scale = std::max(1.0, std::abs(h.b));
      if (h.eq ? std::abs(s - h.b) > tol * scale * 10 : s > h.b + tol * scale * 10)
        return false;
    }
    return true;
  };

  auto evaluate = [&]() {
    const std::vector<int>& active = pick;
    if (static_cast<int>(active.size()) != n) return;
    Eigen::MatrixXd m(n, n);
    Eigen::VectorXd rhs(n);
    for (int r = 0; r < n; ++r) {
      m.row(r) = cons[active[r]].a.transpose();
      rhs(r) = cons[active[r]].b;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    if (lu.rank() < n) return;
    Eigen::VectorXd x = lu.solve(rhs);
    if (!feasible(x)) return;
    const double v = c.dot(x);
    bool art = false;
    for (int k : active) art = art || cons[k].artificial;
    if (v < best_val - 1e-12) {
      best_val = v;
      best.x.assign(x.data(), x.data() + n);
      best_artificial = art;
    } else if (v <= best_val + 1e-12 && best_artificial && !art) {
      best.x.assign(x.data(), x.data() + n);
      best_artificial = false;
    }
  };

  const int need = n;
  std::function<void(int)> rec = [&](int start) {
    if (static_cast<int>(pick.size()) == need) {
      evaluate();
      return;
    }
    for (int k = start; k < static_cast<int>(ineqs.size()); ++k) {
      pick.push_back(ineqs[k]);
      rec(k + 1);
      pick.pop_back();
    }
  };
  rec(0);

  if (!std::isfinite(best_val)) return best;
  // Touching the artificial box with a strictly better value than any
  // non-artificial vertex means the objective improves without limit.
  bool at_box = false;
  for (int j = 0; j < n; ++j)
    if (std::abs(best.x[j]) >= box * (1 - 1e-9)) at_box = true;
  if (at_box) {
    best.status = EnumStatus::kUnbounded;
    return best;
  }
  best.status = EnumStatus::kOptimal;
  best.objective = sign * best_val;
  return best;
}

}  // namespace oracle
