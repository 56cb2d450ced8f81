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

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "optverify/lp/linear_program.hpp"
#include "optverify/lp/simplex.hpp"

namespace optverify {

inline constexpr double kIntTol = 1e-6;

struct MilpProblem {
  LinearProgram lp;
  std::vector<int> binaries;
  std::optional<std::vector<double>> warm_start;

  void validate() const {
    lp.validate();
    for (int j : binaries) {
      if (j < 0 || j >= lp.num_vars())
        throw ModelError("binary index out of range");
      if (lp.var(j).lower < 0.0 || lp.var(j).upper > 1.0)
        throw ModelError("binary column " + std::to_string(j) +
                         " has bounds outside [0, 1]");
    }
  }
};

enum class MilpStatus { kOptimal, kTimeLimit, kInfeasible };

inline const char* to_string(MilpStatus s) {
  switch (s) {
    case MilpStatus::kOptimal: return "Optimal";
    case MilpStatus::kTimeLimit: return "TimeLimit";
    case MilpStatus::kInfeasible: return "Infeasible";
  }
  return "?";
}

struct MilpLimits {
  double time_s = kInf;
  double gap_rel = 1e-9;
  long node_cap = std::numeric_limits<long>::max();
};

struct SolveLogEntry {
  double seconds = 0.0;
  double incumbent = 0.0;  // +-inf until the first incumbent
  double bound = 0.0;
};

struct SolveLog {
  std::vector<SolveLogEntry> entries;
  long nodes = 0;
  MilpStatus status = MilpStatus::kInfeasible;
};

inline nlohmann::json to_json(const SolveLog& log) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : "-inf";
  };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : log.entries)
    rows.push_back({{"seconds", e.seconds},
                    {"incumbent", num(e.incumbent)},
                    {"bound", num(e.bound)}});
  return {{"status", to_string(log.status)},
          {"nodes", log.nodes},
          {"entries", rows}};
}

struct MilpResult {
  MilpStatus status = MilpStatus::kInfeasible;
  bool has_incumbent = false;
  std::vector<double> x;
  double objective = 0.0;
  double best_bound = 0.0;
  SolveLog log;
  std::vector<std::string> warnings;
};

// Called on every new incumbent with (wall seconds, objective, solution).
using IncumbentCallback =
    std::function<void(double, double, const std::vector<double>&)>;

// Most fractional candidate (|v - 0.5| smallest); ties go to the lowest index.
inline int branch_select(const std::vector<std::pair<int, double>>& fractional) {
  if (fractional.empty()) throw ModelError("branch_select on empty list");
  int best = fractional.front().first;
  double best_score = kInf;
  for (const auto& [idx, v] : fractional) {
    const double frac = v - std::floor(v);
    const double score = std::abs(frac - 0.5);
    if (score < best_score - 1e-15 ||
        (std::abs(score - best_score) <= 1e-15 && idx < best)) {
      best_score = score;
      best = idx;
    }
  }
  return best;
}

namespace detail {

struct BbNode {
  std::vector<std::int8_t> fix;  // per binary: -1 free, 0, 1
  double bound = 0.0;            // parent relaxation value, minimization form
  Basis basis;
  int depth = 0;
  long order = 0;
};

struct BbNodeCompare {
  bool operator()(const BbNode& a, const BbNode& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.order > b.order;
  }
};

}  // namespace detail

// Best-bound branch and bound over the binary columns, with a depth-first
// plunge after each new incumbent (and until the first one exists).
// `seed` is accepted for interface stability; the search is deterministic.
inline const std::vector<double>* dbg_ref = nullptr;
inline MilpResult solve_milp(const MilpProblem& p, const MilpLimits& limits = {},
                             std::uint64_t seed = 0,
                             const IncumbentCallback& on_incumbent = {}) {
  (void)seed;
  p.validate();
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(clock::now() - t0).count();
  };

  const double sign = p.lp.sense() == Sense::kMinimize ? 1.0 : -1.0;
  const int nb = static_cast<int>(p.binaries.size());
  SimplexSolver lp(p.lp);
  std::vector<double> orig_lo(nb), orig_hi(nb);
  for (int k = 0; k < nb; ++k) {
    orig_lo[k] = p.lp.var(p.binaries[k]).lower;
    orig_hi[k] = p.lp.var(p.binaries[k]).upper;
  }

  MilpResult res;
  double inc = kInf;  // minimization form
  std::vector<double> inc_x;
  bool plunge = true;

  auto gap_ok = [&](double bound_min) {
    if (!std::isfinite(inc)) return false;
    return inc - bound_min <= limits.gap_rel * std::max(1.0, std::abs(inc)) + 1e-9;
  };
  auto log_row = [&](double bound_min) {
    SolveLogEntry e;
    e.seconds = elapsed();
    e.incumbent = sign * inc;
    e.bound = sign * bound_min;
    res.log.entries.push_back(e);
  };
  auto accept = [&](std::vector<double> x) {
    const double v = sign * p.lp.objective_value(x);
    if (v >= inc) return false;
    inc = v;
    inc_x = std::move(x);
    if (on_incumbent) on_incumbent(elapsed(), sign * inc, inc_x);
    plunge = true;
    return true;
  };

  if (p.warm_start) {
    auto x = *p.warm_start;
    bool ok = static_cast<int>(x.size()) == p.lp.num_vars();
    if (ok) {
      for (int j : p.binaries) {
        if (std::abs(x[j] - std::round(x[j])) > kIntTol) ok = false;
        x[j] = std::round(x[j]);
      }
      ok = ok && p.lp.max_violation(x) <= 1e-8;
    }
    if (ok) accept(std::move(x));
    else res.warnings.push_back("InfeasibleWarmStart: warm start discarded");
  }

  std::priority_queue<detail::BbNode, std::vector<detail::BbNode>,
                      detail::BbNodeCompare> open;
  std::optional<detail::BbNode> next;  // plunge child
  long order = 0;
  double bound_min = -kInf;  // monotone best bound
  bool limit_hit = false;

  {
    detail::BbNode root;
    root.fix.assign(nb, -1);
    root.bound = -kInf;
    root.order = order++;
    next = std::move(root);
  }

  auto open_bound = [&](double extra) {
    double b = extra;
    if (!open.empty()) b = std::min(b, open.top().bound);
    if (next) b = std::min(b, next->bound);
    return b;
  };

  double last_logged_inc = kInf, last_logged_bound = -kInf;
  bool first_log = true;
  auto maybe_log = [&](double current) {
    double b = std::min(open_bound(current), inc);
    bound_min = std::max(bound_min, b);
    if (first_log || inc != last_logged_inc || bound_min != last_logged_bound) {
      log_row(bound_min);
      last_logged_inc = inc;
      last_logged_bound = bound_min;
      first_log = false;
    }
  };

  while (next || !open.empty()) {
    if (elapsed() > limits.time_s || res.log.nodes >= limits.node_cap) {
      limit_hit = true;
      break;
    }
    detail::BbNode node;
    bool from_plunge = false;
    if (next) {
      node = std::move(*next);
      next.reset();
      from_plunge = node.depth > 0;
    } else {
      node = open.top();
      open.pop();
    }
    const double prune_at =
        std::isfinite(inc)
            ? inc - std::max(1e-9, limits.gap_rel * std::max(1.0, std::abs(inc)))
            : kInf;
    if (node.bound >= prune_at) continue;
    ++res.log.nodes;

    for (int k = 0; k < nb; ++k) {
      const int j = p.binaries[k];
      if (node.fix[k] < 0) lp.set_col_bounds(j, orig_lo[k], orig_hi[k]);
      else lp.set_col_bounds(j, node.fix[k], node.fix[k]);
    }
    const LpSolution sol =
        from_plunge ? lp.solve() : lp.solve(node.basis.empty() ? nullptr
                                                                : &node.basis);
    if (dbg_ref) { LinearProgram q = p.lp; for (int kk = 0; kk < nb; ++kk) if (node.fix[kk] >= 0) { q.var(p.binaries[kk]).lower = node.fix[kk]; q.var(p.binaries[kk]).upper = node.fix[kk]; }
      if (std::isnan(sol.objective)) { auto fr = solve_lp(q); fprintf(stderr, "NAN fresh %d %g plunge %d\n", (int)fr.status, fr.objective, (int)from_plunge); }
      fprintf(stderr, "node %ld depth %d status %d obj %g refin %d\n", res.log.nodes, node.depth, (int)sol.status, sol.objective, q.max_violation(*dbg_ref) < 1e-9); }
    if (sol.status == LpStatus::kUnbounded)
      throw NumericalFailure("MILP relaxation is unbounded");
    if (sol.status == LpStatus::kInfeasible) {
      {
        LinearProgram q = p.lp;
        for (int kk = 0; kk < nb; ++kk) if (node.fix[kk] >= 0) { q.var(p.binaries[kk]).lower = node.fix[kk]; q.var(p.binaries[kk]).upper = node.fix[kk]; }
        auto fr = solve_lp(q);
        if (dbg_ref && q.max_violation(*dbg_ref) < 1e-9) fprintf(stderr, "REF feasible at infeasible node %ld fresh %d\n", res.log.nodes, (int)fr.status);
        if (fr.status != LpStatus::kInfeasible) fprintf(stderr, "DISAGREE node %ld plunge %d fresh %d\n", res.log.nodes, (int)from_plunge, (int)fr.status);
      }
      if (std::isfinite(inc)) plunge = false;
      maybe_log(kInf);
      continue;
    }
    if (!std::isfinite(sol.objective))
      throw NumericalFailure("node relaxation returned a non-finite objective");
    const double value = sign * sol.objective;
    if (value >= prune_at) {
      if (std::isfinite(inc)) plunge = false;
      maybe_log(kInf);
      continue;
    }

    std::vector<std::pair<int, double>> fractional;
    for (int k = 0; k < nb; ++k) {
      const double v = sol.x[p.binaries[k]];
      if (std::abs(v - std::round(v)) > kIntTol) fractional.push_back({k, v});
    }
    if (fractional.empty()) {
      auto x = sol.x;
      for (int j : p.binaries) x[j] = std::round(x[j]);
      accept(std::move(x));
      maybe_log(kInf);
      if (gap_ok(bound_min)) break;
      continue;
    }

    const int k = branch_select(fractional);
    const double v = sol.x[p.binaries[k]];
    detail::BbNode down, up;
    down.fix = node.fix;
    down.fix[k] = 0;
    up.fix = std::move(node.fix);
    up.fix[k] = 1;
    for (auto* c : {&down, &up}) {
      c->bound = value;
      c->basis = sol.basis;
      c->depth = node.depth + 1;
      c->order = order++;
    }
    const bool up_first = v >= 0.5;
    const bool dive = plunge || !std::isfinite(inc);
    if (dive) {
      next = up_first ? std::move(up) : std::move(down);
      open.push(up_first ? std::move(down) : std::move(up));
    } else {
      open.push(std::move(down));
      open.push(std::move(up));
    }
    maybe_log(value);
    if (gap_ok(bound_min)) break;
  }

  if (limit_hit) {
    res.status = MilpStatus::kTimeLimit;
    maybe_log(kInf);
  } else {
    // Either the tree is exhausted or the gap closed.
    bound_min = std::max(bound_min, std::min(open_bound(kInf), inc));
    res.status = std::isfinite(inc) ? MilpStatus::kOptimal
                                    : MilpStatus::kInfeasible;
    if (!std::isfinite(inc)) bound_min = kInf;
    log_row(bound_min);
  }
  res.log.status = res.status;
  res.has_incumbent = std::isfinite(inc);
  res.x = inc_x;
  res.objective = res.has_incumbent ? sign * inc : 0.0;
  res.best_bound = sign * bound_min;
  return res;
}

}  // namespace optverify
