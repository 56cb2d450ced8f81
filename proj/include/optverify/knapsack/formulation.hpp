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

// Compact verification MILP for the knapsack proxy: maximize Phi(x) - v.y_hat
// over the latent box. Sorting uses a permutation matrix, greedy selection
// uses sorted copies of the selection and weights, and the free selection y
// only needs to fit.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "optverify/encodings/bounds.hpp"
#include "optverify/encodings/context.hpp"
#include "optverify/encodings/primitives.hpp"
#include "optverify/knapsack/case.hpp"

namespace optverify {

// Capacity strictly below C + 1 by this much maps to integer capacity C.
inline constexpr double kCapacityFloorEps = 1e-7;
// Score tie-break weight: rank keys are s_j - kScoreTieEps * j. Scores closer
// than kScoreTieEps * |i - j| may rank against the greedy order; the verifier
// re-certifies incumbents, so such points surface as NumericsSuspect.
inline constexpr double kScoreTieEps = 1e-4;

// prod = x * b for binary b and x in [lo, hi] (exact on integral b).
inline LinExpr encode_binary_product(EncodingContext& ctx, const LinExpr& x, double lo, double hi, int b,
                                     const std::string& name) {
  const int p = ctx.add_var(name, std::min(lo, 0.0), std::max(hi, 0.0));
  const LinExpr pe = LinExpr::var(p), be = LinExpr::var(b);
  ctx.add_constraint(pe - be * hi, Relation::kLessEqual, 0.0);
  ctx.add_constraint(pe - be * lo, Relation::kGreaterEqual, 0.0);
  ctx.add_constraint(pe - x - be * lo, Relation::kLessEqual, -lo);
  ctx.add_constraint(pe - x - be * hi, Relation::kGreaterEqual, -hi);
  ctx.on_complete([x, p, b](std::vector<double>& v) { v[p] = v[b] * x.eval(v); });
  return pe;
}

struct RepairEncoding {
  std::vector<int> y_hat;               // selection, original item order
  std::vector<int> y_sorted;            // selection, sorted order
  std::vector<std::vector<int>> perm;   // perm[k][j] = 1 iff item j sits at rank k
};

// Greedy repair on score expressions `s` with capacity expression `cap`
// (integer valued in [cap_lo, cap_hi]) and integer weights `w`.
inline RepairEncoding encode_greedy_repair(EncodingContext& ctx, const std::vector<LinExpr>& s,
                                           const std::vector<Interval>& sb, const Eigen::VectorXd& w,
                                           const LinExpr& cap, double cap_lo, double cap_hi,
                                           const std::string& name) {
  const int k = static_cast<int>(s.size());
  if (static_cast<int>(sb.size()) != k || w.size() != k) throw ModelError(name + ": length mismatch");
  RepairEncoding r;
  r.perm.assign(k, std::vector<int>(k));
  for (int a = 0; a < k; ++a)
    for (int j = 0; j < k; ++j)
      r.perm[a][j] = ctx.add_binary(name + "/P" + std::to_string(a) + "_" + std::to_string(j));
  for (int j = 0; j < k; ++j) r.y_hat.push_back(ctx.add_binary(name + "/yhat" + std::to_string(j)));
  for (int a = 0; a < k; ++a) r.y_sorted.push_back(ctx.add_binary(name + "/ysort" + std::to_string(a)));
  // Registered before the products below so they see P and y~.
  ctx.on_complete([s, w, cap, r](std::vector<double>& x) {
    const int n = static_cast<int>(s.size());
    Eigen::VectorXd sv(n);
    for (int j = 0; j < n; ++j) sv(j) = s[j].eval(x);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return sv(a) > sv(b); });
    const Eigen::VectorXd y = greedy_repair(sv, w, cap.eval(x));
    for (int a = 0; a < n; ++a) {
      for (int j = 0; j < n; ++j) x[r.perm[a][j]] = order[a] == j ? 1.0 : 0.0;
      x[r.y_sorted[a]] = y(order[a]);
    }
    for (int j = 0; j < n; ++j) x[r.y_hat[j]] = y(j);
  });

  for (int a = 0; a < k; ++a) {
    LinExpr row, col;
    for (int j = 0; j < k; ++j) {
      row += LinExpr::var(r.perm[a][j]);
      col += LinExpr::var(r.perm[j][a]);
    }
    ctx.add_constraint(row, Relation::kEqual, 1.0);
    ctx.add_constraint(col, Relation::kEqual, 1.0);
  }
  // Sorted scores s~_a = sum_j P_aj s_j, nonincreasing.
  std::vector<LinExpr> sorted(k);
  for (int a = 0; a < k; ++a)
    for (int j = 0; j < k; ++j)
      sorted[a] += encode_binary_product(ctx, s[j], sb[j].lo, sb[j].hi, r.perm[a][j],
                                         name + "/Ps" + std::to_string(a) + "_" + std::to_string(j));
  // Ranks are ordered by the key s_j - kScoreTieEps * j, so equal scores keep
  // index order as in the stable sort.
  for (int a = 0; a + 1 < k; ++a) {
    LinExpr key = sorted[a] - sorted[a + 1];
    for (int j = 1; j < k; ++j)
      key += LinExpr::var(r.perm[a + 1][j], kScoreTieEps * j) - LinExpr::var(r.perm[a][j], kScoreTieEps * j);
    ctx.add_constraint(key, Relation::kGreaterEqual, 0.0);
  }

  // y~_a = y_hat_j whenever P_aj = 1; taken items form a prefix.
  for (int a = 0; a < k; ++a)
    for (int j = 0; j < k; ++j) {
      const LinExpr ys = LinExpr::var(r.y_sorted[a]), yh = LinExpr::var(r.y_hat[j]);
      const LinExpr p = LinExpr::var(r.perm[a][j]);
      ctx.add_constraint(ys - yh - p, Relation::kGreaterEqual, -1.0);
      ctx.add_constraint(ys - yh + p, Relation::kLessEqual, 1.0);
    }
  for (int a = 0; a + 1 < k; ++a)
    ctx.add_constraint(LinExpr::var(r.y_sorted[a]) - LinExpr::var(r.y_sorted[a + 1]),
                       Relation::kGreaterEqual, 0.0);
  LinExpr used;
  for (int j = 0; j < k; ++j) used += LinExpr::var(r.y_hat[j], w(j));
  ctx.add_constraint(used - cap, Relation::kLessEqual, 0.0);
  // Stop rule: an item left out does not fit on top of everything ranked
  // before it, sum_{b <= a} w~_b >= (1 - y~_a)(C + 1).
  LinExpr prefix;
  for (int a = 0; a < k; ++a) {
    for (int j = 0; j < k; ++j) prefix += LinExpr::var(r.perm[a][j], w(j));
    const LinExpr yc = encode_binary_product(ctx, cap, cap_lo, cap_hi, r.y_sorted[a],
                                             name + "/yC" + std::to_string(a));
    ctx.add_constraint(prefix - cap + LinExpr::var(r.y_sorted[a]) + yc, Relation::kGreaterEqual, 1.0);
  }
  return r;
}

struct KnapsackModel {
  KnapsackDomain domain;
  EncodingContext ctx{Sense::kMaximize};
  std::vector<int> z;       // (alpha, beta_1..beta_K)
  std::vector<int> y;       // free selection
  RepairEncoding repair;
  int capacity = -1;        // integer capacity C

  std::vector<double> complete(const Eigen::VectorXd& zv) const {
    if (zv.size() != static_cast<int>(z.size())) throw ModelError("latent width mismatch");
    std::vector<double> x(ctx.problem().lp.num_vars(), 0.0);
    for (int i = 0; i < zv.size(); ++i) x[z[i]] = zv(i);
    return ctx.complete(std::move(x));
  }
  Eigen::VectorXd latent(const std::vector<double>& x) const {
    Eigen::VectorXd v(static_cast<int>(z.size()));
    for (int i = 0; i < v.size(); ++i) v(i) = x[z[i]];
    return v;
  }
  const MilpProblem& problem() const { return ctx.problem(); }
  MilpProblem& problem() { return ctx.problem(); }
};

inline bool integral_weights(const Eigen::VectorXd& w) {
  return ((w.array() - w.array().round()).abs() <= 1e-9).all();
}

inline KnapsackModel build_knapsack_compact_milp(const KnapsackDomain& dom, const MlpNetwork& net,
                                                 const LayerBounds& bounds, bool eliminate_stable = true) {
  dom.ref.validate();
  net.validate();
  const int k = dom.ref.items();
  if (net.input_dim() != k + 1 || net.output_dim() != k)
    throw ModelError("knapsack proxy must map K + 1 inputs to K scores");
  if (bounds.num_layers() != net.num_layers()) throw ModelError("bounds do not cover the network");
  if (!integral_weights(dom.ref.w))
    throw ModelError("knapsack verification needs integer weights");
  KnapsackModel m;
  m.domain = dom;
  auto& ctx = m.ctx;
  ctx.eliminate_stable = eliminate_stable;
  const auto in = add_latent_inputs(ctx, dom.input_map(), dom.lo(), dom.hi(), "in", &m.z);
  const auto scores = encode_network(ctx, net, in, bounds, "nn");
  const int last = net.num_layers() - 1;
  std::vector<Interval> sb(k);
  for (int j = 0; j < k; ++j) {
    sb[j] = ctx.bounds(scores[j]);
    sb[j].lo = std::max(sb[j].lo, bounds.lower[last](j));
    sb[j].hi = std::min(sb[j].hi, bounds.upper[last](j));
    if (sb[j].lo > sb[j].hi) sb[j].lo = sb[j].hi;
  }

  // Integer capacity C = c_lo + sum of thermometer bits, C <= alpha l < C + 1.
  const double cap_real_lo = (1.0 - dom.u) * dom.ref.l, cap_real_hi = (1.0 + dom.u) * dom.ref.l;
  const double c_lo = std::floor(cap_real_lo), c_hi = std::floor(cap_real_hi);
  m.capacity = ctx.add_var("cap/C", c_lo, c_hi);
  std::vector<int> bits;
  for (int t = 0; t < static_cast<int>(c_hi - c_lo); ++t) bits.push_back(ctx.add_binary("cap/bit" + std::to_string(t)));
  ctx.on_complete([alpha = m.z[0], l = dom.ref.l, c_lo, bits, c = m.capacity](std::vector<double>& x) {
    const double cv = std::floor(x[alpha] * l);
    x[c] = cv;
    for (std::size_t t = 0; t < bits.size(); ++t) x[bits[t]] = c_lo + static_cast<double>(t) + 1.0 <= cv ? 1.0 : 0.0;
  });
  LinExpr therm(c_lo);
  for (std::size_t t = 0; t < bits.size(); ++t) {
    therm += LinExpr::var(bits[t]);
    if (t + 1 < bits.size())
      ctx.add_constraint(LinExpr::var(bits[t]) - LinExpr::var(bits[t + 1]), Relation::kGreaterEqual, 0.0);
  }
  const LinExpr cap = LinExpr::var(m.capacity);
  const LinExpr cap_real = in[0];
  ctx.add_constraint(cap - therm, Relation::kEqual, 0.0);
  ctx.add_constraint(cap - cap_real, Relation::kLessEqual, 0.0);
  ctx.add_constraint(cap_real - cap, Relation::kLessEqual, 1.0 - kCapacityFloorEps);

  m.repair = encode_greedy_repair(ctx, scores, sb, dom.ref.w, cap, c_lo, c_hi, "repair");

  for (int j = 0; j < k; ++j) m.y.push_back(ctx.add_binary("free/y" + std::to_string(j)));
  ctx.on_complete([dom, y = m.y, zc = m.z](std::vector<double>& x) {
    Eigen::VectorXd zv(static_cast<int>(zc.size()));
    for (int i = 0; i < zv.size(); ++i) zv(i) = x[zc[i]];
    const auto best = knapsack_exact(dom.values(zv), dom.ref.w, dom.capacity(zv));
    for (std::size_t j = 0; j < y.size(); ++j) x[y[j]] = best.y(static_cast<int>(j));
  });
  LinExpr used;
  for (int j = 0; j < k; ++j) used += LinExpr::var(m.y[j], dom.ref.w(j));
  ctx.add_constraint(used - cap, Relation::kLessEqual, 0.0);

  // Objective sum_j v_j beta_j (y_j - y_hat_j), products linearized.
  LinExpr obj;
  for (int j = 0; j < k; ++j) {
    const LinExpr beta = LinExpr::var(m.z[1 + j]);
    const LinExpr a = encode_binary_product(ctx, beta, 1.0 - dom.u, 1.0 + dom.u, m.y[j], "obj/by" + std::to_string(j));
    const LinExpr b = encode_binary_product(ctx, beta, 1.0 - dom.u, 1.0 + dom.u, m.repair.y_hat[j],
                                            "obj/byhat" + std::to_string(j));
    obj += (a - b) * dom.ref.v(j);
  }
  ctx.add_objective(obj);
  return m;
}

}  // namespace optverify
