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

// Worst-case gap MILPs for a DC-OPF proxy over a latent load box.
//
// Both maximize  c.p~ + M_th sum(xi~) - (c.p + M_th sum(xi))  where (p~, xi~)
// is the encoded proxy dispatch and (p, xi) a dispatch of the same loads.
// The compact model only asks (p, xi) to be feasible: the maximizer picks the
// cheapest one anyway. The bilevel model also imposes the KKT conditions of
// the OPF LP with big-M complementarity.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "optverify/dcopf/case.hpp"
#include "optverify/dcopf/proxy.hpp"
#include "optverify/encodings/bounds.hpp"
#include "optverify/encodings/context.hpp"
#include "optverify/encodings/primitives.hpp"

namespace optverify {

enum class Formulation { kCompact, kBilevel };

inline const char* to_string(Formulation f) {
  return f == Formulation::kCompact ? "compact" : "bilevel";
}

struct ModelSize {
  int continuous = 0;
  int binaries = 0;
  int rows = 0;
};

inline ModelSize model_size(const MilpProblem& p) {
  const int nb = static_cast<int>(p.binaries.size());
  return {p.lp.num_vars() - nb, nb, p.lp.num_rows()};
}

struct DcopfModel {
  Formulation kind = Formulation::kCompact;
  LoadDomain domain;
  EncodingContext ctx{Sense::kMaximize};
  std::vector<int> z;   // latent columns (alpha, beta_1..beta_B)
  std::vector<int> p;   // free dispatch
  std::vector<int> xi;  // free thermal violation
  int delta = -1;       // hypersimplex shift

  // Full assignment for the latent point `zv`: proxy encoding, OPF optimum
  // and (bilevel) its multipliers.
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

namespace detail {

// Proxy block: loads, network, bound clamp, hypersimplex projection, thermal
// violation. Adds the proxy cost to the objective and returns the load
// expressions.
inline std::vector<LinExpr> encode_dcopf_proxy(DcopfModel& m, const DcopfCase& k,
                                               const MlpNetwork& net, const LayerBounds& bounds) {
  auto& ctx = m.ctx;
  const auto d = add_latent_inputs(ctx, m.domain.input_map(), m.domain.lo(), m.domain.hi(), "in", &m.z);
  const auto p_hat = encode_network(ctx, net, d, bounds, "nn");
  const int last = net.num_layers() - 1;
  std::vector<LinExpr> p_clamp(k.buses);
  for (int i = 0; i < k.buses; ++i) {
    Interval b = ctx.bounds(p_hat[i]);
    b.lo = std::max(b.lo, bounds.lower[last](i));
    b.hi = std::min(b.hi, bounds.upper[last](i));
    if (b.lo > b.hi) b.lo = b.hi;
    p_clamp[i] = encode_clamp(ctx, p_hat[i], k.p_lo(i), k.p_hi(i), b, "clamp/" + std::to_string(i));
  }
  const double span = (k.p_hi - k.p_lo).maxCoeff();
  m.delta = ctx.add_var("proj/delta", -span, span);
  ctx.on_complete([p_clamp, d, k, j = m.delta](std::vector<double>& x) {
    Eigen::VectorXd pc(k.buses);
    double demand = 0.0;
    for (int i = 0; i < k.buses; ++i) {
      pc(i) = p_clamp[i].eval(x);
      demand += d[i].eval(x);
    }
    const double delta = hypersimplex_delta(pc, k.p_lo, k.p_hi, demand);
    x[j] = refine_delta(pc, k.p_lo, k.p_hi, demand, delta);
  });
  std::vector<LinExpr> p_tilde(k.buses);
  for (int i = 0; i < k.buses; ++i)
    p_tilde[i] = encode_clamp(ctx, p_clamp[i] + LinExpr::var(m.delta), k.p_lo(i), k.p_hi(i),
                              "proj/" + std::to_string(i));
  LinExpr gen, load;
  for (int i = 0; i < k.buses; ++i) {
    gen += p_tilde[i];
    load += d[i];
  }
  ctx.add_constraint(gen - load, Relation::kEqual, 0.0, "proj/balance");
  LinExpr cost;
  for (int e = 0; e < k.lines; ++e) {
    LinExpr flow;
    for (int i = 0; i < k.buses; ++i)
      if (k.h(e, i) != 0.0) flow += (p_tilde[i] - d[i]) * k.h(e, i);
    const LinExpr over = flow - k.f_bar(e), under = -flow - k.f_bar(e);
    const LinExpr xi = encode_max_of(ctx, {over, under, LinExpr(0.0)}, "thermal/" + std::to_string(e));
    cost += xi * k.m_th;
  }
  for (int i = 0; i < k.buses; ++i) cost += p_tilde[i] * k.c(i);
  ctx.add_objective(cost);
  return d;
}

}  // namespace detail

struct FormulationOptions {
  bool eliminate_stable = true;
  double m_dual = 0.0;  // bilevel bound on balance and generator-limit multipliers; 0 means 10 M_th
};

namespace detail {

// Free OPF block on the latent loads: columns p, xi, the OPF rows and the
// negated OPF cost. Returns row indices (balance, flow_lo..., flow_hi...).
inline std::vector<int> encode_opf_block(DcopfModel& m, const DcopfCase& k,
                                         const std::vector<LinExpr>& d, double xi_cap) {
  auto& ctx = m.ctx;
  LinExpr cost;
  for (int i = 0; i < k.buses; ++i) {
    m.p.push_back(ctx.add_var("opf/p" + std::to_string(i), k.p_lo(i), k.p_hi(i)));
    cost += LinExpr::var(m.p[i], k.c(i));
  }
  for (int e = 0; e < k.lines; ++e) {
    m.xi.push_back(ctx.add_var("opf/xi" + std::to_string(e), 0.0, xi_cap));
    cost += LinExpr::var(m.xi[e], k.m_th);
  }
  ctx.add_objective(-cost);
  std::vector<int> rows;
  LinExpr gen, load;
  for (int i = 0; i < k.buses; ++i) {
    gen += LinExpr::var(m.p[i]);
    load += d[i];
  }
  rows.push_back(ctx.problem().lp.num_rows());
  ctx.add_constraint(gen - load, Relation::kEqual, 0.0, "opf/balance");
  for (int sgn : {1, -1}) {
    for (int e = 0; e < k.lines; ++e) {
      LinExpr flow;
      for (int i = 0; i < k.buses; ++i)
        if (k.h(e, i) != 0.0) flow += (LinExpr::var(m.p[i]) - d[i]) * k.h(e, i);
      rows.push_back(ctx.problem().lp.num_rows());
      ctx.add_constraint(flow * sgn + LinExpr::var(m.xi[e]), Relation::kGreaterEqual, -k.f_bar(e),
                         (sgn > 0 ? "opf/flow_lo" : "opf/flow_hi") + std::to_string(e));
    }
  }
  return rows;
}

inline Eigen::VectorXd loads_of(const std::vector<LinExpr>& d, const std::vector<double>& x) {
  Eigen::VectorXd v(static_cast<int>(d.size()));
  for (int i = 0; i < v.size(); ++i) v(i) = d[i].eval(x);
  return v;
}

inline void check_inputs(const DcopfCase& k, const MlpNetwork& net, const LoadDomain& dom,
                         const LayerBounds& bounds) {
  k.validate();
  net.validate();
  if (net.input_dim() != k.buses || net.output_dim() != k.buses)
    throw ModelError("proxy network must map B loads to B dispatches");
  if (dom.d_ref.size() != k.buses) throw ModelError("domain does not match the case");
  if (bounds.num_layers() != net.num_layers()) throw ModelError("bounds do not cover the network");
}

}  // namespace detail

// Proxy encoding plus a free feasible dispatch: the high-point relaxation.
inline DcopfModel build_compact_milp(const DcopfCase& k, const MlpNetwork& net, const LoadDomain& dom,
                                     const LayerBounds& bounds, const FormulationOptions& opt = {}) {
  detail::check_inputs(k, net, dom, bounds);
  DcopfModel m;
  m.kind = Formulation::kCompact;
  m.domain = dom;
  m.ctx.eliminate_stable = opt.eliminate_stable;
  const auto d = detail::encode_dcopf_proxy(m, k, net, bounds);
  detail::encode_opf_block(m, k, d, kInf);
  m.ctx.on_complete([d, k, p = m.p, xi = m.xi](std::vector<double>& x) {
    const auto sol = solve_lp(build_opf_lp(k, detail::loads_of(d, x)));
    if (sol.status != LpStatus::kOptimal) throw NumericalFailure("completion: OPF not optimal");
    for (int i = 0; i < k.buses; ++i) x[p[i]] = sol.x[i];
    for (int e = 0; e < k.lines; ++e) x[xi[e]] = sol.x[k.buses + e];
  });
  return m;
}

// Compact model plus the OPF optimality conditions:
//   stationarity  lambda e + H^T nu_lo - H^T nu_hi + mu_lo - mu_hi = c
//                 nu_lo + nu_hi + zeta = M_th
//   complementarity between each multiplier and its slack, one binary each.
inline DcopfModel build_bilevel_milp(const DcopfCase& k, const MlpNetwork& net, const LoadDomain& dom,
                                     const LayerBounds& bounds, const FormulationOptions& opt = {}) {
  detail::check_inputs(k, net, dom, bounds);
  const double md = opt.m_dual > 0.0 ? opt.m_dual : 10.0 * k.m_th;
  DcopfModel m;
  m.kind = Formulation::kBilevel;
  m.domain = dom;
  m.ctx.eliminate_stable = opt.eliminate_stable;
  auto& ctx = m.ctx;
  const auto d = detail::encode_dcopf_proxy(m, k, net, bounds);

  // An optimal xi equals the violation of an in-bounds dispatch.
  std::vector<Interval> flow_b(k.lines);
  Eigen::VectorXd xi_cap(k.lines);
  for (int e = 0; e < k.lines; ++e) {
    LinExpr f;
    for (int i = 0; i < k.buses; ++i) f -= d[i] * k.h(e, i);
    Interval b = ctx.bounds(f);
    for (int i = 0; i < k.buses; ++i) {
      const double a = k.h(e, i) * k.p_lo(i), c = k.h(e, i) * k.p_hi(i);
      b.lo += std::min(a, c);
      b.hi += std::max(a, c);
    }
    flow_b[e] = b;
    xi_cap(e) = std::max(0.0, std::max(-b.lo, b.hi) - k.f_bar(e)) + 1.0;
  }
  detail::encode_opf_block(m, k, d, 0.0);
  for (int e = 0; e < k.lines; ++e) ctx.problem().lp.var(m.xi[e]).upper = xi_cap(e);

  std::vector<int> lam{ctx.add_var("kkt/lambda", -md, md)};
  std::vector<int> nu_lo, nu_hi, zeta, mu_lo, mu_hi;
  for (int e = 0; e < k.lines; ++e) {
    nu_lo.push_back(ctx.add_var("kkt/nu_lo" + std::to_string(e), 0.0, k.m_th));
    nu_hi.push_back(ctx.add_var("kkt/nu_hi" + std::to_string(e), 0.0, k.m_th));
    zeta.push_back(ctx.add_var("kkt/zeta" + std::to_string(e), 0.0, k.m_th));
  }
  for (int i = 0; i < k.buses; ++i) {
    mu_lo.push_back(ctx.add_var("kkt/mu_lo" + std::to_string(i), 0.0, md));
    mu_hi.push_back(ctx.add_var("kkt/mu_hi" + std::to_string(i), 0.0, md));
  }
  for (int i = 0; i < k.buses; ++i) {
    LinExpr s = LinExpr::var(lam[0]) + LinExpr::var(mu_lo[i]) - LinExpr::var(mu_hi[i]);
    for (int e = 0; e < k.lines; ++e)
      if (k.h(e, i) != 0.0)
        s += LinExpr::var(nu_lo[e], k.h(e, i)) - LinExpr::var(nu_hi[e], k.h(e, i));
    ctx.add_constraint(s, Relation::kEqual, k.c(i), "kkt/stat_p" + std::to_string(i));
  }
  for (int e = 0; e < k.lines; ++e)
    ctx.add_constraint(LinExpr::var(nu_lo[e]) + LinExpr::var(nu_hi[e]) + LinExpr::var(zeta[e]),
                       Relation::kEqual, k.m_th, "kkt/stat_xi" + std::to_string(e));

  // Slack expressions and their multipliers.
  struct Pair {
    LinExpr slack;
    int mult;
    double mult_cap;
    std::string name;
  };
  std::vector<Pair> pairs;
  for (int sgn : {1, -1}) {
    for (int e = 0; e < k.lines; ++e) {
      LinExpr flow;
      for (int i = 0; i < k.buses; ++i)
        if (k.h(e, i) != 0.0) flow += (LinExpr::var(m.p[i]) - d[i]) * k.h(e, i);
      pairs.push_back({flow * sgn + LinExpr::var(m.xi[e]) + k.f_bar(e), sgn > 0 ? nu_lo[e] : nu_hi[e],
                       k.m_th, (sgn > 0 ? "kkt/cs_flow_lo" : "kkt/cs_flow_hi") + std::to_string(e)});
    }
  }
  for (int e = 0; e < k.lines; ++e)
    pairs.push_back({LinExpr::var(m.xi[e]), zeta[e], k.m_th, "kkt/cs_xi" + std::to_string(e)});
  for (int i = 0; i < k.buses; ++i) {
    pairs.push_back({LinExpr::var(m.p[i]) - k.p_lo(i), mu_lo[i], md, "kkt/cs_p_lo" + std::to_string(i)});
    pairs.push_back({LinExpr(k.p_hi(i)) - LinExpr::var(m.p[i]), mu_hi[i], md,
                     "kkt/cs_p_hi" + std::to_string(i)});
  }
  std::vector<int> sigma;
  for (const auto& pr : pairs) {
    const int s = ctx.add_binary(pr.name);
    sigma.push_back(s);
    const double cap = std::max(0.0, ctx.bounds(pr.slack).hi);
    // mult <= cap_mult * s, slack <= cap_slack * (1 - s)
    ctx.add_constraint(LinExpr::var(pr.mult) - LinExpr::var(s, pr.mult_cap), Relation::kLessEqual, 0.0);
    ctx.add_constraint(pr.slack + LinExpr::var(s, cap), Relation::kLessEqual, cap);
  }

  std::vector<LinExpr> slacks;
  for (const auto& pr : pairs) slacks.push_back(pr.slack);
  m.ctx.on_complete([d, k, p = m.p, xi = m.xi, lam, nu_lo, nu_hi, zeta, mu_lo, mu_hi, slacks,
                     sigma](std::vector<double>& x) {
    const auto sol = solve_lp(build_opf_lp(k, detail::loads_of(d, x)));
    if (sol.status != LpStatus::kOptimal) throw NumericalFailure("completion: OPF not optimal");
    for (int i = 0; i < k.buses; ++i) x[p[i]] = sol.x[i];
    for (int e = 0; e < k.lines; ++e) x[xi[e]] = sol.x[k.buses + e];
    x[lam[0]] = sol.duals[opf_balance_row()];
    for (int e = 0; e < k.lines; ++e) {
      x[nu_lo[e]] = std::max(0.0, sol.duals[opf_lower_flow_row(e)]);
      x[nu_hi[e]] = std::max(0.0, sol.duals[opf_upper_flow_row(k, e)]);
      x[zeta[e]] = k.m_th - x[nu_lo[e]] - x[nu_hi[e]];
    }
    for (int i = 0; i < k.buses; ++i) {
      const double rc = sol.reduced_costs[i];
      x[mu_lo[i]] = std::max(rc, 0.0);
      x[mu_hi[i]] = std::max(-rc, 0.0);
    }
    for (std::size_t r = 0; r < slacks.size(); ++r)
      x[sigma[r]] = slacks[r].eval(x) <= 1e-9 ? 1.0 : 0.0;
  });
  return m;
}

}  // namespace optverify
