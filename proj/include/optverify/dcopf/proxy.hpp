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

// DC-OPF proxy: network -> bound clamp -> hypersimplex projection, and its
// cost with thermal violations priced at M_th.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "optverify/dcopf/case.hpp"
#include "optverify/neural/mlp.hpp"

namespace optverify {

class ProjectionInfeasible : public ModelError {
 public:
  using ModelError::ModelError;
};

inline constexpr double kProjectionEps = 1e-9;
inline constexpr int kProjectionMaxIter = 200;

inline Eigen::VectorXd clamp_vec(const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                                 const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

// Uniform shift delta with sum(clamp(p + delta, lo, hi)) = demand, by
// bisection on [-max(hi - lo), max(hi - lo)].
inline double hypersimplex_delta(const Eigen::VectorXd& p, const Eigen::VectorXd& lo,
                                 const Eigen::VectorXd& hi, double demand,
                                 double eps = kProjectionEps, int max_iter = kProjectionMaxIter) {
  const double slo = lo.sum(), shi = hi.sum();
  const double tol = eps * std::max(1.0, std::abs(demand));
  if (demand < slo - tol || demand > shi + tol)
    throw ProjectionInfeasible("demand " + std::to_string(demand) + " outside [" +
                               std::to_string(slo) + ", " + std::to_string(shi) + "]");
  auto f = [&](double d) { return clamp_vec((p.array() + d).matrix(), lo, hi).sum(); };
  double dhi = (hi - lo).maxCoeff();
  double dlo = -dhi;
  double delta = 0.5 * (dlo + dhi);
  for (int it = 0; it < max_iter; ++it) {
    const double fv = f(delta);
    if (std::abs(dhi - dlo) < eps && std::abs(fv - demand) < eps) break;
    if (fv >= demand) dhi = delta;
    else dlo = delta;
    delta = 0.5 * (dlo + dhi);
  }
  return delta;
}

// Closes the bisection residual: with the unsaturated set fixed, the shift
// that balances exactly. Falls back to `delta` if the set would change.
inline double refine_delta(const Eigen::VectorXd& p, const Eigen::VectorXd& lo,
                           const Eigen::VectorXd& hi, double demand, double delta) {
  double fixed = 0.0, free_sum = 0.0;
  int n_free = 0;
  for (int i = 0; i < p.size(); ++i) {
    const double v = p(i) + delta;
    if (v <= lo(i)) fixed += lo(i);
    else if (v >= hi(i)) fixed += hi(i);
    else {
      free_sum += p(i);
      ++n_free;
    }
  }
  if (n_free == 0) return delta;
  const double exact = (demand - fixed - free_sum) / n_free;
  for (int i = 0; i < p.size(); ++i) {
    const double before = p(i) + delta, after = p(i) + exact;
    const bool was_free = before > lo(i) && before < hi(i);
    const bool is_free = after > lo(i) && after < hi(i);
    if (was_free && !is_free && after != lo(i) && after != hi(i)) return delta;
    if (!was_free && is_free) return delta;
  }
  return exact;
}

struct DispatchResult {
  Eigen::VectorXd p_hat;      // network output
  Eigen::VectorXd p_clamped;  // after the bound clamp
  double delta = 0.0;
  Eigen::VectorXd p;          // projected dispatch
  Eigen::VectorXd flow;       // H (p - d)
  Eigen::VectorXd xi;         // thermal violation
  double cost = 0.0;
};

// Repair layers and cost for a given network output `p_hat`.
inline DispatchResult repair_dispatch(const DcopfCase& k, const Eigen::VectorXd& p_hat,
                                      const Eigen::VectorXd& d) {
  if (p_hat.size() != k.buses || d.size() != k.buses)
    throw ModelError("dispatch and load vectors must have length B");
  DispatchResult r;
  r.p_hat = p_hat;
  r.p_clamped = clamp_vec(r.p_hat, k.p_lo, k.p_hi);
  r.delta = hypersimplex_delta(r.p_clamped, k.p_lo, k.p_hi, d.sum());
  r.p = clamp_vec((r.p_clamped.array() + r.delta).matrix(), k.p_lo, k.p_hi);
  r.flow = k.h * (r.p - d);
  r.xi = (r.flow - k.f_bar).cwiseMax(-k.f_bar - r.flow).cwiseMax(0.0);
  r.cost = k.c.dot(r.p) + k.m_th * r.xi.sum();
  return r;
}

inline DispatchResult proxy_forward(const DcopfCase& k, const MlpNetwork& net,
                                    const Eigen::VectorXd& d) {
  if (net.input_dim() != k.buses || net.output_dim() != k.buses)
    throw ModelError("proxy network must map B loads to B dispatches");
  return repair_dispatch(k, net.forward(d), d);
}

struct ProxyGradient {
  Eigen::VectorXd load;        // d cost / d d
  Eigen::VectorXd net_output;  // d cost / d p_hat
};

// Reverse pass of repair_dispatch for cost cotangent `cot`; `load` covers
// only the direct dependence on d. Saturated entries and the max kinks use
// the active-branch subgradient.
inline ProxyGradient repair_backward(const DcopfCase& k, const DispatchResult& r,
                                     double cot = 1.0) {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(k.lines);
  for (int e = 0; e < k.lines; ++e) {
    if (r.flow(e) - k.f_bar(e) > 0.0) s(e) = 1.0;
    else if (-k.f_bar(e) - r.flow(e) > 0.0) s(e) = -1.0;
  }
  const Eigen::VectorXd thermal = k.m_th * (k.h.transpose() * s);
  const Eigen::VectorXd g_p = cot * (k.c + thermal);
  Eigen::VectorXd g_d = -cot * thermal;
  // Projection Jacobians: diag(m) - m m^T / sum(m) for p_clamped and
  // m 1^T / sum(m) for d, with m the unsaturated mask.
  Eigen::VectorXd m = Eigen::VectorXd::Zero(k.buses);
  for (int i = 0; i < k.buses; ++i) {
    const double v = r.p_clamped(i) + r.delta;
    if (v > k.p_lo(i) && v < k.p_hi(i)) m(i) = 1.0;
  }
  Eigen::VectorXd g_pc = Eigen::VectorXd::Zero(k.buses);
  const double nm = m.sum();
  if (nm > 0.0) {
    const double mean = m.dot(g_p) / nm;
    g_pc = (m.array() * (g_p.array() - mean)).matrix();
    g_d.array() += mean;
  }
  Eigen::VectorXd g_hat = Eigen::VectorXd::Zero(k.buses);
  for (int i = 0; i < k.buses; ++i)
    if (r.p_hat(i) > k.p_lo(i) && r.p_hat(i) < k.p_hi(i)) g_hat(i) = g_pc(i);
  return {g_d, g_hat};
}

// Full reverse pass of proxy_forward, through the network.
inline ProxyGradient proxy_backward(const DcopfCase& k, const MlpNetwork& net,
                                    const Eigen::VectorXd& d, double cot = 1.0) {
  auto g = repair_backward(k, proxy_forward(k, net, d), cot);
  g.load += net.input_gradient(d, g.net_output);
  return g;
}

inline Eigen::VectorXd proxy_subgradient(const DcopfCase& k, const MlpNetwork& net,
                                         const Eigen::VectorXd& d, double cot = 1.0) {
  return proxy_backward(k, net, d, cot).load;
}

// Proxy cost minus Phi(d); nonnegative up to LP tolerance since the repaired
// dispatch is feasible for the OPF.
inline double proxy_gap(const DcopfCase& k, const MlpNetwork& net, const Eigen::VectorXd& d,
                        OpfEvaluator& opf) {
  const LpSolution sol = opf.solve(d);
  if (sol.status != LpStatus::kOptimal) throw ModelError("OPF at the given load is not solvable");
  return proxy_forward(k, net, d).cost - sol.objective;
}

// Toy trainer: minimizes the proxy cost with thermal violations priced at
// `penalty`, by plain gradient descent through the repair layers.
inline TrainResult train_dcopf_proxy(const DcopfCase& k, MlpNetwork init,
                                     const std::vector<Eigen::VectorXd>& loads, int epochs,
                                     double lr, double penalty) {
  DcopfCase priced = k;
  priced.m_th = penalty;
  return toy_train(std::move(init), loads, epochs, lr,
                   [&](const Eigen::VectorXd& d, const Eigen::VectorXd& p_hat) {
                     const auto r = repair_dispatch(priced, p_hat, d);
                     return std::make_pair(r.cost, repair_backward(priced, r).net_output);
                   });
}

}  // namespace optverify
