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

// Pre-activation bounds: interval propagation and optimization-based
// tightening. Inputs may be an affine image a*z + offset of a latent box.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <string>
#include <vector>

#include "optverify/encodings/primitives.hpp"
#include "optverify/lp/simplex.hpp"
#include "optverify/milp/branch_and_bound.hpp"
#include "optverify/neural/mlp.hpp"

namespace optverify {

struct InputMap {
  Eigen::MatrixXd a;
  Eigen::VectorXd offset;

  static InputMap identity(int n) {
    return {Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Zero(n)};
  }
  Eigen::VectorXd apply(const Eigen::VectorXd& z) const { return a * z + offset; }
};

namespace detail {

inline void interval_affine(const Eigen::MatrixXd& w, const Eigen::VectorXd& b,
                            const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                            Eigen::VectorXd& out_lo, Eigen::VectorXd& out_hi) {
  const Eigen::MatrixXd wp = w.cwiseMax(0.0), wn = w.cwiseMin(0.0);
  out_lo = wp * lo + wn * hi + b;
  out_hi = wp * hi + wn * lo + b;
}

inline void check_box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  if (lo.size() != hi.size()) throw ModelError("box bounds differ in length");
  for (int i = 0; i < lo.size(); ++i)
    if (!std::isfinite(lo(i)) || !std::isfinite(hi(i)) || lo(i) > hi(i))
      throw ModelError("box must be finite and nonempty");
}

}  // namespace detail

// Interval bounds on every pre-activation for inputs in [lo, hi].
inline LayerBounds ibp(const MlpNetwork& net, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  detail::check_box(lo, hi);
  if (lo.size() != net.input_dim()) throw ModelError("ibp: box width mismatch");
  LayerBounds out;
  Eigen::VectorXd l = lo, u = hi;
  for (const auto& layer : net.layers()) {
    Eigen::VectorXd yl, yu;
    detail::interval_affine(layer.w, layer.b, l, u, yl, yu);
    out.lower.push_back(yl);
    out.upper.push_back(yu);
    if (layer.act == Activation::kRelu) {
      l = yl.cwiseMax(0.0);
      u = yu.cwiseMax(0.0);
    } else {
      l = yl;
      u = yu;
    }
  }
  return out;
}

inline LayerBounds ibp(const MlpNetwork& net, const InputMap& map, const Eigen::VectorXd& zlo,
                       const Eigen::VectorXd& zhi) {
  detail::check_box(zlo, zhi);
  Eigen::VectorXd lo, hi;
  detail::interval_affine(map.a, map.offset, zlo, zhi, lo, hi);
  return ibp(net, lo, hi);
}

// Latent columns "<prefix>/z<i>" in the box and the network input
// expressions a*z + offset.
inline std::vector<LinExpr> add_latent_inputs(EncodingContext& ctx, const InputMap& map,
                                              const Eigen::VectorXd& zlo, const Eigen::VectorXd& zhi,
                                              const std::string& prefix, std::vector<int>* cols = nullptr) {
  std::vector<int> z;
  for (int i = 0; i < zlo.size(); ++i)
    z.push_back(ctx.add_var(prefix + "/z" + std::to_string(i), zlo(i), zhi(i)));
  std::vector<LinExpr> in(map.a.rows());
  for (int r = 0; r < map.a.rows(); ++r) {
    LinExpr e(map.offset(r));
    for (int c = 0; c < map.a.cols(); ++c)
      if (map.a(r, c) != 0.0) e += LinExpr::var(z[c], map.a(r, c));
    in[r] = std::move(e);
  }
  if (cols) *cols = z;
  return in;
}

struct ObbtOptions {
  bool relax = true;  // LP subproblems; false solves each as a MILP
  MilpLimits limits;  // used when relax == false
};

// Layer-by-layer sweep. Each layer is tightened against the encoding of all
// earlier layers (with their already tightened bounds) and intersected with
// the interval envelope. Results are padded outward by 1e-9 * (1 + |b|).
inline LayerBounds obbt(const MlpNetwork& net, const InputMap& map, const Eigen::VectorXd& zlo,
                        const Eigen::VectorXd& zhi, const ObbtOptions& opt = {}) {
  detail::check_box(zlo, zhi);
  const LayerBounds envelope = ibp(net, map, zlo, zhi);
  LayerBounds cur = envelope;
  auto pad = [](double v) { return 1e-9 * (1.0 + std::abs(v)); };
  for (int t = 0; t < net.num_layers(); ++t) {
    // Re-propagate intervals from the tightened previous layer.
    if (t > 0) {
      Eigen::VectorXd l = cur.lower[t - 1], u = cur.upper[t - 1];
      if (net.layer(t - 1).act == Activation::kRelu) {
        l = l.cwiseMax(0.0);
        u = u.cwiseMax(0.0);
      }
      Eigen::VectorXd yl, yu;
      detail::interval_affine(net.layer(t).w, net.layer(t).b, l, u, yl, yu);
      cur.lower[t] = cur.lower[t].cwiseMax(yl);
      cur.upper[t] = cur.upper[t].cwiseMin(yu);
    }
    EncodingContext ctx(Sense::kMinimize);
    const auto in = add_latent_inputs(ctx, map, zlo, zhi, "obbt");
    const auto x = encode_network(ctx, net, in, cur, "obbt", t);
    const auto y = affine_layer(net.layer(t), x);
    const int n = static_cast<int>(y.size());
    if (opt.relax) {
      SimplexSolver lp(ctx.problem().lp);
      const int nv = ctx.problem().lp.num_vars();
      for (int k = 0; k < n; ++k) {
        for (double dir : {1.0, -1.0}) {
          for (int j = 0; j < nv; ++j) lp.set_objective(j, 0.0);
          for (const auto& term : y[k].terms) lp.set_objective(term.col, dir * term.coef);
          const auto sol = lp.solve();
          if (sol.status != LpStatus::kOptimal)
            throw NumericalFailure("obbt: subproblem status " + std::string(to_string(sol.status)));
          const double v = dir * sol.objective + y[k].constant;
          if (dir > 0) cur.lower[t](k) = std::max(cur.lower[t](k), v - pad(v));
          else cur.upper[t](k) = std::min(cur.upper[t](k), v + pad(v));
        }
      }
    } else {
      for (int k = 0; k < n; ++k) {
        for (double dir : {1.0, -1.0}) {
          MilpProblem p = ctx.problem();
          for (int j = 0; j < p.lp.num_vars(); ++j) p.lp.set_objective(j, 0.0);
          for (const auto& term : y[k].terms) p.lp.set_objective(term.col, dir * term.coef);
          const auto r = solve_milp(p, opt.limits);
          if (r.status == MilpStatus::kInfeasible)
            throw NumericalFailure("obbt: MILP subproblem infeasible");
          const double v = dir * r.best_bound + y[k].constant;
          if (dir > 0) cur.lower[t](k) = std::max(cur.lower[t](k), v - pad(v));
          else cur.upper[t](k) = std::min(cur.upper[t](k), v + pad(v));
        }
      }
    }
    for (int k = 0; k < n; ++k)
      if (cur.lower[t](k) > cur.upper[t](k)) {
        const double mid = 0.5 * (cur.lower[t](k) + cur.upper[t](k));
        cur.lower[t](k) = cur.upper[t](k) = mid;
      }
  }
  return cur;
}

inline LayerBounds obbt(const MlpNetwork& net, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                        const ObbtOptions& opt = {}) {
  return obbt(net, InputMap::identity(static_cast<int>(lo.size())), lo, hi, opt);
}

}  // namespace optverify
