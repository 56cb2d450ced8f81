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

// Big-M building blocks: ReLU, clamp, elementwise max and a whole MLP.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "optverify/encodings/context.hpp"
#include "optverify/neural/mlp.hpp"

namespace optverify {

// x = max(y, 0) given l <= y <= u:
//   x >= 0, x >= y, x <= u*delta, x <= y - l*(1 - delta).
inline LinExpr encode_relu(EncodingContext& ctx, const LinExpr& y, double l, double u,
                           const std::string& name) {
  if (!std::isfinite(l) || !std::isfinite(u))
    throw ModelError(name + ": relu needs finite bounds");
  if (l > u) throw ModelError(name + ": relu bounds are inverted");
  if (ctx.eliminate_stable) {
    if (u <= 0.0) return LinExpr(0.0);
    if (l >= 0.0) return y;
  }
  const int x = ctx.add_var(name + "/x", 0.0, std::max(u, 0.0));
  const int d = ctx.add_binary(name + "/delta");
  const LinExpr xe = LinExpr::var(x);
  ctx.add_constraint(xe - y, Relation::kGreaterEqual, 0.0);
  ctx.add_constraint(xe - LinExpr::var(d, u), Relation::kLessEqual, 0.0);
  ctx.add_constraint(xe - y - LinExpr::var(d, l), Relation::kLessEqual, -l);
  ctx.on_complete([y, x, d](std::vector<double>& v) {
    const double yv = y.eval(v);
    v[x] = std::max(yv, 0.0);
    v[d] = yv > 0.0 ? 1.0 : 0.0;
  });
  return xe;
}

// x = min(max(y, lo), hi) as -relu(-relu(y - lo) - lo + hi) + hi.
inline LinExpr encode_clamp(EncodingContext& ctx, const LinExpr& y, double lo, double hi,
                            Interval yb, const std::string& name) {
  if (lo > hi) throw ModelError(name + ": clamp limits are inverted");
  const LinExpr r1 = encode_relu(ctx, y - lo, yb.lo - lo, yb.hi - lo, name + "/lo");
  const double r1_lo = std::max(0.0, yb.lo - lo), r1_hi = std::max(0.0, yb.hi - lo);
  const LinExpr inner = -r1 + (hi - lo);
  const LinExpr r2 = encode_relu(ctx, inner, hi - lo - r1_hi, hi - lo - r1_lo, name + "/hi");
  return -r2 + hi;
}

inline LinExpr encode_clamp(EncodingContext& ctx, const LinExpr& y, double lo, double hi,
                            const std::string& name) {
  return encode_clamp(ctx, y, lo, hi, ctx.bounds(y), name);
}

// z = max_k e_k with one-hot selectors:
//   z >= e_k, z <= e_k + (U_max - L_k)(1 - s_k), sum s_k = 1.
// Terms whose upper bound cannot exceed another term's lower bound are dropped.
inline LinExpr encode_max_of(EncodingContext& ctx, const std::vector<LinExpr>& exprs,
                             const std::vector<Interval>& bounds, const std::string& name) {
  if (exprs.empty() || exprs.size() != bounds.size())
    throw ModelError(name + ": max needs one bound per expression");
  double best_lo = -kInf;
  for (const auto& b : bounds) {
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi))
      throw ModelError(name + ": max of an unbounded expression");
    best_lo = std::max(best_lo, b.lo);
  }
  std::vector<int> keep;
  for (int k = 0; k < static_cast<int>(exprs.size()); ++k) {
    bool dominated = false;
    for (int j = 0; j < static_cast<int>(exprs.size()) && !dominated; ++j) {
      if (j == k) continue;
      // Ties keep the lower index.
      dominated = bounds[k].hi < bounds[j].lo || (bounds[k].hi == bounds[j].lo && j < k);
    }
    if (!dominated) keep.push_back(k);
  }
  if (keep.size() == 1) return exprs[keep[0]];
  double u_max = -kInf;
  for (int k : keep) u_max = std::max(u_max, bounds[k].hi);
  const int z = ctx.add_var(name + "/z", best_lo, u_max);
  std::vector<int> sel;
  LinExpr one_hot;
  for (int k : keep) {
    const int s = ctx.add_binary(name + "/sel" + std::to_string(k));
    sel.push_back(s);
    one_hot += LinExpr::var(s);
    const double m = u_max - bounds[k].lo;
    ctx.add_constraint(LinExpr::var(z) - exprs[k], Relation::kGreaterEqual, 0.0);
    ctx.add_constraint(LinExpr::var(z) - exprs[k] + LinExpr::var(s, m), Relation::kLessEqual, m);
  }
  ctx.add_constraint(one_hot, Relation::kEqual, 1.0);
  std::vector<LinExpr> kept;
  for (int k : keep) kept.push_back(exprs[k]);
  ctx.on_complete([kept, sel, z](std::vector<double>& v) {
    int arg = 0;
    double best = -kInf;
    for (int k = 0; k < static_cast<int>(kept.size()); ++k) {
      const double val = kept[k].eval(v);
      if (val > best) {
        best = val;
        arg = k;
      }
    }
    v[z] = best;
    for (int k = 0; k < static_cast<int>(sel.size()); ++k) v[sel[k]] = k == arg ? 1.0 : 0.0;
  });
  return LinExpr::var(z);
}

inline LinExpr encode_max_of(EncodingContext& ctx, const std::vector<LinExpr>& exprs,
                             const std::string& name) {
  std::vector<Interval> b;
  for (const auto& e : exprs) b.push_back(ctx.bounds(e));
  return encode_max_of(ctx, exprs, b, name);
}

// Pre-activation expressions of `layer` given its input expressions.
inline std::vector<LinExpr> affine_layer(const DenseLayer& l, const std::vector<LinExpr>& in) {
  if (static_cast<int>(in.size()) != l.w.cols()) throw ModelError("layer input width mismatch");
  std::vector<LinExpr> out(l.w.rows());
  for (int r = 0; r < l.w.rows(); ++r) {
    LinExpr e(l.b(r));
    for (int c = 0; c < l.w.cols(); ++c)
      if (l.w(r, c) != 0.0) e += in[c] * l.w(r, c);
    out[r] = std::move(e);
  }
  return out;
}

// Encodes layers [0, upto) of `net`; ReLU big-M constants come from `bounds`
// (intersected with interval arithmetic on the expression). Returns the
// post-activation expressions of the last encoded layer.
inline std::vector<LinExpr> encode_network(EncodingContext& ctx, const MlpNetwork& net,
                                           std::vector<LinExpr> inputs, const LayerBounds& bounds,
                                           const std::string& prefix, int upto = -1) {
  if (static_cast<int>(inputs.size()) != net.input_dim())
    throw ModelError("network input width mismatch");
  if (upto < 0) upto = net.num_layers();
  if (bounds.num_layers() < upto) throw ModelError("missing layer bounds");
  for (int i = 0; i < upto; ++i) {
    const auto& l = net.layer(i);
    std::vector<LinExpr> y = affine_layer(l, inputs);
    if (l.act == Activation::kRelu) {
      for (int k = 0; k < static_cast<int>(y.size()); ++k) {
        const Interval ib = ctx.bounds(y[k]);
        const double lo = std::max(bounds.lower[i](k), ib.lo);
        const double hi = std::min(bounds.upper[i](k), ib.hi);
        y[k] = encode_relu(ctx, y[k], std::min(lo, hi), hi,
                           prefix + "/l" + std::to_string(i) + "/n" + std::to_string(k));
      }
    }
    inputs = std::move(y);
  }
  return inputs;
}

}  // namespace optverify
