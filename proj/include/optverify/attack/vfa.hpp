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

// Piecewise-linear under-estimator of a convex value function, built from
// LP duals at sampled anchors: Phi_hat(z) = max_i Phi_i + lambda_i . (z - z_i).

#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "optverify/dcopf/case.hpp"

namespace optverify {

struct VfaCut {
  Eigen::VectorXd anchor;
  double value = 0.0;
  Eigen::VectorXd slope;

  double at(const Eigen::VectorXd& z) const { return value + slope.dot(z - anchor); }
};

class ValueFunctionApprox {
 public:
  struct Eval {
    double value = 0.0;
    int cut = -1;  // lowest-index maximizer
  };

  explicit ValueFunctionApprox(std::vector<VfaCut> cuts) : cuts_(std::move(cuts)) {
    if (cuts_.empty()) throw ModelError("value function approximation needs at least one cut");
    const auto n = cuts_.front().anchor.size();
    for (const auto& c : cuts_)
      if (c.anchor.size() != n || c.slope.size() != n)
        throw ModelError("value function cuts disagree on dimension");
  }

  int dim() const { return static_cast<int>(cuts_.front().anchor.size()); }
  int size() const { return static_cast<int>(cuts_.size()); }
  const std::vector<VfaCut>& cuts() const { return cuts_; }

  Eval eval(const Eigen::VectorXd& z) const {
    if (z.size() != dim()) throw ModelError("value function: point dimension mismatch");
    Eval e{cuts_.front().at(z), 0};
    for (int i = 1; i < size(); ++i) {
      const double v = cuts_[i].at(z);
      if (v > e.value) e = {v, i};
    }
    return e;
  }
  double operator()(const Eigen::VectorXd& z) const { return eval(z).value; }
  const Eigen::VectorXd& subgradient(const Eigen::VectorXd& z) const { return cuts_[eval(z).cut].slope; }

 private:
  std::vector<VfaCut> cuts_;
};

inline ValueFunctionApprox build_vfa(std::vector<VfaCut> cuts) { return ValueFunctionApprox(std::move(cuts)); }

// Cut at latent z: Phi(d(z)) with slope A^T dPhi/dd for d = A z.
inline VfaCut dcopf_vfa_cut(const DcopfCase& k, const LoadDomain& dom, OpfEvaluator& opf,
                            const Eigen::VectorXd& z) {
  const LpSolution sol = opf.solve(dom.loads(z));
  if (sol.status != LpStatus::kOptimal) throw ModelError("OPF at a cut anchor is not solvable");
  return {z, sol.objective, dom.input_map().a.transpose() * phi_load_gradient(k, sol)};
}

// `n` anchors: the box center, then uniform draws.
inline ValueFunctionApprox build_dcopf_vfa(const DcopfCase& k, const LoadDomain& dom, int n,
                                           std::uint64_t seed) {
  if (n < 1) throw ModelError("value function approximation needs at least one cut");
  OpfEvaluator opf(k);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Eigen::VectorXd lo = dom.lo(), hi = dom.hi();
  std::vector<VfaCut> cuts;
  cuts.push_back(dcopf_vfa_cut(k, dom, opf, dom.center()));
  while (static_cast<int>(cuts.size()) < n) {
    Eigen::VectorXd z(dom.dim());
    for (int i = 0; i < z.size(); ++i) z(i) = lo(i) + unit(rng) * (hi(i) - lo(i));
    cuts.push_back(dcopf_vfa_cut(k, dom, opf, z));
  }
  return build_vfa(std::move(cuts));
}

inline nlohmann::json to_json(const ValueFunctionApprox& v) {
  auto vec = [](const Eigen::VectorXd& x) { return std::vector<double>(x.data(), x.data() + x.size()); };
  nlohmann::json cuts = nlohmann::json::array();
  for (const auto& c : v.cuts()) cuts.push_back({{"anchor", vec(c.anchor)}, {"value", c.value}, {"slope", vec(c.slope)}});
  return {{"cuts", cuts}};
}

}  // namespace optverify
