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

// 0/1 knapsack family: max v.y s.t. w.y <= l, y binary. The proxy scores
// items with a network and fills the knapsack greedily in score order.

#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "optverify/encodings/bounds.hpp"
#include "optverify/lp/linear_program.hpp"
#include "optverify/neural/mlp.hpp"

namespace optverify {

struct KnapsackCase {
  Eigen::VectorXd v;
  Eigen::VectorXd w;
  double l = 0.0;

  int items() const { return static_cast<int>(v.size()); }

  void validate() const {
    if (v.size() == 0 || v.size() != w.size()) throw ModelError("knapsack: v and w must be nonempty and equal length");
    if (!v.allFinite() || !w.allFinite() || !std::isfinite(l)) throw ModelError("knapsack: non-finite data");
    if ((w.array() <= 0.0).any()) throw ModelError("knapsack: weights must be positive");
    if ((v.array() < 0.0).any()) throw ModelError("knapsack: values must be nonnegative");
    if (l <= 0.0) throw ModelError("knapsack: capacity must be positive");
  }
};

inline KnapsackCase knapsack_case_from_json(const nlohmann::json& j) {
  KnapsackCase k;
  try {
    const auto v = j.at("v").get<std::vector<double>>();
    const auto w = j.at("w").get<std::vector<double>>();
    if (j.at("K").get<int>() != static_cast<int>(v.size())) throw ModelError("knapsack: K does not match v");
    k.v = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<int>(v.size()));
    k.w = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<int>(w.size()));
    k.l = j.at("l").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("knapsack: ") + e.what());
  }
  k.validate();
  return k;
}

inline nlohmann::json to_json(const KnapsackCase& k) {
  return {{"K", k.items()},
          {"v", std::vector<double>(k.v.data(), k.v.data() + k.v.size())},
          {"w", std::vector<double>(k.w.data(), k.w.data() + k.w.size())},
          {"l", k.l}};
}

inline KnapsackCase load_knapsack_case(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ModelError("cannot read " + path);
  try {
    return knapsack_case_from_json(nlohmann::json::parse(is));
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelError(path + ": " + e.what());
  }
}

// Latent z = (alpha, beta_1..beta_K): capacity alpha*l, values beta .* v,
// all factors in [1 - u, 1 + u]. Network input is (alpha*l, beta .* v).
struct KnapsackDomain {
  KnapsackCase ref;
  double u = 0.0;

  int dim() const { return 1 + ref.items(); }
  Eigen::VectorXd lo() const { return Eigen::VectorXd::Constant(dim(), 1.0 - u); }
  Eigen::VectorXd hi() const { return Eigen::VectorXd::Constant(dim(), 1.0 + u); }
  Eigen::VectorXd center() const { return Eigen::VectorXd::Ones(dim()); }
  double capacity(const Eigen::VectorXd& z) const { return z(0) * ref.l; }
  Eigen::VectorXd values(const Eigen::VectorXd& z) const {
    return (z.tail(ref.items()).array() * ref.v.array()).matrix();
  }
  InputMap input_map() const {
    const int k = ref.items();
    InputMap m{Eigen::MatrixXd::Zero(k + 1, k + 1), Eigen::VectorXd::Zero(k + 1)};
    m.a(0, 0) = ref.l;
    for (int i = 0; i < k; ++i) m.a(1 + i, 1 + i) = ref.v(i);
    return m;
  }
  Eigen::VectorXd net_input(const Eigen::VectorXd& z) const { return input_map().apply(z); }
};

inline KnapsackDomain make_knapsack_domain(const KnapsackCase& k, double u) {
  k.validate();
  if (u < 0.0 || u >= 1.0) throw ModelError("knapsack domain: u must lie in [0, 1)");
  return {k, u};
}

// Items in descending score order (ties: lower index first); each is taken
// while it fits, and the scan stops at the first one that does not.
inline Eigen::VectorXd greedy_repair(const Eigen::VectorXd& s, const Eigen::VectorXd& w, double l) {
  if (s.size() != w.size()) throw ModelError("greedy_repair: length mismatch");
  std::vector<int> order(s.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return s(a) > s(b); });
  Eigen::VectorXd y = Eigen::VectorXd::Zero(s.size());
  double used = 0.0;
  for (int i : order) {
    if (used + w(i) > l) break;
    used += w(i);
    y(i) = 1.0;
  }
  return y;
}

inline Eigen::VectorXd heuristic_scores(const Eigen::VectorXd& v, const Eigen::VectorXd& w) {
  if (v.size() != w.size()) throw ModelError("heuristic_scores: length mismatch");
  if ((w.array() <= 0.0).any()) throw ModelError("heuristic_scores: weights must be positive");
  return (v.array() / w.array()).matrix();
}

struct KnapsackSolution {
  double value = 0.0;
  Eigen::VectorXd y;
};

// Exhaustive search in Gray-code order; ties keep the first subset found.
inline KnapsackSolution knapsack_enumerate(const Eigen::VectorXd& v, const Eigen::VectorXd& w, double l) {
  const int k = static_cast<int>(v.size());
  if (k > 25) throw ModelError("knapsack_enumerate: at most 25 items");
  KnapsackSolution best{0.0, Eigen::VectorXd::Zero(k)};
  std::uint32_t gray = 0;
  double val = 0.0, wt = 0.0;
  for (std::uint32_t n = 1; n < (1u << k); ++n) {
    const int bit = __builtin_ctz(n);
    gray ^= 1u << bit;
    const double sgn = (gray >> bit) & 1u ? 1.0 : -1.0;
    val += sgn * v(bit);
    wt += sgn * w(bit);
    if (wt <= l + 1e-12 && val > best.value) {
      best.value = val;
      for (int i = 0; i < k; ++i) best.y(i) = (gray >> i) & 1u;
    }
  }
  // Recompute the value exactly for the chosen subset.
  best.value = v.dot(best.y);
  return best;
}

// Dynamic program over integer capacity; weights must be integral.
inline KnapsackSolution knapsack_dp(const Eigen::VectorXd& v, const Eigen::VectorXd& w, double l) {
  const int k = static_cast<int>(v.size());
  std::vector<long> wi(k);
  for (int i = 0; i < k; ++i) {
    const double r = std::round(w(i));
    if (std::abs(w(i) - r) > 1e-6 * std::max(1.0, std::abs(w(i))) || r <= 0)
      throw ModelError("knapsack_dp: weights must be positive integers");
    wi[i] = static_cast<long>(r);
  }
  const long cap = l < 0 ? -1 : static_cast<long>(std::floor(l + 1e-12));
  KnapsackSolution out{0.0, Eigen::VectorXd::Zero(k)};
  if (cap < 0) return out;
  // table[i][c]: best value of items [0, i) within capacity c.
  std::vector<std::vector<double>> table(k + 1, std::vector<double>(cap + 1, 0.0));
  for (int i = 0; i < k; ++i)
    for (long c = 0; c <= cap; ++c) {
      table[i + 1][c] = table[i][c];
      if (wi[i] <= c) table[i + 1][c] = std::max(table[i + 1][c], table[i][c - wi[i]] + v(i));
    }
  long c = cap;
  for (int i = k - 1; i >= 0; --i)
    if (table[i + 1][c] != table[i][c]) {
      out.y(i) = 1.0;
      c -= wi[i];
    }
  out.value = v.dot(out.y);
  return out;
}

inline KnapsackSolution knapsack_exact(const Eigen::VectorXd& v, const Eigen::VectorXd& w, double l) {
  if (v.size() != w.size()) throw ModelError("knapsack_exact: length mismatch");
  return v.size() <= 25 ? knapsack_enumerate(v, w, l) : knapsack_dp(v, w, l);
}

struct KnapsackForward {
  Eigen::VectorXd scores;
  Eigen::VectorXd y_hat;
  double value = 0.0;  // beta .* v . y_hat
};

inline KnapsackForward knapsack_forward(const KnapsackDomain& dom, const MlpNetwork& net,
                                        const Eigen::VectorXd& z) {
  if (net.input_dim() != dom.dim() || net.output_dim() != dom.ref.items())
    throw ModelError("knapsack proxy must map K + 1 inputs to K scores");
  KnapsackForward r;
  r.scores = net.forward(dom.net_input(z));
  r.y_hat = greedy_repair(r.scores, dom.ref.w, dom.capacity(z));
  r.value = dom.values(z).dot(r.y_hat);
  return r;
}

// Phi(x) - v.y_hat(x) >= 0 at latent point z.
inline double knapsack_gap(const KnapsackDomain& dom, const MlpNetwork& net, const Eigen::VectorXd& z) {
  const auto f = knapsack_forward(dom, net, z);
  return knapsack_exact(dom.values(z), dom.ref.w, dom.capacity(z)).value - f.value;
}

// Squared-error regression of the scores onto v / w, by gradient descent.
inline TrainResult train_knapsack_proxy(const KnapsackCase& k, MlpNetwork init,
                                        const std::vector<Eigen::VectorXd>& inputs, int epochs, double lr) {
  return toy_train(std::move(init), inputs, epochs, lr,
                   [&](const Eigen::VectorXd& x, const Eigen::VectorXd& out) {
                     const Eigen::VectorXd target = heuristic_scores(x.tail(k.items()), k.w);
                     const Eigen::VectorXd r = out - target;
                     return std::make_pair(0.5 * r.squaredNorm(), r);
                   });
}

}  // namespace optverify
