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

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "optverify/knapsack/desk.hpp"
#include "optverify/knapsack/formulation.hpp"

namespace optverify {
namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// Independent oracle: every subset, best value.
double brute_force(const Eigen::VectorXd& v, const Eigen::VectorXd& w, double l) {
  double best = 0.0;
  const int k = static_cast<int>(v.size());
  for (int mask = 0; mask < (1 << k); ++mask) {
    double val = 0.0, wt = 0.0;
    for (int i = 0; i < k; ++i)
      if (mask >> i & 1) {
        val += v(i);
        wt += w(i);
      }
    if (wt <= l) best = std::max(best, val);
  }
  return best;
}

TEST(GreedyRepair, HandTrace) {
  EXPECT_EQ(greedy_repair(vec({3, 1, 2}), vec({2, 2, 2}), 4), vec({1, 0, 1}));
  EXPECT_EQ(greedy_repair(vec({3, 1, 2}), vec({2, 2, 2}), 0), vec({0, 0, 0}));
  EXPECT_EQ(greedy_repair(vec({3, 1, 2}), vec({2, 2, 2}), 6), vec({1, 1, 1}));
}

TEST(GreedyRepair, StopsAtFirstMisfit) {
  // Item 1 does not fit after item 0, so the lighter item 2 is never tried.
  EXPECT_EQ(greedy_repair(vec({3, 2, 1}), vec({2, 3, 1}), 4), vec({1, 0, 0}));
}

TEST(GreedyRepair, TiesGoToLowerIndex) {
  EXPECT_EQ(greedy_repair(vec({1, 1}), vec({2, 2}), 2), vec({1, 0}));
}

TEST(GreedyRepair, AlwaysFits) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> wi(1, 9);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 1 + trial % 8;
    Eigen::VectorXd s(k), w(k);
    for (int i = 0; i < k; ++i) {
      s(i) = u(rng);
      w(i) = wi(rng);
    }
    const double l = 20.0 * u(rng);
    EXPECT_LE(w.dot(greedy_repair(s, w, l)), l);
  }
}

TEST(HeuristicScores, Ratios) {
  EXPECT_EQ(heuristic_scores(vec({4, 2}), vec({2, 2})), vec({2, 1}));
  EXPECT_EQ(heuristic_scores(vec({0, 0}), vec({2, 3})), vec({0, 0}));
  EXPECT_THROW(heuristic_scores(vec({1}), vec({0})), ModelError);
}

TEST(KnapsackExact, SmallExamples) {
  const auto a = knapsack_exact(vec({4, 2}), vec({2, 2}), 2);
  EXPECT_EQ(a.value, 4.0);
  EXPECT_EQ(a.y, vec({1, 0}));
  EXPECT_EQ(knapsack_exact(vec({4, 2}), vec({2, 2}), 0).value, 0.0);
}

TEST(KnapsackExact, EnumerationMatchesDynamicProgram) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> vi(0, 30), wi(1, 12), li(0, 50);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd v(12), w(12);
    for (int i = 0; i < 12; ++i) {
      v(i) = vi(rng);
      w(i) = wi(rng);
    }
    const double l = li(rng);
    const auto e = knapsack_enumerate(v, w, l), d = knapsack_dp(v, w, l);
    EXPECT_EQ(e.value, d.value) << trial;
    EXPECT_LE(w.dot(d.y), l);
    EXPECT_EQ(v.dot(d.y), d.value);
  }
}

TEST(KnapsackExact, MatchesBruteForceOnRealValues) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::uniform_int_distribution<int> wi(1, 6);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd v(7), w(7);
    for (int i = 0; i < 7; ++i) {
      v(i) = u(rng);
      w(i) = wi(rng);
    }
    const double l = 2.0 * u(rng);
    EXPECT_NEAR(knapsack_exact(v, w, l).value, brute_force(v, w, l), 1e-12);
  }
}

TEST(KnapsackExact, DynamicProgramRejectsFractionalWeights) {
  EXPECT_THROW(knapsack_dp(vec({1, 2}), vec({1.5, 2}), 3), ModelError);
}

TEST(KnapsackCaseIo, RoundTripAndValidation) {
  const KnapsackCase k = desk_knapsack5();
  const KnapsackCase back = knapsack_case_from_json(to_json(k));
  EXPECT_EQ(back.v, k.v);
  EXPECT_EQ(back.w, k.w);
  EXPECT_EQ(back.l, k.l);
  auto j = to_json(k);
  j["w"][0] = -1.0;
  EXPECT_THROW(knapsack_case_from_json(j), ModelError);
  j = to_json(k);
  j["K"] = 4;
  EXPECT_THROW(knapsack_case_from_json(j), ModelError);
}

// Fixed scores and capacity: the repair block must admit only the greedy
// selection. Max and min of sum 2^j y_hat_j coincide iff y_hat is unique.
TEST(RepairEncoding, MatchesGreedyOnDistinctScores) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_int_distribution<int> wi(1, 5);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + trial % 5;
    Eigen::VectorXd s(k), w(k);
    std::set<double> seen;
    for (int i = 0; i < k; ++i) {
      do s(i) = std::round(u(rng) * 100) / 100;
      while (!seen.insert(s(i)).second);
      w(i) = wi(rng);
    }
    const double cap = std::uniform_int_distribution<int>(0, static_cast<int>(w.sum()))(rng);
    EncodingContext ctx;
    std::vector<LinExpr> se;
    std::vector<Interval> sb;
    for (int i = 0; i < k; ++i) {
      se.push_back(LinExpr::var(ctx.add_var("s" + std::to_string(i), s(i), s(i))));
      sb.push_back({s(i), s(i)});
    }
    const LinExpr c = LinExpr::var(ctx.add_var("C", cap, cap));
    const auto rep = encode_greedy_repair(ctx, se, sb, w, c, cap, cap, "g");
    const Eigen::VectorXd want = greedy_repair(s, w, cap);
    double code = 0.0;
    for (int j = 0; j < k; ++j) code += std::ldexp(want(j), j);
    for (Sense sense : {Sense::kMaximize, Sense::kMinimize}) {
      MilpProblem p = ctx.problem();
      p.lp.set_sense(sense);
      for (int j = 0; j < k; ++j) p.lp.set_objective(rep.y_hat[j], std::ldexp(1.0, j));
      const auto r = solve_milp(p);
      ASSERT_EQ(r.status, MilpStatus::kOptimal) << trial;
      EXPECT_NEAR(r.objective, code, 1e-6) << "trial " << trial;
      for (int a = 0; a < k; ++a) {
        double row = 0.0, col = 0.0;
        for (int j = 0; j < k; ++j) {
          row += r.x[rep.perm[a][j]];
          col += r.x[rep.perm[j][a]];
        }
        EXPECT_NEAR(row, 1.0, 1e-6);
        EXPECT_NEAR(col, 1.0, 1e-6);
      }
    }
    std::vector<double> x0;
    for (const auto& v : ctx.problem().lp.vars()) x0.push_back(v.lower);
    const auto x = ctx.complete(x0);
    EXPECT_LE(ctx.problem().lp.max_violation(x), 1e-9);
  }
}

TEST(RepairEncoding, EqualScoresKeepIndexOrder) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> si(-1, 1), wi(1, 4);
  for (int trial = 0; trial < 40; ++trial) {
    const int k = 3 + trial % 3;
    Eigen::VectorXd s(k), w(k);
    for (int i = 0; i < k; ++i) {
      s(i) = si(rng);
      w(i) = wi(rng);
    }
    const double cap = std::uniform_int_distribution<int>(0, static_cast<int>(w.sum()))(rng);
    EncodingContext ctx;
    std::vector<LinExpr> se;
    std::vector<Interval> sb;
    for (int i = 0; i < k; ++i) {
      se.push_back(LinExpr::var(ctx.add_var("s" + std::to_string(i), s(i), s(i))));
      sb.push_back({s(i), s(i)});
    }
    const LinExpr c = LinExpr::var(ctx.add_var("C", cap, cap));
    const auto rep = encode_greedy_repair(ctx, se, sb, w, c, cap, cap, "g");
    const Eigen::VectorXd want = greedy_repair(s, w, cap);
    double code = 0.0;
    for (int j = 0; j < k; ++j) code += std::ldexp(want(j), j);
    for (Sense sense : {Sense::kMaximize, Sense::kMinimize}) {
      MilpProblem p = ctx.problem();
      p.lp.set_sense(sense);
      for (int j = 0; j < k; ++j) p.lp.set_objective(rep.y_hat[j], std::ldexp(1.0, j));
      const auto r = solve_milp(p);
      ASSERT_EQ(r.status, MilpStatus::kOptimal) << trial;
      EXPECT_NEAR(r.objective, code, 1e-6) << "trial " << trial;
    }
  }
}

struct KFixture {
  KnapsackDomain dom;
  MlpNetwork net;
  LayerBounds bounds;
};

KFixture kfixture(double u, std::uint64_t seed) {
  KFixture f{make_knapsack_domain(desk_knapsack5(), u), MlpNetwork::random({6, 6, 5}, seed), {}};
  f.bounds = obbt(f.net, f.dom.input_map(), f.dom.lo(), f.dom.hi());
  return f;
}

Eigen::VectorXd sample(const KnapsackDomain& dom, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(1.0 - dom.u, 1.0 + dom.u);
  Eigen::VectorXd z(dom.dim());
  for (int i = 0; i < z.size(); ++i) z(i) = u(rng);
  return z;
}

TEST(KnapsackMilp, CompletionIsFeasibleAndPricesTheGap) {
  const KFixture f = kfixture(0.1, 2);
  const KnapsackModel m = build_knapsack_compact_milp(f.dom, f.net, f.bounds);
  std::mt19937_64 rng(5);
  for (int s = 0; s < 200; ++s) {
    const Eigen::VectorXd z = sample(f.dom, rng);
    const auto x = m.complete(z);
    EXPECT_LE(m.problem().lp.max_violation(x), 1e-7);
    EXPECT_NEAR(m.problem().lp.objective_value(x), knapsack_gap(f.dom, f.net, z), 1e-9);
  }
}

TEST(KnapsackMilp, OptimumDominatesSamplesAndIsAttained) {
  for (std::uint64_t seed : {1, 4}) {
    const KFixture f = kfixture(0.1, seed);
    KnapsackModel m = build_knapsack_compact_milp(f.dom, f.net, f.bounds);
    m.problem().warm_start = m.complete(f.dom.center());
    const auto r = solve_milp(m.problem());
    ASSERT_EQ(r.status, MilpStatus::kOptimal);
    EXPECT_GE(r.objective, knapsack_gap(f.dom, f.net, f.dom.center()) - 1e-9);
    std::mt19937_64 rng(seed);
    for (int s = 0; s < 2000; ++s) EXPECT_GE(r.objective, knapsack_gap(f.dom, f.net, sample(f.dom, rng)) - 1e-6);
    EXPECT_NEAR(r.objective, knapsack_gap(f.dom, f.net, m.latent(r.x)), 1e-5);
  }
}

TEST(KnapsackMilp, ExactRatioScoresWithUnitWeightsHaveZeroGap) {
  KnapsackCase k;
  k.v = vec({5, 3, 4});
  k.w = vec({1, 1, 1});
  k.l = 2.0;
  const KnapsackDomain dom = make_knapsack_domain(k, 0.1);
  // Scores = input values / w: a single identity layer reading beta .* v.
  Eigen::MatrixXd wm = Eigen::MatrixXd::Zero(3, 4);
  for (int i = 0; i < 3; ++i) wm(i, 1 + i) = 1.0 / k.w(i);
  const MlpNetwork net({DenseLayer{wm, Eigen::VectorXd::Zero(3), Activation::kIdentity}});
  const auto m = build_knapsack_compact_milp(dom, net, ibp(net, dom.input_map(), dom.lo(), dom.hi()));
  const auto r = solve_milp(m.problem());
  ASSERT_EQ(r.status, MilpStatus::kOptimal);
  EXPECT_NEAR(r.objective, 0.0, 1e-7);
}

TEST(KnapsackMilp, RejectsFractionalWeights) {
  KFixture f = kfixture(0.1, 1);
  f.dom.ref.w(0) = 2.5;
  EXPECT_THROW(build_knapsack_compact_milp(f.dom, f.net, f.bounds), ModelError);
}

TEST(KnapsackGap, NeverNegative) {
  const KFixture f = kfixture(0.2, 3);
  std::mt19937_64 rng(6);
  for (int s = 0; s < 5000; ++s) EXPECT_GE(knapsack_gap(f.dom, f.net, sample(f.dom, rng)), -1e-6);
}

TEST(KnapsackTraining, LossDecreasesEarly) {
  const KnapsackDomain dom = make_knapsack_domain(desk_knapsack5(), 0.2);
  std::mt19937_64 rng(1);
  std::vector<Eigen::VectorXd> inputs;
  for (int s = 0; s < 200; ++s) inputs.push_back(dom.net_input(sample(dom, rng)));
  const auto res = train_knapsack_proxy(dom.ref, MlpNetwork::random({6, 16, 5}, 3), inputs, 200, 1e-3);
  ASSERT_EQ(res.loss.size(), 200u);
  for (int e = 1; e < 10; ++e) EXPECT_LT(res.loss[e], res.loss[e - 1]) << e;
  EXPECT_LT(res.loss.back(), res.loss.front());
}

}  // namespace
}  // namespace optverify
