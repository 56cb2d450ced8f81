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

#include "optverify/dcopf/desk.hpp"
#include "optverify/knapsack/desk.hpp"
#include "optverify/verify/oracle.hpp"
#include "optverify/verify/verify.hpp"

namespace optverify {
namespace {

TEST(ShiftedGeomean, Examples) {
  EXPECT_NEAR(shifted_geomean({0.0, 3.0}, 1.0), 1.0, 1e-12);
  for (double s : {0.01, 1.0, 10.0}) EXPECT_NEAR(shifted_geomean({4.2, 4.2}, s), 4.2, 1e-12);
  EXPECT_NEAR(shifted_geomean({2.0, 8.0, 4.0}, 0.0), 4.0, 1e-12);
  EXPECT_THROW(shifted_geomean({-1.0, 2.0}, 1.0), ModelError);
  EXPECT_THROW(shifted_geomean({}, 1.0), ModelError);
}

struct Desk {
  DcopfCase k;
  MlpNetwork net;
  LoadDomain dom;
};

Desk desk(const char* name, std::uint64_t seed, double u = 0.1, bool freeze = false) {
  const DcopfCase k = desk_case(name);
  return {k, MlpNetwork::random({k.buses, 8, k.buses}, seed), make_load_domain(k, u, freeze)};
}

Eigen::VectorXd uniform_in(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd z(lo.size());
  for (int i = 0; i < z.size(); ++i) z(i) = lo(i) + unit(rng) * (hi(i) - lo(i));
  return z;
}

TEST(TrueGap, SingleBusProxyIsExact) {
  const Desk f = desk("1bus", 2, 0.3);
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) EXPECT_NEAR(true_gap(f.k, f.net, f.dom, uniform_in(f.dom.lo(), f.dom.hi(), rng)), 0.0, 1e-7);
}

TEST(TrueGap, KnapsackRatioScoresOnUnitWeightsAreExact) {
  KnapsackCase k;
  k.v = Eigen::Vector4d(5.0, 3.0, 8.0, 1.0);
  k.w = Eigen::Vector4d::Ones();
  k.l = 2.0;
  const auto dom = make_knapsack_domain(k, 0.2);
  // Identity on the value block: scores = beta .* v.
  MlpNetwork net({DenseLayer{(Eigen::MatrixXd(4, 5) << Eigen::MatrixXd::Zero(4, 1), Eigen::MatrixXd::Identity(4, 4))
                                 .finished(),
                             Eigen::VectorXd::Zero(4), Activation::kIdentity}});
  std::mt19937_64 rng(2);
  for (int t = 0; t < 100; ++t) EXPECT_NEAR(true_gap(dom, net, uniform_in(dom.lo(), dom.hi(), rng)), 0.0, 1e-12);
}

TEST(TrueGap, NeverNegative) {
  std::mt19937_64 rng(3);
  for (const char* name : {"1bus", "2bus", "3bus"}) {
    const Desk f = desk(name, 5);
    OpfEvaluator opf(f.k);
    for (int t = 0; t < 3000; ++t)
      ASSERT_GE(proxy_gap(f.k, f.net, f.dom.loads(uniform_in(f.dom.lo(), f.dom.hi(), rng)), opf), -1e-6);
  }
  const auto kdom = make_knapsack_domain(desk_knapsack5(), 0.1);
  const MlpNetwork knet = MlpNetwork::random({6, 8, 5}, 4);
  for (int t = 0; t < 1000; ++t) ASSERT_GE(true_gap(kdom, knet, uniform_in(kdom.lo(), kdom.hi(), rng)), -1e-6);
}

TEST(Oracle, SingletonDomainIsThePointValue) {
  const Desk f = desk("3bus", 7, 0.0, true);
  const auto r = oracle_grid(f.k, f.net, f.dom, 10);
  EXPECT_EQ(r.points, 1);
  EXPECT_NEAR(r.max_gap, true_gap(f.k, f.net, f.dom, f.dom.center()), 1e-12);
  EXPECT_EQ(r.lipschitz_slack, 0.0);
}

TEST(Oracle, CenterOfAnOddGridMatchesTrueGap) {
  const Desk f = desk("3bus", 7);
  OpfEvaluator opf(f.k);
  const auto r = oracle_grid_generic(f.dom.lo(), f.dom.hi(), 3, 1, [&] {
    return std::function<double(const Eigen::VectorXd&)>([&](const Eigen::VectorXd& z) {
      return (z - f.dom.center()).norm() < 1e-12 ? proxy_gap(f.k, f.net, f.dom.loads(z), opf) : -1.0;
    });
  });
  EXPECT_NEAR(r.max_gap, true_gap(f.k, f.net, f.dom, f.dom.center()), 1e-12);
  EXPECT_NEAR((r.argmax - f.dom.center()).norm(), 0.0, 1e-15);
}

TEST(Oracle, NestedRefinementNeverLowersTheMaximum) {
  const Desk f = desk("2bus", 3);
  double prev = -kInf;
  for (int res : {3, 5, 9, 17}) {
    const auto r = oracle_grid(f.k, f.net, f.dom, res, 2);
    EXPECT_GE(r.max_gap, prev - 1e-12);
    prev = r.max_gap;
  }
}

TEST(Oracle, ThreadCountDoesNotChangeTheResult) {
  const Desk f = desk("3bus", 4);
  const auto a = oracle_grid(f.k, f.net, f.dom, 7, 1);
  const auto b = oracle_grid(f.k, f.net, f.dom, 7, 3);
  EXPECT_EQ(a.max_gap, b.max_gap);
  EXPECT_EQ(a.argmax, b.argmax);
  EXPECT_EQ(a.lipschitz_slack, b.lipschitz_slack);
}

TEST(Oracle, BudgetIsEnforced) {
  const Desk f = desk("3bus", 4);
  EXPECT_THROW(oracle_grid(f.k, f.net, f.dom, 60), ModelError);
}

TEST(Oracle, AgreesWithCompactMilpWithinGridSlack) {
  const Desk f = desk("2bus", 8);
  const auto r = oracle_grid(f.k, f.net, f.dom, 41);
  const auto rep = verify(f.k, f.net, f.dom, VerifyOptions{});
  ASSERT_EQ(rep.status, MilpStatus::kOptimal);
  EXPECT_LE(r.max_gap, rep.primal + 1e-6);
  EXPECT_LE(rep.primal - r.max_gap, std::max(1e-4, r.lipschitz_slack));
}

TEST(Verify, CompactAndBilevelAgree) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const Desk f = desk("2bus", seed, 0.05);
    VerifyOptions o;
    const auto c = verify(f.k, f.net, f.dom, o);
    o.formulation = Formulation::kBilevel;
    const auto b = verify(f.k, f.net, f.dom, o);
    ASSERT_EQ(c.status, MilpStatus::kOptimal);
    ASSERT_EQ(b.status, MilpStatus::kOptimal);
    EXPECT_NEAR(c.primal, b.primal, 1e-5) << seed;
    EXPECT_NEAR(c.dual, b.dual, 1e-5) << seed;
    EXPECT_GT(b.size_reduced.binaries, c.size_reduced.binaries);
    EXPECT_FALSE(c.has_flag("NumericsSuspect"));
    EXPECT_FALSE(b.has_flag("NumericsSuspect"));
  }
}

TEST(Verify, PointDomainCertifiesTheReferenceGap) {
  const Desk f = desk("3bus", 9, 0.0, true);
  for (auto form : {Formulation::kCompact, Formulation::kBilevel}) {
    VerifyOptions o;
    o.formulation = form;
    o.warm = WarmStart::kNone;
    const auto rep = verify(f.k, f.net, f.dom, o);
    const double g = true_gap(f.k, f.net, f.dom, f.dom.center());
    EXPECT_NEAR(rep.primal, g, 1e-6);
    EXPECT_NEAR(rep.dual, g, 1e-6);
  }
}

TEST(Verify, SandwichAndWarmStartOrdering) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const Desk f = desk("3bus", seed);
    VerifyOptions o;
    o.attack.starts = 4;
    o.attack.partitions = 2;
    o.vfa_cuts = 50;
    for (long cap : {1L, 5L, 100000L}) {
      o.limits.node_cap = cap;
      o.warm = WarmStart::kReference;
      const auto ref = verify(f.k, f.net, f.dom, o);
      o.warm = WarmStart::kPga;
      const auto pga = verify(f.k, f.net, f.dom, o);
      EXPECT_GE(pga.primal, ref.primal - 1e-9) << seed << " cap " << cap;
      EXPECT_LE(pga.warm_start_gap, pga.primal + 1e-6);
      EXPECT_LE(pga.primal, pga.dual + 1e-6);
      EXPECT_LE(ref.primal, ref.dual + 1e-6);
    }
  }
}

TEST(Verify, BoundModesGiveTheSameOptimum) {
  const Desk f = desk("2bus", 5);
  std::vector<double> opt;
  for (auto m : {BoundMode::kOff, BoundMode::kLp, BoundMode::kMilp}) {
    VerifyOptions o;
    o.obbt = m;
    const auto rep = verify(f.k, f.net, f.dom, o);
    ASSERT_EQ(rep.status, MilpStatus::kOptimal);
    opt.push_back(rep.primal);
    EXPECT_LE(rep.size_reduced.binaries, rep.size_full.binaries);
  }
  EXPECT_NEAR(opt[0], opt[1], 1e-5);
  EXPECT_NEAR(opt[0], opt[2], 1e-5);
}

TEST(Verify, TightMultiplierBoundIsFlagged) {
  const Desk f = desk("2bus", 2);
  VerifyOptions o;
  o.formulation = Formulation::kBilevel;
  const auto loose = verify(f.k, f.net, f.dom, o);
  EXPECT_FALSE(loose.has_flag("MultiplierNearBound"));
  o.model.m_dual = 1.05 * f.k.c.maxCoeff();
  const auto tight = verify(f.k, f.net, f.dom, o);
  EXPECT_TRUE(tight.has_flag("MultiplierNearBound")) << to_json(tight).dump();
}

TEST(Verify, KnapsackCompactMatchesGridOracle) {
  KnapsackCase k;
  k.v = Eigen::Vector3d(6.0, 5.0, 4.0);
  k.w = Eigen::Vector3d(3.0, 2.0, 2.0);
  k.l = 4.0;
  const auto dom = make_knapsack_domain(k, 0.2);
  const MlpNetwork net = MlpNetwork::random({4, 5, 3}, 11);
  VerifyOptions o;
  const auto rep = verify(k, net, dom, o);
  ASSERT_EQ(rep.status, MilpStatus::kOptimal);
  EXPECT_FALSE(rep.has_flag("NumericsSuspect"));
  const auto grid = oracle_grid(dom, net, 9);
  EXPECT_LE(grid.max_gap, rep.primal + 1e-6);
  EXPECT_LE(rep.primal - grid.max_gap, std::max(1e-4, grid.lipschitz_slack));
  EXPECT_NEAR(rep.primal, true_gap(dom, net, rep.incumbent), 1e-12);
}

TEST(Verify, KnapsackRejectsBilevelAndPga) {
  const auto k = desk_knapsack5();
  const auto dom = make_knapsack_domain(k, 0.1);
  const MlpNetwork net = MlpNetwork::random({6, 4, 5}, 1);
  VerifyOptions o;
  o.formulation = Formulation::kBilevel;
  try {
    verify(k, net, dom, o);
    FAIL();
  } catch (const ModelError& e) {
    EXPECT_STREQ(e.what(), "bilevel unavailable for non-convex family");
  }
  o.formulation = Formulation::kCompact;
  o.warm = WarmStart::kPga;
  EXPECT_THROW(verify(k, net, dom, o), ModelError);
}

TEST(Report, JsonAndCsvCarryTheBounds) {
  const Desk f = desk("2bus", 1);
  const auto rep = verify(f.k, f.net, f.dom, VerifyOptions{});
  const auto j = to_json(rep);
  EXPECT_EQ(j["family"], "dcopf");
  EXPECT_EQ(j["formulation"], "compact");
  EXPECT_EQ(j["status"], "Optimal");
  EXPECT_DOUBLE_EQ(j["primal"].get<double>(), rep.primal);
  EXPECT_EQ(j["incumbent"].size(), 3u);
  EXPECT_TRUE(j["size_full"].contains("binaries"));
  const std::string row = csv_row("2bus", rep);
  EXPECT_EQ(row.rfind("2bus,0.1,compact,Optimal,", 0), 0u) << row;
  EXPECT_EQ(csv_header(), "system,u,formulation,status,primal,dual,time");
}

TEST(Batch, MatchesIndividualRunsInOrder) {
  const DcopfCase k = desk_case_2bus();
  const MlpNetwork net = MlpNetwork::random({2, 6, 2}, 3);
  const std::vector<BatchConfig> cfgs = {{0.05, Formulation::kCompact, WarmStart::kReference},
                                         {0.1, Formulation::kBilevel, WarmStart::kNone},
                                         {0.1, Formulation::kCompact, WarmStart::kNone}};
  const auto reps = verify_batch(k, net, cfgs, VerifyOptions{}, 2);
  ASSERT_EQ(reps.size(), 3u);
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    VerifyOptions o;
    o.formulation = cfgs[i].formulation;
    o.warm = cfgs[i].warm;
    const auto one = verify(k, net, make_load_domain(k, cfgs[i].u), o);
    EXPECT_NEAR(reps[i].primal, one.primal, 1e-9);
    EXPECT_EQ(reps[i].formulation, cfgs[i].formulation);
    EXPECT_NEAR(reps[i].u, cfgs[i].u, 1e-15);
  }
}

}  // namespace
}  // namespace optverify
