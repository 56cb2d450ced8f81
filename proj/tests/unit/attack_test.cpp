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

#include "optverify/attack/pga.hpp"
#include "optverify/dcopf/desk.hpp"
#include "optverify/dcopf/formulations.hpp"
#include "optverify/encodings/bounds.hpp"
#include "oracles/vertex_enum.hpp"

namespace optverify {
namespace {

Eigen::VectorXd uniform_in(const LoadDomain& dom, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd z(dom.dim());
  for (int i = 0; i < z.size(); ++i) z(i) = dom.lo()(i) + unit(rng) * (dom.hi()(i) - dom.lo()(i));
  return z;
}

// Phi from a cold solve of a freshly built LP.
double phi_cold(const DcopfCase& k, const Eigen::VectorXd& d) {
  SimplexSolver s(build_opf_lp(k, d));
  const auto sol = s.solve();
  EXPECT_EQ(sol.status, LpStatus::kOptimal);
  return sol.objective;
}

TEST(Vfa, LinearValueFunctionIsReproducedEverywhere) {
  // min c.y s.t. y >= x: Phi(x) = c.x for c >= 0.
  const Eigen::Vector3d c(2.0, 0.5, 3.0);
  auto solve_at = [&](const Eigen::VectorXd& x) {
    LinearProgram lp(Sense::kMinimize);
    for (int i = 0; i < 3; ++i) lp.add_var(-kInf, kInf, c(i));
    for (int i = 0; i < 3; ++i) lp.add_row({{i, 1.0}}, Relation::kGreaterEqual, x(i));
    SimplexSolver s(lp);
    return s.solve();
  };
  const Eigen::Vector3d x0(0.3, -1.0, 2.0);
  const auto sol = solve_at(x0);
  const auto vfa = build_vfa({{x0, sol.objective, Eigen::Map<const Eigen::VectorXd>(sol.duals.data(), 3)}});
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int t = 0; t < 50; ++t) {
    const Eigen::Vector3d x(g(rng), g(rng), g(rng));
    EXPECT_NEAR(vfa(x), c.dot(x), 1e-9);
  }
}

TEST(Vfa, AnchorsAreReconstructedByTheirOwnCut) {
  const DcopfCase k = desk_case_3bus();
  const LoadDomain dom = make_load_domain(k, 0.1);
  const auto vfa = build_dcopf_vfa(k, dom, 50, 3);
  for (int i = 0; i < vfa.size(); ++i) {
    const auto& cut = vfa.cuts()[i];
    EXPECT_NEAR(cut.at(cut.anchor), phi_cold(k, dom.loads(cut.anchor)), 1e-9);
    EXPECT_GE(vfa(cut.anchor), cut.value - 1e-9);
  }
}

TEST(Vfa, UnderEstimatesAtFreshPoints) {
  const DcopfCase k = desk_case_3bus();
  const LoadDomain dom = make_load_domain(k, 0.1);
  const auto vfa = build_dcopf_vfa(k, dom, 200, 5);
  std::mt19937_64 rng(77);
  for (int t = 0; t < 1000; ++t) {
    const Eigen::VectorXd z = uniform_in(dom, rng);
    ASSERT_LE(vfa(z), phi_cold(k, dom.loads(z)) + 1e-6);
  }
  // A few points against the vertex-enumeration oracle.
  for (int t = 0; t < 10; ++t) {
    const Eigen::VectorXd z = uniform_in(dom, rng);
    const auto e = oracle::enumerate_vertices(build_opf_lp(k, dom.loads(z)), 1e3);
    ASSERT_EQ(e.status, oracle::EnumStatus::kOptimal);
    EXPECT_LE(vfa(z), e.objective + 1e-6);
  }
}

TEST(Vfa, TiesGoToLowestIndexAndDimensionsMustAgree) {
  const Eigen::Vector2d a(0.0, 0.0), s(1.0, -1.0);
  const auto vfa = build_vfa({{a, 1.0, s}, {a, 1.0, s}, {a, 0.0, s}});
  EXPECT_EQ(vfa.eval(Eigen::Vector2d(0.3, 0.1)).cut, 0);
  EXPECT_THROW(build_vfa({{a, 1.0, s}, {Eigen::Vector3d::Zero(), 0.0, Eigen::Vector3d::Zero()}}), ModelError);
  EXPECT_THROW(build_vfa({}), ModelError);
}

TEST(MultiStart, SingleStartIsTheCenter) {
  const LoadDomain dom = make_load_domain(desk_case_2bus(), 0.1);
  const auto s = multi_start(dom, 1, 9);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_NEAR(s[0](0), 1.0, 1e-15);
  EXPECT_NEAR(s[0](1), 0.0, 1e-15);
  EXPECT_NEAR(s[0](2), 0.0, 1e-15);
}

TEST(MultiStart, CornersFirstThenUniformDraws) {
  const LoadDomain dom = make_load_domain(desk_case_2bus(), 0.1);
  const auto s = multi_start(dom, 8 + 3, 4);
  ASSERT_EQ(s.size(), 11u);
  for (int c = 0; c < 8; ++c)
    for (int i = 0; i < 3; ++i) EXPECT_EQ(s[c](i), ((c >> i) & 1) ? dom.hi()(i) : dom.lo()(i));
  for (int c = 8; c < 11; ++c) {
    EXPECT_TRUE(dom.contains(s[c]));
    EXPECT_TRUE(((s[c].array() > dom.lo().array()) && (s[c].array() < dom.hi().array())).all());
  }
  const auto again = multi_start(dom, 11, 4);
  for (int c = 0; c < 11; ++c) EXPECT_EQ(s[c], again[c]);
}

TEST(MultiStart, FrozenCoordinatesDoNotMultiplyCorners) {
  const LoadDomain dom = make_load_domain(desk_case_3bus(), 0.1, true);
  const auto s = multi_start(dom, 3, 1);
  EXPECT_EQ(s[0](0), 0.9);
  EXPECT_EQ(s[1](0), 1.1);
  EXPECT_TRUE(dom.contains(s[2]));
  EXPECT_THROW(multi_start(dom, 0, 1), ModelError);
}

TEST(Partition, SlabsTileTheAlphaInterval) {
  const LoadDomain dom = make_load_domain(desk_case_2bus(), 0.1);
  const auto one = partition_domain(dom, 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].alpha_lo, dom.alpha_lo);
  EXPECT_EQ(one[0].alpha_hi, dom.alpha_hi);
  const auto two = partition_domain(dom, 2);
  EXPECT_NEAR(two[0].alpha_lo, 0.9, 1e-15);
  EXPECT_NEAR(two[0].alpha_hi, 1.0, 1e-15);
  EXPECT_NEAR(two[1].alpha_lo, 1.0, 1e-15);
  EXPECT_NEAR(two[1].alpha_hi, 1.1, 1e-15);
  const auto four = partition_domain(dom, 4);
  EXPECT_EQ(four.front().alpha_lo, dom.alpha_lo);
  EXPECT_EQ(four.back().alpha_hi, dom.alpha_hi);
  for (int j = 0; j < 4; ++j) {
    EXPECT_NEAR(four[j].alpha_hi - four[j].alpha_lo, 0.05, 1e-12);
    EXPECT_EQ(four[j].beta_lo, dom.beta_lo);
    if (j > 0) EXPECT_EQ(four[j].alpha_lo, four[j - 1].alpha_hi);
  }
}

TEST(Projection, ClampsToTheNearestBoxPoint) {
  const LoadDomain dom = make_load_domain(desk_case_2bus(), 0.1);
  const Eigen::Vector3d inside(1.02, 0.01, -0.03);
  EXPECT_EQ(project_latent(inside, dom), inside);
  const Eigen::Vector3d out(1.2, 0.0, -0.3);
  const Eigen::VectorXd p = project_latent(out, dom);
  EXPECT_EQ(p(0), 1.1);
  EXPECT_EQ(p(2), -0.05);
  EXPECT_EQ(project_latent(p, dom), p);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 500; ++t) EXPECT_LE((p - out).norm(), (uniform_in(dom, rng) - out).norm() + 1e-15);
}

// Uniform costs and loose lines: the proxy cost and Phi both equal c * sum(d)
// up to the projection tolerance.
TEST(Pga, ZeroSurrogateGradientLeavesTheStartInPlace) {
  DcopfCase k = desk_case_2bus();
  k.c.setConstant(20.0);
  k.f_bar.setConstant(100.0);
  MlpNetwork net = MlpNetwork::random({2, 4, 2}, 1);
  for (int i = 0; i < net.num_layers(); ++i) net.layer(i).w.setZero();
  const LoadDomain dom = make_load_domain(k, 0.1);
  const auto vfa = build_dcopf_vfa(k, dom, 10, 2);
  OpfEvaluator opf(k);
  const Eigen::Vector3d z0(1.03, 0.01, -0.02);
  const auto run = pga_vfa_run(k, net, dom, vfa, AttackConfig{}, z0, opf);
  EXPECT_EQ(run.z_best, z0);
  EXPECT_EQ(run.stop_reason, "stalled");
  EXPECT_EQ(static_cast<int>(run.trace.size()), 1 + 20);
  EXPECT_NEAR(run.best_true_gap, 0.0, 1e-7);
}

struct Desk {
  DcopfCase k;
  MlpNetwork net;
  LoadDomain dom;
};

Desk desk(const char* name, std::uint64_t seed, double u = 0.1) {
  const DcopfCase k = desk_case(name);
  return {k, MlpNetwork::random({k.buses, 8, k.buses}, seed), make_load_domain(k, u)};
}

double grid_max(const Desk& f, int res) {
  OpfEvaluator opf(f.k);
  const int n = f.dom.dim();
  long total = 1;
  for (int i = 0; i < n; ++i) total *= res;
  double best = -kInf;
  for (long g = 0; g < total; ++g) {
    Eigen::VectorXd z(n);
    long r = g;
    for (int i = 0; i < n; ++i, r /= res)
      z(i) = f.dom.lo()(i) + (f.dom.hi()(i) - f.dom.lo()(i)) * static_cast<double>(r % res) / (res - 1);
    best = std::max(best, proxy_gap(f.k, f.net, f.dom.loads(z), opf));
  }
  return best;
}

TEST(Pga, PrimalBoundBelowMilpAndNearGridMaximum) {
  for (std::uint64_t seed : {1, 2, 3, 4}) {
    const Desk f = desk("2bus", seed);
    const auto vfa = build_dcopf_vfa(f.k, f.dom, 100, seed);
    AttackConfig cfg;
    cfg.starts = 8;
    const auto res = pga_vfa(f.k, f.net, f.dom, vfa, cfg, seed);
    const auto model = build_compact_milp(f.k, f.net, f.dom, obbt(f.net, f.dom.input_map(), f.dom.lo(), f.dom.hi()));
    const auto milp = solve_milp(model.problem());
    ASSERT_EQ(milp.status, MilpStatus::kOptimal);
    EXPECT_LE(res.true_gap, milp.objective + 1e-5) << seed;
    EXPECT_GE(res.true_gap, 0.95 * grid_max(f, 41)) << seed;
    EXPECT_TRUE(f.dom.contains(res.z));
    EXPECT_GE(res.true_gap, -1e-6);
  }
}

TEST(Pga, StepScheduleAndStopRule) {
  const Desk f = desk("3bus", 6);
  const auto vfa = build_dcopf_vfa(f.k, f.dom, 100, 1);
  AttackConfig cfg;
  cfg.starts = 6;
  cfg.partitions = 2;
  const auto res = pga_vfa(f.k, f.net, f.dom, vfa, cfg, 5);
  for (const auto& run : res.runs) {
    ASSERT_GE(run.trace.size(), 2u);
    int stale = 0;
    double step = cfg.initial_step;
    double best = run.trace.front().best_true_gap;
    for (std::size_t i = 1; i < run.trace.size(); ++i) {
      const auto& e = run.trace[i];
      EXPECT_EQ(e.iteration, static_cast<int>(i));
      EXPECT_DOUBLE_EQ(e.step, step);
      EXPECT_EQ(e.true_gap.has_value(), e.improved);
      EXPECT_GE(e.best_true_gap, best);
      best = e.best_true_gap;
      stale = e.improved ? 0 : stale + 1;
      if (stale > 0 && stale % 10 == 0) step /= 10.0;
    }
    EXPECT_LE(run.trace.back().iteration, 500);
    if (run.stop_reason == "stalled") EXPECT_EQ(stale, 20);
    else EXPECT_EQ(run.trace.back().iteration, 500);
  }
}

TEST(Pga, IterationCapIsHonored) {
  const Desk f = desk("2bus", 2);
  const auto vfa = build_dcopf_vfa(f.k, f.dom, 20, 1);
  AttackConfig cfg;
  cfg.max_iter = 5;
  cfg.stop_after = 100;
  OpfEvaluator opf(f.k);
  const auto run = pga_vfa_run(f.k, f.net, f.dom, vfa, cfg, f.dom.center(), opf);
  EXPECT_EQ(run.trace.back().iteration, 5);
  EXPECT_EQ(run.stop_reason, "max_iter");
}

TEST(Pga, DeterministicAcrossRunsAndThreadCounts) {
  const Desk f = desk("3bus", 3);
  const auto vfa = build_dcopf_vfa(f.k, f.dom, 50, 1);
  AttackConfig cfg;
  cfg.starts = 4;
  cfg.partitions = 3;
  auto strip = [](AttackResult r) {
    auto j = to_json(r);
    j.erase("seconds");
    return j;
  };
  const auto a = strip(pga_vfa(f.k, f.net, f.dom, vfa, cfg, 42));
  const auto b = strip(pga_vfa(f.k, f.net, f.dom, vfa, cfg, 42));
  cfg.workers = 4;
  const auto c = strip(pga_vfa(f.k, f.net, f.dom, vfa, cfg, 42));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  EXPECT_EQ(a["runs"].size(), 12u);
  EXPECT_TRUE(a["runs"][0]["trace"][0].contains("surrogate"));
}

TEST(Pga, PartitionedAttackNoWorseThanSingleDomain) {
  for (const char* name : {"2bus", "3bus"})
    for (std::uint64_t seed : {1, 2, 3}) {
      const Desk f = desk(name, seed);
      const auto vfa = build_dcopf_vfa(f.k, f.dom, 100, seed);
      AttackConfig single;
      single.starts = 16;
      AttackConfig split;
      split.starts = 4;
      split.partitions = 4;
      const double g1 = pga_vfa(f.k, f.net, f.dom, vfa, single, seed).true_gap;
      const double g4 = pga_vfa(f.k, f.net, f.dom, vfa, split, seed).true_gap;
      EXPECT_GE(g4, g1 - 1e-9) << name << " seed " << seed;
    }
}

TEST(Pga, RejectsBadConfigAndMismatchedVfa) {
  const Desk f = desk("2bus", 1);
  const auto vfa = build_dcopf_vfa(f.k, f.dom, 5, 1);
  AttackConfig cfg;
  cfg.decay = 1.0;
  EXPECT_THROW(pga_vfa(f.k, f.net, f.dom, vfa, cfg, 1), ModelError);
  const Desk g = desk("3bus", 1);
  EXPECT_THROW(pga_vfa(g.k, g.net, g.dom, vfa, AttackConfig{}, 1), ModelError);
}

}  // namespace
}  // namespace optverify
