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

// End-to-end pipelines: bounds (IBP or OBBT), optional warm start, MILP
// solve, and re-certification of the incumbent by direct evaluation.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "optverify/attack/pga.hpp"
#include "optverify/dcopf/formulations.hpp"
#include "optverify/encodings/bounds.hpp"
#include "optverify/knapsack/formulation.hpp"
#include "optverify/verify/report.hpp"

namespace optverify {

inline constexpr double kRecertifyTol = 1e-4;

enum class BoundMode { kLp, kMilp, kOff };
enum class WarmStart { kNone, kReference, kPga };

inline const char* to_string(BoundMode b) {
  switch (b) {
    case BoundMode::kLp: return "lp";
    case BoundMode::kMilp: return "milp";
    case BoundMode::kOff: return "off";
  }
  return "?";
}
inline const char* to_string(WarmStart w) {
  switch (w) {
    case WarmStart::kNone: return "none";
    case WarmStart::kReference: return "reference";
    case WarmStart::kPga: return "pga";
  }
  return "?";
}
inline BoundMode parse_bound_mode(const std::string& s) {
  if (s == "lp") return BoundMode::kLp;
  if (s == "milp") return BoundMode::kMilp;
  if (s == "off") return BoundMode::kOff;
  throw ModelError("unknown obbt mode '" + s + "'");
}
inline WarmStart parse_warm_start(const std::string& s) {
  if (s == "none") return WarmStart::kNone;
  if (s == "reference") return WarmStart::kReference;
  if (s == "pga") return WarmStart::kPga;
  throw ModelError("unknown warm start '" + s + "'");
}
inline Formulation parse_formulation(const std::string& s) {
  if (s == "compact") return Formulation::kCompact;
  if (s == "bilevel") return Formulation::kBilevel;
  throw ModelError("unknown formulation '" + s + "'");
}

struct VerifyOptions {
  Formulation formulation = Formulation::kCompact;
  BoundMode obbt = BoundMode::kLp;
  WarmStart warm = WarmStart::kReference;
  MilpLimits limits;
  FormulationOptions model;
  AttackConfig attack;
  int vfa_cuts = 200;
  std::uint64_t seed = 0;
};

// Phi(d) subtracted from the proxy cost at latent z.
inline double true_gap(const DcopfCase& k, const MlpNetwork& net, const LoadDomain& dom, const Eigen::VectorXd& z) {
  OpfEvaluator opf(k);
  return proxy_gap(k, net, dom.loads(z), opf);
}

// Best value minus the proxy's value at latent z.
inline double true_gap(const KnapsackDomain& dom, const MlpNetwork& net, const Eigen::VectorXd& z) {
  return knapsack_gap(dom, net, z);
}

namespace detail {

using clock = std::chrono::steady_clock;
inline double since(clock::time_point t0) { return std::chrono::duration<double>(clock::now() - t0).count(); }

inline LayerBounds network_bounds(const MlpNetwork& net, const InputMap& map, const Eigen::VectorXd& lo,
                                  const Eigen::VectorXd& hi, BoundMode mode, const MilpLimits& limits) {
  switch (mode) {
    case BoundMode::kOff: return ibp(net, map, lo, hi);
    case BoundMode::kLp: return obbt(net, map, lo, hi);
    case BoundMode::kMilp: {
      ObbtOptions o;
      o.relax = false;
      o.limits = limits;
      return obbt(net, map, lo, hi, o);
    }
  }
  throw ModelError("unknown bound mode");
}

// Shared tail: warm start, solve, re-certify. `gap_at` evaluates the true gap
// at a latent point.
template <typename Model, typename GapFn>
void solve_and_certify(VerificationReport& rep, Model& model, const std::optional<Eigen::VectorXd>& warm,
                       const MilpLimits& limits, std::uint64_t seed, GapFn&& gap_at) {
  MilpProblem& p = model.problem();
  if (warm) {
    p.warm_start = model.complete(*warm);
    rep.warm_start_gap = gap_at(*warm);
  }
  const auto t0 = clock::now();
  const MilpResult r = solve_milp(p, limits, seed);
  rep.milp_seconds = since(t0);
  rep.status = r.status;
  rep.log = r.log;
  rep.dual = r.best_bound;
  for (const auto& w : r.warnings) rep.flags.push_back(w);
  if (!r.has_incumbent) {
    rep.primal = -kInf;
    rep.milp_objective = -kInf;
    rep.incumbent = warm ? *warm : Eigen::VectorXd();
    if (warm) rep.primal = rep.warm_start_gap;
    return;
  }
  rep.milp_objective = r.objective;
  rep.incumbent = model.latent(r.x);
  rep.primal = gap_at(rep.incumbent);
  if (std::abs(rep.primal - r.objective) > kRecertifyTol) rep.flags.push_back("NumericsSuspect");
  // The warm-start point is itself a certified primal bound.
  if (warm && rep.warm_start_gap > rep.primal) {
    rep.primal = rep.warm_start_gap;
    rep.incumbent = *warm;
  }
  if (rep.primal > rep.dual + 1e-6 * (1.0 + std::abs(rep.dual)) &&
      !std::count(rep.flags.begin(), rep.flags.end(), "NumericsSuspect"))
    rep.flags.push_back("NumericsSuspect");
}

}  // namespace detail

inline DcopfModel build_dcopf_model(const DcopfCase& k, const MlpNetwork& net, const LoadDomain& dom,
                                    const LayerBounds& bounds, Formulation f, const FormulationOptions& opt) {
  return f == Formulation::kCompact ? build_compact_milp(k, net, dom, bounds, opt)
                                    : build_bilevel_milp(k, net, dom, bounds, opt);
}

inline VerificationReport verify(const DcopfCase& k, const MlpNetwork& net, const LoadDomain& dom,
                                 const VerifyOptions& opt) {
  const auto t0 = detail::clock::now();
  VerificationReport rep;
  rep.family = Family::kDcopf;
  rep.formulation = opt.formulation;
  rep.obbt = to_string(opt.obbt);
  rep.warm_start = to_string(opt.warm);
  rep.u = 0.5 * (dom.alpha_hi - dom.alpha_lo);

  auto tb = detail::clock::now();
  const LayerBounds bounds =
      detail::network_bounds(net, dom.input_map(), dom.lo(), dom.hi(), opt.obbt, opt.limits);
  rep.obbt_seconds = detail::since(tb);

  std::optional<Eigen::VectorXd> warm;
  if (opt.warm == WarmStart::kReference) {
    warm = project_latent(dom.center(), dom);
  } else if (opt.warm == WarmStart::kPga) {
    const auto ta = detail::clock::now();
    const auto vfa = build_dcopf_vfa(k, dom, opt.vfa_cuts, opt.seed);
    const auto attack = pga_vfa(k, net, dom, vfa, opt.attack, opt.seed);
    // The reference point is always offered too; the better of the two seeds the MILP.
    const Eigen::VectorXd ref = project_latent(dom.center(), dom);
    warm = true_gap(k, net, dom, ref) > attack.true_gap ? ref : attack.z;
    rep.attack_seconds = detail::since(ta);
  }

  FormulationOptions full = opt.model, reduced = opt.model;
  full.eliminate_stable = false;
  reduced.eliminate_stable = true;
  rep.size_full = model_size(build_dcopf_model(k, net, dom, bounds, opt.formulation, full).problem());
  DcopfModel model = build_dcopf_model(k, net, dom, bounds, opt.formulation, opt.model);
  rep.size_reduced = opt.model.eliminate_stable ? model_size(model.problem())
                                                : model_size(build_dcopf_model(k, net, dom, bounds, opt.formulation, reduced).problem());

  OpfEvaluator opf(k);
  detail::solve_and_certify(rep, model, warm, opt.limits, opt.seed,
                            [&](const Eigen::VectorXd& z) { return proxy_gap(k, net, dom.loads(z), opf); });

  // Multipliers pressed against their artificial bound suggest it cuts off
  // the true lower-level optimum.
  if (opt.formulation == Formulation::kBilevel && rep.log.status != MilpStatus::kInfeasible &&
      rep.incumbent.size() > 0) {
    const double md = opt.model.m_dual > 0.0 ? opt.model.m_dual : 10.0 * k.m_th;
    const auto x = model.complete(rep.incumbent);
    const auto& lp = model.problem().lp;
    for (int j = 0; j < lp.num_vars(); ++j) {
      const auto& name = lp.var(j).name;
      if ((name.rfind("kkt/lambda", 0) == 0 || name.rfind("kkt/mu", 0) == 0) && std::abs(x[j]) >= 0.9 * md) {
        rep.flags.push_back("MultiplierNearBound");
        break;
      }
    }
  }
  rep.seconds = detail::since(t0);
  return rep;
}

inline VerificationReport verify(const KnapsackCase& k, const MlpNetwork& net, const KnapsackDomain& dom,
                                 const VerifyOptions& opt) {
  if (opt.formulation == Formulation::kBilevel) throw ModelError("bilevel unavailable for non-convex family");
  if (opt.warm == WarmStart::kPga) throw ModelError("pga warm start unavailable for non-convex family");
  if (!(dom.ref.v == k.v && dom.ref.w == k.w && dom.ref.l == k.l)) throw ModelError("knapsack domain built for another case");
  const auto t0 = detail::clock::now();
  VerificationReport rep;
  rep.family = Family::kKnapsack;
  rep.formulation = opt.formulation;
  rep.obbt = to_string(opt.obbt);
  rep.warm_start = to_string(opt.warm);
  rep.u = dom.u;

  auto tb = detail::clock::now();
  const LayerBounds bounds =
      detail::network_bounds(net, dom.input_map(), dom.lo(), dom.hi(), opt.obbt, opt.limits);
  rep.obbt_seconds = detail::since(tb);

  std::optional<Eigen::VectorXd> warm;
  if (opt.warm == WarmStart::kReference) warm = dom.center();

  rep.size_full = model_size(build_knapsack_compact_milp(dom, net, bounds, false).problem());
  KnapsackModel model = build_knapsack_compact_milp(dom, net, bounds, opt.model.eliminate_stable);
  rep.size_reduced = opt.model.eliminate_stable ? model_size(model.problem())
                                                : model_size(build_knapsack_compact_milp(dom, net, bounds, true).problem());
  detail::solve_and_certify(rep, model, warm, opt.limits, opt.seed,
                            [&](const Eigen::VectorXd& z) { return knapsack_gap(dom, net, z); });
  rep.seconds = detail::since(t0);
  return rep;
}

struct BatchConfig {
  double u = 0.1;
  Formulation formulation = Formulation::kCompact;
  WarmStart warm = WarmStart::kReference;
};

// Runs each configuration on its own domain make_load_domain(k, u) with the
// remaining options from `base`, on up to `workers` threads. Reports come
// back in input order.
inline std::vector<VerificationReport> verify_batch(const DcopfCase& k, const MlpNetwork& net,
                                                    const std::vector<BatchConfig>& configs,
                                                    const VerifyOptions& base, int workers) {
  if (workers < 1) throw ModelError("verify_batch needs at least one worker");
  std::vector<VerificationReport> out(configs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  auto work = [&] {
    try {
      for (std::size_t i; (i = next.fetch_add(1)) < configs.size();) {
        VerifyOptions o = base;
        o.formulation = configs[i].formulation;
        o.warm = configs[i].warm;
        out[i] = verify(k, net, make_load_domain(k, configs[i].u), o);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (!error) error = std::current_exception();
      next = configs.size();
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::min<int>(workers, static_cast<int>(configs.size())); ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace optverify
