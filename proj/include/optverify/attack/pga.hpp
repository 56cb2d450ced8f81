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

// Projected gradient ascent on the surrogate gap cost(z) - Phi_hat(z) over the
// latent load box, with multi-start and slab partitioning of alpha. Candidates
// are ranked by their true gap, evaluated whenever the surrogate improves.

#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "optverify/attack/vfa.hpp"
#include "optverify/dcopf/proxy.hpp"

namespace optverify {

struct AttackConfig {
  double initial_step = 1e-3;
  double decay = 10.0;
  int decay_after = 10;  // non-improving iterations per step reduction
  int stop_after = 20;   // non-improving iterations before stopping
  int max_iter = 500;
  int workers = 1;       // threads
  int starts = 1;        // starts per partition
  int partitions = 1;    // slabs along alpha

  void validate() const {
    if (!(initial_step > 0.0) || !(decay > 1.0) || decay_after < 1 || stop_after < 1 || max_iter < 1 ||
        workers < 1 || starts < 1 || partitions < 1)
      throw ModelError("attack config: all fields must be positive and decay > 1");
  }
};

struct TraceEntry {
  int iteration = 0;
  double step = 0.0;       // step used to reach this iterate
  double surrogate = 0.0;
  bool improved = false;
  std::optional<double> true_gap;
  double best_true_gap = 0.0;
};

struct AttackRun {
  int partition = 0;
  int start = 0;
  Eigen::VectorXd z0;
  Eigen::VectorXd z_best;
  double best_true_gap = 0.0;
  std::vector<TraceEntry> trace;
  std::string stop_reason;  // "stalled" or "max_iter"
};

struct AttackResult {
  Eigen::VectorXd z;  // best latent point
  Eigen::VectorXd d;  // its loads
  double true_gap = 0.0;
  int best_run = 0;
  std::vector<AttackRun> runs;
  double seconds = 0.0;
};

inline Eigen::VectorXd project_latent(const Eigen::VectorXd& z, const LoadDomain& dom) {
  if (z.size() != dom.dim()) throw ModelError("latent point dimension mismatch");
  return z.cwiseMax(dom.lo()).cwiseMin(dom.hi());
}

// m = 1 gives the center. Otherwise box corners come first, enumerated in
// binary order over the non-degenerate coordinates (bit i set means upper
// bound), followed by uniform draws.
inline std::vector<Eigen::VectorXd> multi_start(const LoadDomain& dom, int m, std::uint64_t seed) {
  if (m < 1) throw ModelError("multi_start needs m >= 1");
  if (m == 1) return {dom.center()};
  const Eigen::VectorXd lo = dom.lo(), hi = dom.hi();
  std::vector<int> free;
  for (int i = 0; i < dom.dim(); ++i)
    if (hi(i) > lo(i)) free.push_back(i);
  std::vector<Eigen::VectorXd> out;
  const std::uint64_t corners = free.size() >= 62 ? ~std::uint64_t{0} : std::uint64_t{1} << free.size();
  for (std::uint64_t c = 0; c < corners && static_cast<int>(out.size()) < m; ++c) {
    Eigen::VectorXd z = lo;
    for (std::size_t b = 0; b < free.size(); ++b)
      if ((c >> b) & 1u) z(free[b]) = hi(free[b]);
    out.push_back(z);
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (static_cast<int>(out.size()) < m) {
    Eigen::VectorXd z(dom.dim());
    for (int i = 0; i < z.size(); ++i) z(i) = lo(i) + unit(rng) * (hi(i) - lo(i));
    out.push_back(z);
  }
  return out;
}

// Even slabs of the alpha interval; the last slab ends exactly at alpha_hi.
inline std::vector<LoadDomain> partition_domain(const LoadDomain& dom, int p) {
  if (p < 1) throw ModelError("partition_domain needs p >= 1");
  std::vector<LoadDomain> out;
  const double w = (dom.alpha_hi - dom.alpha_lo) / p;
  for (int j = 0; j < p; ++j) {
    LoadDomain s = dom;
    s.alpha_lo = j == 0 ? dom.alpha_lo : dom.alpha_lo + j * w;
    s.alpha_hi = j == p - 1 ? dom.alpha_hi : dom.alpha_lo + (j + 1) * w;
    out.push_back(s);
  }
  return out;
}

struct SurrogatePoint {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

inline SurrogatePoint pga_surrogate(const DcopfCase& k, const MlpNetwork& net, const LoadDomain& dom,
                                    const ValueFunctionApprox& vfa, const Eigen::VectorXd& z) {
  const Eigen::VectorXd d = dom.loads(z);
  const auto cut = vfa.eval(z);
  const auto g = proxy_backward(k, net, d);
  return {proxy_forward(k, net, d).cost - cut.value,
          dom.input_map().a.transpose() * g.load - vfa.cuts()[cut.cut].slope};
}

// One ascent from `z0` inside `dom`.
inline AttackRun pga_vfa_run(const DcopfCase& k, const MlpNetwork& net, const LoadDomain& dom,
                             const ValueFunctionApprox& vfa, const AttackConfig& cfg, const Eigen::VectorXd& z0,
                             OpfEvaluator& opf) {
  cfg.validate();
  if (vfa.dim() != dom.dim()) throw ModelError("value function and domain disagree on dimension");
  AttackRun run;
  run.z0 = project_latent(z0, dom);
  Eigen::VectorXd z = run.z0;
  SurrogatePoint cur = pga_surrogate(k, net, dom, vfa, z);
  double best_surrogate = cur.value;
  run.z_best = z;
  run.best_true_gap = proxy_gap(k, net, dom.loads(z), opf);
  run.trace.push_back({0, 0.0, cur.value, true, run.best_true_gap, run.best_true_gap});

  double step = cfg.initial_step;
  int stale = 0;
  run.stop_reason = "max_iter";
  for (int it = 1; it <= cfg.max_iter; ++it) {
    z = project_latent(z + step * cur.gradient, dom);
    cur = pga_surrogate(k, net, dom, vfa, z);
    TraceEntry e{it, step, cur.value, cur.value > best_surrogate, std::nullopt, 0.0};
    if (e.improved) {
      best_surrogate = cur.value;
      stale = 0;
      const double g = proxy_gap(k, net, dom.loads(z), opf);
      e.true_gap = g;
      if (g > run.best_true_gap) {
        run.best_true_gap = g;
        run.z_best = z;
      }
    } else {
      ++stale;
    }
    e.best_true_gap = run.best_true_gap;
    run.trace.push_back(e);
    if (stale >= cfg.stop_after) {
      run.stop_reason = "stalled";
      break;
    }
    if (stale > 0 && stale % cfg.decay_after == 0) step /= cfg.decay;
  }
  return run;
}

// Runs starts x partitions independent ascents on `cfg.workers` threads.
// Partition j draws its starts with seed ^ j. The best run is the one with
// the largest true gap, ties going to the lowest run index, so the result
// does not depend on scheduling.
inline AttackResult pga_vfa(const DcopfCase& k, const MlpNetwork& net, const LoadDomain& dom,
                            const ValueFunctionApprox& vfa, const AttackConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  struct Task {
    int partition, start;
    LoadDomain dom;
    Eigen::VectorXd z0;
  };
  std::vector<Task> tasks;
  const auto slabs = partition_domain(dom, cfg.partitions);
  for (int j = 0; j < cfg.partitions; ++j) {
    const auto starts = multi_start(slabs[j], cfg.starts, seed ^ static_cast<std::uint64_t>(j));
    for (int s = 0; s < cfg.starts; ++s) tasks.push_back({j, s, slabs[j], starts[s]});
  }

  AttackResult res;
  res.runs.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&] {
    try {
      OpfEvaluator opf(k);
      for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) {
        AttackRun r = pga_vfa_run(k, net, tasks[i].dom, vfa, cfg, tasks[i].z0, opf);
        r.partition = tasks[i].partition;
        r.start = tasks[i].start;
        res.runs[i] = std::move(r);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mu);
      if (!error) error = std::current_exception();
      next = tasks.size();
    }
  };
  const int n_threads = std::min<int>(cfg.workers, static_cast<int>(tasks.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  for (int i = 1; i < static_cast<int>(res.runs.size()); ++i)
    if (res.runs[i].best_true_gap > res.runs[res.best_run].best_true_gap) res.best_run = i;
  const AttackRun& best = res.runs[res.best_run];
  res.z = best.z_best;
  res.d = dom.loads(res.z);
  res.true_gap = best.best_true_gap;
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

inline nlohmann::json to_json(const AttackResult& r) {
  auto vec = [](const Eigen::VectorXd& x) { return std::vector<double>(x.data(), x.data() + x.size()); };
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& run : r.runs) {
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& e : run.trace) {
      nlohmann::json row = {{"iteration", e.iteration}, {"step", e.step},    {"surrogate", e.surrogate},
                            {"improved", e.improved},   {"best_true_gap", e.best_true_gap}};
      row["true_gap"] = e.true_gap ? nlohmann::json(*e.true_gap) : nlohmann::json(nullptr);
      trace.push_back(row);
    }
    runs.push_back({{"partition", run.partition},
                    {"start", run.start},
                    {"z0", vec(run.z0)},
                    {"z_best", vec(run.z_best)},
                    {"best_true_gap", run.best_true_gap},
                    {"stop_reason", run.stop_reason},
                    {"trace", trace}});
  }
  return {{"z", vec(r.z)},       {"d", vec(r.d)},     {"true_gap", r.true_gap},
          {"best_run", r.best_run}, {"seconds", r.seconds}, {"runs", runs}};
}

}  // namespace optverify
