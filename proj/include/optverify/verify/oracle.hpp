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

// Brute-force maximum of the true gap over a uniform latent grid.

#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "optverify/dcopf/proxy.hpp"
#include "optverify/knapsack/case.hpp"

namespace optverify {

inline constexpr long kOracleBudget = 10'000'000;

struct OracleResult {
  double max_gap = 0.0;
  Eigen::VectorXd argmax;
  long points = 0;
  // Largest gap change between grid neighbors: an estimate of how far the
  // continuous maximum can sit above the grid maximum.
  double lipschitz_slack = 0.0;
};

// Grid with `resolution` evenly spaced points per coordinate, endpoints
// included; coordinates with lo == hi contribute a single point. Points are
// split across `workers` threads, each with its own evaluator from
// `make_eval`; ties in the maximum go to the lowest linear index.
inline OracleResult oracle_grid_generic(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, int resolution,
                                        int workers,
                                        const std::function<std::function<double(const Eigen::VectorXd&)>()>& make_eval) {
  if (resolution < 1) throw ModelError("oracle_grid: resolution must be positive");
  if (workers < 1) throw ModelError("oracle_grid: at least one worker");
  const int n = static_cast<int>(lo.size());
  std::vector<long> counts(n);
  long total = 1;
  for (int i = 0; i < n; ++i) {
    counts[i] = hi(i) > lo(i) ? resolution : 1;
    if (counts[i] > 1 && resolution < 2) counts[i] = 1;
    if (total > kOracleBudget / counts[i]) throw ModelError("oracle_grid: more than 1e7 grid points");
    total *= counts[i];
  }
  auto point = [&](long g) {
    Eigen::VectorXd z = lo;
    for (int i = 0; i < n; ++i) {
      const long c = g % counts[i];
      g /= counts[i];
      if (counts[i] > 1) z(i) = c == counts[i] - 1 ? hi(i) : lo(i) + (hi(i) - lo(i)) * c / (counts[i] - 1);
    }
    return z;
  };

  std::vector<double> values(total);
  std::atomic<long> next{0};
  std::exception_ptr error;
  std::mutex mu;
  constexpr long kChunk = 1024;
  auto work = [&] {
    try {
      auto eval = make_eval();
      for (long start; (start = next.fetch_add(kChunk)) < total;)
        for (long g = start; g < std::min(total, start + kChunk); ++g) values[g] = eval(point(g));
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (!error) error = std::current_exception();
      next = total;
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::min<long>(workers, total); ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  OracleResult r;
  r.points = total;
  long best = 0;
  for (long g = 1; g < total; ++g)
    if (values[g] > values[best]) best = g;
  r.max_gap = values[best];
  r.argmax = point(best);
  long stride = 1;
  for (int i = 0; i < n; ++i) {
    for (long g = 0; g < total; ++g)
      if ((g / stride) % counts[i] + 1 < counts[i])
        r.lipschitz_slack = std::max(r.lipschitz_slack, std::abs(values[g + stride] - values[g]));
    stride *= counts[i];
  }
  return r;
}

inline OracleResult oracle_grid(const DcopfCase& k, const MlpNetwork& net, const LoadDomain& dom, int resolution,
                                int workers = 1) {
  return oracle_grid_generic(dom.lo(), dom.hi(), resolution, workers, [&] {
    auto opf = std::make_shared<OpfEvaluator>(k);
    return std::function<double(const Eigen::VectorXd&)>(
        [&k, &net, &dom, opf](const Eigen::VectorXd& z) { return proxy_gap(k, net, dom.loads(z), *opf); });
  });
}

inline OracleResult oracle_grid(const KnapsackDomain& dom, const MlpNetwork& net, int resolution, int workers = 1) {
  return oracle_grid_generic(dom.lo(), dom.hi(), resolution, workers, [&] {
    return std::function<double(const Eigen::VectorXd&)>(
        [&dom, &net](const Eigen::VectorXd& z) { return knapsack_gap(dom, net, z); });
  });
}

inline nlohmann::json to_json(const OracleResult& r) {
  return {{"max_gap", r.max_gap},
          {"argmax", std::vector<double>(r.argmax.data(), r.argmax.data() + r.argmax.size())},
          {"points", r.points},
          {"lipschitz_slack", r.lipschitz_slack}};
}

}  // namespace optverify
