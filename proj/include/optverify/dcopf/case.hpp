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

// DC-OPF with soft thermal limits, one generator per bus:
//   min  c.p + M_th * sum(xi)
//   s.t. sum(p) = sum(d)
//        H p + xi >= -f_bar + H d
//       -H p + xi >= -f_bar - H d
//        p_lo <= p <= p_hi, xi >= 0

#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "optverify/encodings/bounds.hpp"
#include "optverify/lp/linear_program.hpp"
#include "optverify/lp/simplex.hpp"

namespace optverify {

struct DcopfCase {
  int buses = 0;
  int lines = 0;
  Eigen::VectorXd c;      // $/MW
  Eigen::MatrixXd h;      // PTDF, lines x buses
  Eigen::VectorXd f_bar;  // MW
  Eigen::VectorXd p_lo, p_hi;
  Eigen::VectorXd d_ref;
  double m_th = 0.0;

  void validate() const {
    const auto b = buses, e = lines;
    if (b <= 0 || e < 0) throw ModelError("case: need at least one bus");
    if (c.size() != b || p_lo.size() != b || p_hi.size() != b || d_ref.size() != b)
      throw ModelError("case: per-bus vectors must have length B");
    if (h.rows() != e || h.cols() != b || f_bar.size() != e)
      throw ModelError("case: H must be E x B and f_bar length E");
    if (!c.allFinite() || !h.allFinite() || !f_bar.allFinite() || !p_lo.allFinite() ||
        !p_hi.allFinite() || !d_ref.allFinite() || !std::isfinite(m_th))
      throw ModelError("case: non-finite data");
    if ((p_lo.array() > p_hi.array()).any()) throw ModelError("case: p_lo above p_hi");
    if ((f_bar.array() <= 0.0).any()) throw ModelError("case: f_bar must be positive");
    if (m_th <= c.maxCoeff()) throw ModelError("case: M_th must exceed every generation cost");
  }
};

namespace detail {
inline Eigen::VectorXd vec_of(const nlohmann::json& j, const char* key) {
  const auto v = j.at(key).get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<int>(v.size()));
}
inline nlohmann::json json_of(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}
}  // namespace detail

// {B, E, c, H (row-major), f_bar, p_lo, p_hi, d_ref, M_th}
inline DcopfCase dcopf_case_from_json(const nlohmann::json& j) {
  DcopfCase k;
  try {
    k.buses = j.at("B").get<int>();
    k.lines = j.at("E").get<int>();
    k.c = detail::vec_of(j, "c");
    const auto h = j.at("H").get<std::vector<double>>();
    if (static_cast<long>(h.size()) != static_cast<long>(k.buses) * k.lines)
      throw ModelError("case: H must hold E*B entries");
    k.h.resize(k.lines, k.buses);
    for (int e = 0; e < k.lines; ++e)
      for (int b = 0; b < k.buses; ++b) k.h(e, b) = h[static_cast<std::size_t>(e) * k.buses + b];
    k.f_bar = detail::vec_of(j, "f_bar");
    k.p_lo = detail::vec_of(j, "p_lo");
    k.p_hi = detail::vec_of(j, "p_hi");
    k.d_ref = detail::vec_of(j, "d_ref");
    k.m_th = j.at("M_th").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("case: ") + e.what());
  }
  k.validate();
  return k;
}

inline nlohmann::json to_json(const DcopfCase& k) {
  std::vector<double> h;
  for (int e = 0; e < k.lines; ++e)
    for (int b = 0; b < k.buses; ++b) h.push_back(k.h(e, b));
  return {{"B", k.buses},       {"E", k.lines},
          {"c", detail::json_of(k.c)}, {"H", h},
          {"f_bar", detail::json_of(k.f_bar)}, {"p_lo", detail::json_of(k.p_lo)},
          {"p_hi", detail::json_of(k.p_hi)},   {"d_ref", detail::json_of(k.d_ref)},
          {"M_th", k.m_th}};
}

inline DcopfCase load_dcopf_case(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ModelError("cannot read " + path);
  try {
    return dcopf_case_from_json(nlohmann::json::parse(is));
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelError(path + ": " + e.what());
  }
}

// PTDF in coordinate form: '%' comment lines, a "rows cols nnz" header,
// then 1-based "row col value" entries.
inline Eigen::MatrixXd read_ptdf_coordinate(std::istream& is) {
  std::string line;
  int rows = -1, cols = -1;
  long nnz = -1, seen = 0;
  Eigen::MatrixXd h;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '%') continue;
    std::istringstream ls(line);
    if (rows < 0) {
      if (!(ls >> rows >> cols >> nnz) || rows < 0 || cols <= 0 || nnz < 0)
        throw ModelError("ptdf: bad header");
      h = Eigen::MatrixXd::Zero(rows, cols);
      continue;
    }
    int r, c;
    double v;
    if (!(ls >> r >> c >> v) || r < 1 || r > rows || c < 1 || c > cols)
      throw ModelError("ptdf: bad entry '" + line + "'");
    h(r - 1, c - 1) = v;
    ++seen;
  }
  if (rows < 0 || seen != nnz) throw ModelError("ptdf: entry count does not match header");
  return h;
}

// Latent box: alpha in [alpha_lo, alpha_hi], every beta_i in [beta_lo, beta_hi];
// loads d = (alpha + beta) * d_ref. Latent order is (alpha, beta_1..beta_B).
struct LoadDomain {
  Eigen::VectorXd d_ref;
  double alpha_lo = 1.0, alpha_hi = 1.0;
  double beta_lo = -0.05, beta_hi = 0.05;

  int dim() const { return 1 + static_cast<int>(d_ref.size()); }
  Eigen::VectorXd lo() const {
    Eigen::VectorXd v = Eigen::VectorXd::Constant(dim(), beta_lo);
    v(0) = alpha_lo;
    return v;
  }
  Eigen::VectorXd hi() const {
    Eigen::VectorXd v = Eigen::VectorXd::Constant(dim(), beta_hi);
    v(0) = alpha_hi;
    return v;
  }
  Eigen::VectorXd center() const { return 0.5 * (lo() + hi()); }
  Eigen::VectorXd loads(const Eigen::VectorXd& z) const {
    return ((z.tail(dim() - 1).array() + z(0)) * d_ref.array()).matrix();
  }
  // d = a z, no offset.
  InputMap input_map() const {
    const int b = static_cast<int>(d_ref.size());
    InputMap m{Eigen::MatrixXd::Zero(b, dim()), Eigen::VectorXd::Zero(b)};
    for (int i = 0; i < b; ++i) {
      m.a(i, 0) = d_ref(i);
      m.a(i, 1 + i) = d_ref(i);
    }
    return m;
  }
  bool contains(const Eigen::VectorXd& z, double tol = 0.0) const {
    return (z.array() >= lo().array() - tol).all() && (z.array() <= hi().array() + tol).all();
  }
};

inline LoadDomain make_load_domain(const DcopfCase& k, double u, bool freeze_beta = false,
                                   double beta_width = 0.05) {
  if (u < 0.0 || beta_width < 0.0) throw ModelError("domain: widths must be nonnegative");
  LoadDomain dom;
  dom.d_ref = k.d_ref;
  dom.alpha_lo = 1.0 - u;
  dom.alpha_hi = 1.0 + u;
  dom.beta_lo = freeze_beta ? 0.0 : -beta_width;
  dom.beta_hi = freeze_beta ? 0.0 : beta_width;
  if (dom.alpha_lo + dom.beta_lo <= 0.0) throw ModelError("domain: loads must stay positive");
  // Projection solvability over the whole box.
  const double dmin = k.d_ref.cwiseMax(0.0).sum() * (dom.alpha_lo + dom.beta_lo) +
                      k.d_ref.cwiseMin(0.0).sum() * (dom.alpha_hi + dom.beta_hi);
  const double dmax = k.d_ref.cwiseMax(0.0).sum() * (dom.alpha_hi + dom.beta_hi) +
                      k.d_ref.cwiseMin(0.0).sum() * (dom.alpha_lo + dom.beta_lo);
  if (dmax > k.p_hi.sum() || dmin < k.p_lo.sum())
    throw ModelError("domain: total demand can leave [sum p_lo, sum p_hi]");
  return dom;
}

// Row layout of build_opf_lp.
inline int opf_balance_row() { return 0; }
inline int opf_lower_flow_row(int e) { return 1 + e; }
inline int opf_upper_flow_row(const DcopfCase& k, int e) { return 1 + k.lines + e; }

inline LinearProgram build_opf_lp(const DcopfCase& k, const Eigen::VectorXd& d) {
  if (d.size() != k.buses) throw ModelError("load vector length mismatch");
  LinearProgram lp(Sense::kMinimize);
  for (int i = 0; i < k.buses; ++i)
    lp.add_var(k.p_lo(i), k.p_hi(i), k.c(i), "p" + std::to_string(i));
  for (int e = 0; e < k.lines; ++e) lp.add_var(0.0, kInf, k.m_th, "xi" + std::to_string(e));
  std::vector<Term> bal;
  for (int i = 0; i < k.buses; ++i) bal.push_back({i, 1.0});
  lp.add_row(bal, Relation::kEqual, d.sum(), "balance");
  const Eigen::VectorXd hd = k.h * d;
  for (int sgn : {1, -1}) {
    for (int e = 0; e < k.lines; ++e) {
      std::vector<Term> t;
      for (int i = 0; i < k.buses; ++i)
        if (k.h(e, i) != 0.0) t.push_back({i, sgn * k.h(e, i)});
      t.push_back({k.buses + e, 1.0});
      lp.add_row(t, Relation::kGreaterEqual, -k.f_bar(e) + sgn * hd(e),
                 (sgn > 0 ? "flow_lo" : "flow_hi") + std::to_string(e));
    }
  }
  return lp;
}

// dPhi/dd from the duals of build_opf_lp: pi_bal * e + H^T pi_lo - H^T pi_hi.
inline Eigen::VectorXd phi_load_gradient(const DcopfCase& k, const LpSolution& sol) {
  Eigen::VectorXd g = Eigen::VectorXd::Constant(k.buses, sol.duals[opf_balance_row()]);
  for (int e = 0; e < k.lines; ++e) {
    const double w = sol.duals[opf_lower_flow_row(e)] - sol.duals[opf_upper_flow_row(k, e)];
    g += w * k.h.row(e).transpose();
  }
  return g;
}

// Repeated Phi(d) evaluations on one warm-started solver. Not thread-safe;
// give each worker its own.
class OpfEvaluator {
 public:
  explicit OpfEvaluator(const DcopfCase& k) : case_(k), solver_(build_opf_lp(k, k.d_ref)) {}

  LpSolution solve(const Eigen::VectorXd& d) {
    if (d.size() != case_.buses) throw ModelError("load vector length mismatch");
    solver_.set_row_rhs(opf_balance_row(), d.sum());
    const Eigen::VectorXd hd = case_.h * d;
    for (int e = 0; e < case_.lines; ++e) {
      solver_.set_row_rhs(opf_lower_flow_row(e), -case_.f_bar(e) + hd(e));
      solver_.set_row_rhs(opf_upper_flow_row(case_, e), -case_.f_bar(e) - hd(e));
    }
    return solver_.solve();
  }

  const DcopfCase& dcopf_case() const { return case_; }

 private:
  DcopfCase case_;
  SimplexSolver solver_;
};

struct DcopfInstance {
  double gamma = 1.0;
  Eigen::VectorXd eta;
  Eigen::VectorXd d;
  double phi = 0.0;
  std::vector<double> duals;
  Eigen::VectorXd phi_grad;  // dPhi/dd
};

struct InstanceSet {
  std::vector<DcopfInstance> instances;
  int skipped = 0;  // infeasible draws
};

// d = (gamma + eta) * d_ref, gamma ~ U[0.8, 1.2], eta_i ~ U[-0.05, 0.05].
inline InstanceSet generate_instances(const DcopfCase& k, int n, std::uint64_t seed) {
  if (n < 1) throw ModelError("generate_instances: n must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> gam(0.8, 1.2), eta(-0.05, 0.05);
  OpfEvaluator eval(k);
  InstanceSet out;
  for (int s = 0; s < n; ++s) {
    DcopfInstance inst;
    inst.gamma = gam(rng);
    inst.eta.resize(k.buses);
    for (int i = 0; i < k.buses; ++i) inst.eta(i) = eta(rng);
    inst.d = ((inst.eta.array() + inst.gamma) * k.d_ref.array()).matrix();
    const auto sol = eval.solve(inst.d);
    if (sol.status != LpStatus::kOptimal) {
      ++out.skipped;
      continue;
    }
    inst.phi = sol.objective;
    inst.duals = sol.duals;
    inst.phi_grad = phi_load_gradient(k, sol);
    out.instances.push_back(std::move(inst));
  }
  return out;
}

inline nlohmann::json to_json(const InstanceSet& s) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& i : s.instances)
    rows.push_back({{"gamma", i.gamma},
                    {"eta", detail::json_of(i.eta)},
                    {"d", detail::json_of(i.d)},
                    {"phi", i.phi},
                    {"duals", i.duals}});
  return {{"instances", rows}, {"skipped", s.skipped}};
}

}  // namespace optverify
