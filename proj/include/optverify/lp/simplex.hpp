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

// Dense bounded-variable revised simplex.
//
// Every row i of the model gets a logical column s_i with A x - s = 0, so the
// row relation becomes a bound on s_i and all structure lives in column
// bounds. The initial basis is all logicals. Infeasible starts are handled by
// a composite phase: while some basic variable violates its bounds the
// pricing cost is the gradient of the sum of infeasibilities; once the basis
// is primal feasible the true costs take over.
//
// Pricing is Dantzig (largest |d_j|) until the count of consecutive
// degenerate pivots exceeds 2 (rows + cols); Bland's lowest-index rule is then
// used for both the entering and leaving choice until the next nondegenerate
// step.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "optverify/lp/linear_program.hpp"

namespace optverify {

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::kOptimal: return "Optimal";
    case LpStatus::kInfeasible: return "Infeasible";
    case LpStatus::kUnbounded: return "Unbounded";
  }
  return "?";
}

enum class VarStatus : std::uint8_t { kBasic, kAtLower, kAtUpper, kFree };

// Status of every column, structurals first then one logical per row.
struct Basis {
  std::vector<VarStatus> status;
  bool empty() const { return status.empty(); }
  friend bool operator==(const Basis&, const Basis&) = default;
};

struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  std::vector<double> x;               // structural values
  double objective = 0.0;              // in the model's own sense
  std::vector<double> duals;           // d(objective)/d(rhs_i)
  std::vector<double> reduced_costs;   // d(objective)/d(active bound_j)
  Basis basis;
  int iterations = 0;
};

struct SimplexOptions {
  double feas_tol = 1e-8;
  double opt_tol = 1e-9;
  double pivot_tol = 1e-9;
  int refactor_every = 64;
  int max_iterations = 0;  // 0: derived from the model size
};

class SimplexSolver {
 public:
  explicit SimplexSolver(const LinearProgram& lp, SimplexOptions opts = {})
      : opts_(opts) {
    lp.validate();
    m_ = lp.num_rows();
    n_ = lp.num_vars();
    total_ = n_ + m_;
    sign_ = lp.sense() == Sense::kMinimize ? 1.0 : -1.0;
    a_ = Eigen::MatrixXd::Zero(m_, n_);
    for (int i = 0; i < m_; ++i)
      for (const auto& t : lp.row(i).terms) a_(i, t.col) += t.coef;
    cost_.assign(total_, 0.0);
    lo_.assign(total_, 0.0);
    hi_.assign(total_, 0.0);
    double cmax = 1.0;
    for (int j = 0; j < n_; ++j) {
      cost_[j] = sign_ * lp.var(j).objective;
      cmax = std::max(cmax, std::abs(cost_[j]));
      lo_[j] = lp.var(j).lower;
      hi_[j] = lp.var(j).upper;
    }
    for (int i = 0; i < m_; ++i) {
      const auto& r = lp.row(i);
      const int k = n_ + i;
      switch (r.relation) {
        case Relation::kLessEqual: lo_[k] = -kInf; hi_[k] = r.rhs; break;
        case Relation::kGreaterEqual: lo_[k] = r.rhs; hi_[k] = kInf; break;
        case Relation::kEqual: lo_[k] = r.rhs; hi_[k] = r.rhs; break;
      }
    }
    dual_tol_ = opts_.opt_tol * cmax;
    if (opts_.max_iterations <= 0)
      opts_.max_iterations = 200 * (m_ + total_) + 20000;
  }

  int num_rows() const { return m_; }
  int num_cols() const { return n_; }

  void set_col_bounds(int j, double lo, double hi) {
    if (lo > hi) throw ModelError("set_col_bounds: lower above upper");
    lo_[j] = lo;
    hi_[j] = hi;
  }
  // Objective coefficient in the model's own sense.
  void set_objective(int j, double c) {
    cost_[j] = sign_ * c;
    double cmax = 1.0;
    for (int k = 0; k < n_; ++k) cmax = std::max(cmax, std::abs(cost_[k]));
    dual_tol_ = opts_.opt_tol * cmax;
  }
  void set_row_rhs(int i, double rhs) {
    const int k = n_ + i;
    if (std::isfinite(lo_[k])) lo_[k] = rhs;
    if (std::isfinite(hi_[k])) hi_[k] = rhs;
  }
  double col_lower(int j) const { return lo_[j]; }
  double col_upper(int j) const { return hi_[j]; }

  // Solves from `hint` when given, otherwise from the basis left by the
  // previous solve (or the all-logical basis on first use).
  LpSolution solve(const Basis* hint = nullptr) {
    if (hint != nullptr && !hint->empty()) {
      if (!(have_state_ && hint->status == status_)) load_basis(*hint);
    } else if (!have_state_) {
      slack_basis();
    }
    normalize_nonbasic();
    if (!factor_ok_ && !refactor_or_repair()) {
      slack_basis();
      refactor();
    }
    compute_primal();
    // After bound or right-hand-side changes the old basis usually stays dual
    // feasible; the dual method then restores primal feasibility in a few pivots.
    int dual_iters = 0;
    if (dual_feasible()) {
      switch (dual_iterate(dual_iters)) {
        case DualOutcome::kInfeasible: {
          auto sol = finish(LpStatus::kInfeasible, dual_iters);
          return sol;
        }
        case DualOutcome::kPrimalFeasible:
          break;
        case DualOutcome::kAbandon:
          if (!factor_ok_) {
            if (!refactor_or_repair())
              throw NumericalFailure("basis became singular during refactor");
            compute_primal();
          }
          break;
      }
    }
    auto sol = iterate();
    sol.iterations += dual_iters;
    return sol;
  }

 private:
  // ---------------------------------------------------------------- state
  void slack_basis() {
    status_.assign(total_, VarStatus::kAtLower);
    head_.assign(m_, 0);
    for (int i = 0; i < m_; ++i) {
      head_[i] = n_ + i;
      status_[n_ + i] = VarStatus::kBasic;
    }
    have_state_ = true;
    factor_ok_ = false;
  }

  void load_basis(const Basis& b) {
    if (static_cast<int>(b.status.size()) != total_) {
      slack_basis();
      return;
    }
    std::vector<int> head;
    for (int j = 0; j < total_; ++j)
      if (b.status[j] == VarStatus::kBasic) head.push_back(j);
    if (static_cast<int>(head.size()) != m_) {
      slack_basis();
      return;
    }
    status_ = b.status;
    head_ = std::move(head);
    have_state_ = true;
    if (!refactor()) slack_basis();
  }

  void normalize_nonbasic() {
    for (int j = 0; j < total_; ++j) {
      VarStatus& s = status_[j];
      if (s == VarStatus::kBasic) continue;
      const bool lo_fin = std::isfinite(lo_[j]);
      const bool hi_fin = std::isfinite(hi_[j]);
      if (s == VarStatus::kAtLower && !lo_fin)
        s = hi_fin ? VarStatus::kAtUpper : VarStatus::kFree;
      else if (s == VarStatus::kAtUpper && !hi_fin)
        s = lo_fin ? VarStatus::kAtLower : VarStatus::kFree;
      else if (s == VarStatus::kFree && (lo_fin || hi_fin))
        s = lo_fin ? VarStatus::kAtLower : VarStatus::kAtUpper;
    }
  }

  double nonbasic_value(int j) const {
    switch (status_[j]) {
      case VarStatus::kAtLower: return lo_[j];
      case VarStatus::kAtUpper: return hi_[j];
      default: return 0.0;
    }
  }

  // Column j of [A  -I], scattered into `out`.
  void column(int j, Eigen::VectorXd& out) const {
    if (j < n_) {
      out = a_.col(j);
    } else {
      out.setZero(m_);
      out(j - n_) = -1.0;
    }
  }

  double dot_column(int j, const Eigen::VectorXd& v) const {
    return j < n_ ? a_.col(j).dot(v) : -v(j - n_);
  }

  bool refactor() {
    factor_ok_ = false;
    if (m_ == 0) {
      binv_.resize(0, 0);
      factor_ok_ = true;
      return true;
    }
    // Basic logicals are -e_t columns, so only the block of structural basics
    // against rows whose logical is nonbasic needs a dense inverse:
    //   x_S = G b_R,  x_t = A[t,S] x_S - b_t,  G = A[R,S]^-1.
    std::vector<int> spos, rows;
    std::vector<char> logical_basic(m_, 0);
    for (int i = 0; i < m_; ++i) {
      if (head_[i] < n_) spos.push_back(i);
      else logical_basic[head_[i] - n_] = 1;
    }
    for (int t = 0; t < m_; ++t)
      if (!logical_basic[t]) rows.push_back(t);
    const int k = static_cast<int>(spos.size());
    if (static_cast<int>(rows.size()) != k) return false;
    binv_.setZero(m_, m_);
    if (k > 0) {
      Eigen::MatrixXd b11(k, k);
      for (int c = 0; c < k; ++c)
        for (int r = 0; r < k; ++r) b11(r, c) = a_(rows[r], head_[spos[c]]);
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(b11);
      // rcond is only an estimate; a vanishing pivot is checked directly.
      const Eigen::VectorXd piv = lu.matrixLU().diagonal().cwiseAbs();
      if (!(lu.rcond() > 1e-13) || !(piv.minCoeff() > 1e-14 * piv.maxCoeff())) return false;
      const Eigen::MatrixXd g = lu.inverse();
      if (!g.allFinite()) return false;
      for (int c = 0; c < k; ++c)
        for (int r = 0; r < k; ++r) binv_(spos[c], rows[r]) = g(c, r);
      Eigen::RowVectorXd at(k);
      for (int i = 0; i < m_; ++i) {
        if (head_[i] < n_) continue;
        const int t = head_[i] - n_;
        for (int c = 0; c < k; ++c) at(c) = a_(t, head_[spos[c]]);
        const Eigen::RowVectorXd row = at * g;
        for (int r = 0; r < k; ++r) binv_(i, rows[r]) = row(r);
        binv_(i, t) = -1.0;
      }
    } else {
      for (int i = 0; i < m_; ++i) binv_(i, head_[i] - n_) = -1.0;
    }
    factor_ok_ = true;
    since_refactor_ = 0;
    return true;
  }

  // Swaps structural basics that are numerically dependent on the others for
  // logicals of uncovered rows; the dropped columns go to their nearest bound.
  void repair_basis() {
    std::vector<int> spos, rows;
    std::vector<char> logical_basic(m_, 0);
    for (int i = 0; i < m_; ++i) {
      if (head_[i] < n_) spos.push_back(i);
      else logical_basic[head_[i] - n_] = 1;
    }
    for (int t = 0; t < m_; ++t)
      if (!logical_basic[t]) rows.push_back(t);
    const int k = static_cast<int>(spos.size());
    Eigen::MatrixXd b(rows.size(), k);
    for (int c = 0; c < k; ++c)
      for (int r = 0; r < b.rows(); ++r) b(r, c) = a_(rows[r], head_[spos[c]]);
    std::vector<char> row_used(b.rows(), 0), col_used(k, 0);
    const double tol = 1e-9 * std::max(1.0, b.cwiseAbs().maxCoeff());
    for (int step = 0; step < std::min<int>(k, b.rows()); ++step) {
      int pr = -1, pc = -1;
      double best = tol;
      for (int c = 0; c < k; ++c) {
        if (col_used[c]) continue;
        for (int r = 0; r < b.rows(); ++r)
          if (!row_used[r] && std::abs(b(r, c)) > best) {
            best = std::abs(b(r, c));
            pr = r;
            pc = c;
          }
      }
      if (pr < 0) break;
      row_used[pr] = col_used[pc] = 1;
      for (int r = 0; r < b.rows(); ++r)
        if (!row_used[r] && b(r, pc) != 0.0) b.row(r) -= (b(r, pc) / b(pr, pc)) * b.row(pr);
    }
    int next_row = 0;
    for (int c = 0; c < k; ++c) {
      if (col_used[c]) continue;
      while (row_used[next_row]) ++next_row;
      row_used[next_row] = 1;
      const int out = head_[spos[c]];
      const bool lo_fin = std::isfinite(lo_[out]), hi_fin = std::isfinite(hi_[out]);
      if (lo_fin && (!hi_fin || std::abs(x_[out] - lo_[out]) <= std::abs(x_[out] - hi_[out])))
        status_[out] = VarStatus::kAtLower;
      else if (hi_fin)
        status_[out] = VarStatus::kAtUpper;
      else
        status_[out] = VarStatus::kFree;
      const int in = n_ + rows[next_row];
      status_[in] = VarStatus::kBasic;
      head_[spos[c]] = in;
    }
  }

  bool refactor_or_repair() {
    if (refactor()) return true;
    repair_basis();
    return refactor();
  }

  void compute_primal() {
    x_.assign(total_, 0.0);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
    for (int j = 0; j < total_; ++j) {
      if (status_[j] == VarStatus::kBasic) continue;
      const double v = nonbasic_value(j);
      x_[j] = v;
      if (v == 0.0) continue;
      if (j < n_)
        rhs.noalias() -= a_.col(j) * v;
      else
        rhs(j - n_) += v;
    }
    xb_ = binv_ * rhs;
    for (int i = 0; i < m_; ++i) x_[head_[i]] = xb_(i);
  }

  double ftol(double bound) const {
    return opts_.feas_tol * std::max(1.0, std::abs(bound));
  }

  bool below(int i) const {
    const int k = head_[i];
    return xb_(i) < lo_[k] - ftol(lo_[k]);
  }
  bool above(int i) const {
    const int k = head_[i];
    return xb_(i) > hi_[k] + ftol(hi_[k]);
  }

  // ------------------------------------------------------------ main loop
  LpSolution iterate() {
    int degenerate_run = 0;
    const int bland_threshold = 2 * (m_ + n_);
    int verified_rounds = 0;
    Eigen::VectorXd cb(m_), pi(m_), alpha(m_), aj(m_);
    for (int iter = 0;; ++iter) {
      if (iter >= opts_.max_iterations)
        throw NumericalFailure("simplex exceeded its iteration budget");
      if (since_refactor_ >= opts_.refactor_every) {
        if (!refactor_or_repair())
          throw NumericalFailure("basis became singular during refactor");
        compute_primal();
      }

      bool phase1 = false;
      for (int i = 0; i < m_; ++i) {
        if (below(i)) { cb(i) = -1.0; phase1 = true; }
        else if (above(i)) { cb(i) = 1.0; phase1 = true; }
        else cb(i) = 0.0;
      }
      if (!phase1)
        for (int i = 0; i < m_; ++i) cb(i) = cost_[head_[i]];
      pi.noalias() = binv_.transpose() * cb;

      const bool bland = degenerate_run > bland_threshold;
      const double dtol = phase1 ? opts_.opt_tol : dual_tol_;
      int enter = -1;
      double enter_dir = 0.0;
      double best = 0.0;
      for (int j = 0; j < total_; ++j) {
        const VarStatus s = status_[j];
        if (s == VarStatus::kBasic) continue;
        if (s != VarStatus::kFree && hi_[j] - lo_[j] <= 0.0) continue;
        const double cj = phase1 ? 0.0 : cost_[j];
        const double dj = cj - dot_column(j, pi);
        double dir = 0.0;
        if (s == VarStatus::kAtLower && dj < -dtol) dir = 1.0;
        else if (s == VarStatus::kAtUpper && dj > dtol) dir = -1.0;
        else if (s == VarStatus::kFree && std::abs(dj) > dtol)
          dir = dj < 0.0 ? 1.0 : -1.0;
        if (dir == 0.0) continue;
        if (bland) {
          enter = j;
          enter_dir = dir;
          break;
        }
        if (std::abs(dj) > best) {
          best = std::abs(dj);
          enter = j;
          enter_dir = dir;
        }
      }

      if (enter < 0) {
        // Confirm on a fresh factorization unless the updated inverse still
        // reproduces B x_B = b and B^T pi = c_B.
        if (since_refactor_ > 0 && verified_rounds < 3 && !accurate(phase1 ? nullptr : &pi)) {
          ++verified_rounds;
          if (!refactor_or_repair())
            throw NumericalFailure("basis became singular during refactor");
          compute_primal();
          continue;
        }
        return phase1 ? finish(LpStatus::kInfeasible, iter)
                      : finish(LpStatus::kOptimal, iter);
      }

      column(enter, aj);
      alpha.noalias() = binv_ * aj;

      // Ratio test. rate_i is the change of basic i per unit step.
      double theta = kInf;
      int leave = -1;
      bool leave_to_upper = false;
      if (std::isfinite(lo_[enter]) && std::isfinite(hi_[enter]))
        theta = hi_[enter] - lo_[enter];
      double leave_pivot = 0.0;
      for (int i = 0; i < m_; ++i) {
        if (std::abs(alpha(i)) <= opts_.pivot_tol) continue;
        const double rate = -enter_dir * alpha(i);
        const int k = head_[i];
        double limit = kInf;
        bool to_upper = false;
        if (rate < 0.0) {
          if (above(i)) {
            limit = (xb_(i) - hi_[k]) / -rate;
            to_upper = true;
          } else if (std::isfinite(lo_[k]) && !below(i)) {
            limit = std::max(0.0, xb_(i) - lo_[k]) / -rate;
          }
        } else {
          if (below(i)) {
            limit = (lo_[k] - xb_(i)) / rate;
          } else if (std::isfinite(hi_[k]) && !above(i)) {
            limit = std::max(0.0, hi_[k] - xb_(i)) / rate;
            to_upper = true;
          }
        }
        if (!std::isfinite(limit)) continue;
        bool take = false;
        if (limit < theta - 1e-12) {
          take = true;
        } else if (limit <= theta + 1e-12 && leave >= 0) {
          take = bland ? head_[i] < head_[leave]
                       : std::abs(alpha(i)) > leave_pivot;
        } else if (limit <= theta + 1e-12 && leave < 0 && !bland) {
          // Prefer a basis change over a bound flip of equal length.
          take = true;
        }
        if (take) {
          theta = std::min(theta, limit);
          leave = i;
          leave_to_upper = to_upper;
          leave_pivot = std::abs(alpha(i));
        }
      }

      if (!std::isfinite(theta)) {
        if (phase1)
          throw NumericalFailure("unbounded ray while minimizing infeasibility");
        return finish(LpStatus::kUnbounded, iter);
      }

      degenerate_run = theta <= 1e-12 ? degenerate_run + 1 : 0;
      verified_rounds = 0;

      const double step = enter_dir * theta;
      if (step != 0.0) xb_.noalias() -= step * alpha;
      const double enter_value = x_[enter] + step;

      if (leave < 0) {
        // Bound flip of the entering column.
        status_[enter] = enter_dir > 0 ? VarStatus::kAtUpper
                                       : VarStatus::kAtLower;
        x_[enter] = nonbasic_value(enter);
      } else {
        const int out = head_[leave];
        status_[out] = leave_to_upper ? VarStatus::kAtUpper
                                      : VarStatus::kAtLower;
        if (!std::isfinite(nonbasic_value(out))) status_[out] = VarStatus::kFree;
        x_[out] = nonbasic_value(out);
        status_[enter] = VarStatus::kBasic;
        head_[leave] = enter;
        const double piv = alpha(leave);
        Eigen::RowVectorXd prow = binv_.row(leave) / piv;
        binv_.noalias() -= alpha * prow;
        binv_.row(leave) = prow;
        xb_(leave) = enter_value;
        ++since_refactor_;
      }
      for (int i = 0; i < m_; ++i) x_[head_[i]] = xb_(i);
    }
  }

  // Residuals of the current basic solution (and prices) against B itself.
  bool accurate(const Eigen::VectorXd* pi) const {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
    double scale = 1.0;
    for (int j = 0; j < total_; ++j) {
      if (status_[j] == VarStatus::kBasic) continue;
      const double v = nonbasic_value(j);
      if (v == 0.0) continue;
      if (j < n_) rhs.noalias() -= a_.col(j) * v;
      else rhs(j - n_) += v;
    }
    for (int i = 0; i < m_; ++i) {
      const int k = head_[i];
      scale = std::max(scale, std::abs(xb_(i)));
      if (k < n_) rhs.noalias() -= a_.col(k) * xb_(i);
      else rhs(k - n_) += xb_(i);
    }
    if (rhs.size() > 0 && rhs.cwiseAbs().maxCoeff() > 1e-9 * scale) return false;
    if (pi == nullptr) return true;
    double cmax = 1.0;
    for (int i = 0; i < m_; ++i) cmax = std::max(cmax, std::abs(cost_[head_[i]]));
    for (int i = 0; i < m_; ++i) {
      const int k = head_[i];
      if (std::abs(cost_[k] - dot_column(k, *pi)) > 1e-9 * cmax) return false;
    }
    return true;
  }

  // ------------------------------------------------------------ dual method
  enum class DualOutcome { kPrimalFeasible, kInfeasible, kAbandon };

  void phase2_prices(Eigen::VectorXd& pi) const {
    Eigen::VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) cb(i) = cost_[head_[i]];
    pi.noalias() = binv_.transpose() * cb;
  }

  bool dual_feasible() const {
    if (m_ == 0) return false;
    Eigen::VectorXd pi;
    phase2_prices(pi);
    for (int j = 0; j < total_; ++j) {
      const VarStatus s = status_[j];
      if (s == VarStatus::kBasic || hi_[j] - lo_[j] <= 0.0) continue;
      const double dj = cost_[j] - dot_column(j, pi);
      if (s == VarStatus::kAtLower && dj < -dual_tol_) return false;
      if (s == VarStatus::kAtUpper && dj > dual_tol_) return false;
      if (s == VarStatus::kFree && std::abs(dj) > dual_tol_) return false;
    }
    return true;
  }

  // Bounded-variable dual simplex: the most infeasible basic leaves at the
  // violated bound, the entering column keeps every reduced cost sign.
  DualOutcome dual_iterate(int& iters) {
    Eigen::VectorXd pi(m_), alpha(m_), aj(m_);
    Eigen::RowVectorXd rho(m_);
    const int budget = 10 * (m_ + n_) + 1000;
    for (int it = 0; it < budget; ++it) {
      if (since_refactor_ >= opts_.refactor_every) {
        if (!refactor()) return DualOutcome::kAbandon;
        compute_primal();
      }
      int r = -1;
      double worst = 0.0;
      bool increase = false;
      for (int i = 0; i < m_; ++i) {
        const int k = head_[i];
        double inf = 0.0;
        if (below(i)) inf = lo_[k] - xb_(i);
        else if (above(i)) inf = xb_(i) - hi_[k];
        if (inf > worst) {
          worst = inf;
          r = i;
          increase = below(i);
        }
      }
      if (r < 0) return DualOutcome::kPrimalFeasible;
      phase2_prices(pi);
      rho = binv_.row(r);
      int q = -1;
      double best_ratio = kInf, best_piv = 0.0, a_rq = 0.0;
      for (int j = 0; j < total_; ++j) {
        const VarStatus s = status_[j];
        if (s == VarStatus::kBasic || (s != VarStatus::kFree && hi_[j] - lo_[j] <= 0.0)) continue;
        const double a_rj = j < n_ ? rho.dot(a_.col(j)) : -rho(j - n_);
        if (std::abs(a_rj) <= opts_.pivot_tol) continue;
        // Direction of x_j that moves x_Br toward its bound.
        const double dir = increase ? (a_rj < 0.0 ? 1.0 : -1.0) : (a_rj > 0.0 ? 1.0 : -1.0);
        if (s == VarStatus::kAtLower && dir < 0.0) continue;
        if (s == VarStatus::kAtUpper && dir > 0.0) continue;
        const double dj = cost_[j] - dot_column(j, pi);
        const double ratio = std::max(0.0, dir > 0.0 ? dj : -dj) / std::abs(a_rj);
        if (ratio < best_ratio - 1e-12 ||
            (ratio <= best_ratio + 1e-12 && std::abs(a_rj) > best_piv)) {
          best_ratio = std::min(best_ratio, ratio);
          best_piv = std::abs(a_rj);
          q = j;
          a_rq = a_rj;
        }
      }
      if (q < 0) {
        // Confirm on a fresh factorization before declaring infeasibility.
        if (since_refactor_ > 0) {
          if (!refactor()) return DualOutcome::kAbandon;
          compute_primal();
          continue;
        }
        return DualOutcome::kInfeasible;
      }
      column(q, aj);
      alpha.noalias() = binv_ * aj;
      if (std::abs(alpha(r) - a_rq) > 1e-7 * (1.0 + std::abs(a_rq))) {
        if (since_refactor_ == 0 || !refactor()) return DualOutcome::kAbandon;
        compute_primal();
        continue;
      }
      const int out = head_[r];
      const double target = increase ? lo_[out] : hi_[out];
      const double dxq = (xb_(r) - target) / alpha(r);
      xb_.noalias() -= dxq * alpha;
      const double enter_value = x_[q] + dxq;
      status_[out] = increase ? VarStatus::kAtLower : VarStatus::kAtUpper;
      x_[out] = target;
      status_[q] = VarStatus::kBasic;
      head_[r] = q;
      const double piv = alpha(r);
      Eigen::RowVectorXd prow = binv_.row(r) / piv;
      binv_.noalias() -= alpha * prow;
      binv_.row(r) = prow;
      xb_(r) = enter_value;
      ++since_refactor_;
      ++iters;
      for (int i = 0; i < m_; ++i) x_[head_[i]] = xb_(i);
    }
    return DualOutcome::kAbandon;
  }

  LpSolution finish(LpStatus status, int iters) {
    LpSolution sol;
    sol.status = status;
    sol.iterations = iters;
    sol.basis.status = status_;
    if (status != LpStatus::kOptimal) return sol;
    sol.x.assign(x_.begin(), x_.begin() + n_);
    // Snap nonbasic structurals exactly onto their bounds.
    for (int j = 0; j < n_; ++j)
      if (status_[j] != VarStatus::kBasic) sol.x[j] = nonbasic_value(j);
    double obj = 0.0;
    for (int j = 0; j < n_; ++j) obj += cost_[j] * sol.x[j];
    sol.objective = sign_ * obj;
    Eigen::VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) cb(i) = cost_[head_[i]];
    Eigen::VectorXd pi = binv_.transpose() * cb;
    sol.duals.resize(m_);
    for (int i = 0; i < m_; ++i) sol.duals[i] = sign_ * pi(i);
    sol.reduced_costs.resize(n_);
    for (int j = 0; j < n_; ++j)
      sol.reduced_costs[j] = status_[j] == VarStatus::kBasic
                                 ? 0.0
                                 : sign_ * (cost_[j] - a_.col(j).dot(pi));
    return sol;
  }

  SimplexOptions opts_;
  int m_ = 0, n_ = 0, total_ = 0;
  double sign_ = 1.0;
  double dual_tol_ = 1e-9;
  Eigen::MatrixXd a_;
  std::vector<double> cost_, lo_, hi_;

  bool have_state_ = false;
  bool factor_ok_ = false;
  int since_refactor_ = 0;
  std::vector<VarStatus> status_;
  std::vector<int> head_;
  Eigen::MatrixXd binv_;
  Eigen::VectorXd xb_;
  std::vector<double> x_;
};

inline LpSolution solve_lp(const LinearProgram& lp,
                           const Basis* basis_hint = nullptr,
                           SimplexOptions opts = {}) {
  SimplexSolver solver(lp, opts);
  return solver.solve(basis_hint);
}

// Objective of the dual certificate carried by an optimal solution:
// sum of row duals times right-hand sides plus reduced costs times the bound
// each nonbasic column sits at.
inline double dual_objective(const LpSolution& sol, const LinearProgram& lp) {
  if (sol.status != LpStatus::kOptimal)
    throw ModelError("dual_objective requires an optimal solution");
  double s = 0.0;
  for (int i = 0; i < lp.num_rows(); ++i) s += sol.duals[i] * lp.row(i).rhs;
  for (int j = 0; j < lp.num_vars(); ++j) {
    const double rc = sol.reduced_costs[j];
    if (rc == 0.0) continue;
    switch (sol.basis.status[j]) {
      case VarStatus::kAtLower: s += rc * lp.var(j).lower; break;
      case VarStatus::kAtUpper: s += rc * lp.var(j).upper; break;
      default: break;
    }
  }
  return s;
}

}  // namespace optverify
