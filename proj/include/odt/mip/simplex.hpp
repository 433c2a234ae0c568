/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The odtree Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ODT_MIP_SIMPLEX_HPP
#define ODT_MIP_SIMPLEX_HPP

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "odt/mip/model.hpp"

// Bounded-variable revised simplex.
//
// Every row r of the model becomes  a_r x + s_r = rhs_r  with a logical
// variable s_r whose bounds encode the row sense (<=: s >= 0, >=: s <= 0,
// =: s = 0). Internally the objective is always minimized.

namespace odt::mip::detail {

struct StandardLp {
  int rows = 0;
  int cols = 0;  // structural columns; logical of row r has index cols + r
  std::vector<int> col_start;
  std::vector<int> row_index;
  std::vector<double> col_value;
  std::vector<double> cost;   // cols + rows, minimization
  std::vector<double> lower;  // cols + rows
  std::vector<double> upper;
  std::vector<double> rhs;
  double sign = 1.0;  // user objective = sign * internal objective

  [[nodiscard]] int total() const { return cols + rows; }

  static StandardLp from_model(const Model& model)
  {
    StandardLp lp;
    lp.rows = static_cast<int>(model.num_constraints());
    lp.cols = static_cast<int>(model.num_variables());
    lp.sign = model.sense() == ObjSense::maximize ? -1.0 : 1.0;

    std::vector<int> counts(static_cast<std::size_t>(lp.cols) + 1, 0);
    for (const auto& row : model.constraints()) {
      for (const auto& t : row.terms) {
        if (t.coef != 0.0) ++counts[static_cast<std::size_t>(t.var) + 1];
      }
    }
    lp.col_start.assign(counts.size(), 0);
    for (std::size_t j = 1; j < counts.size(); ++j) lp.col_start[j] = lp.col_start[j - 1] + counts[j];
    lp.row_index.resize(static_cast<std::size_t>(lp.col_start.back()));
    lp.col_value.resize(lp.row_index.size());
    std::vector<int> fill(lp.col_start.begin(), lp.col_start.end() - 1);
    for (int r = 0; r < lp.rows; ++r) {
      for (const auto& t : model.constraints()[static_cast<std::size_t>(r)].terms) {
        if (t.coef == 0.0) continue;
        const auto pos = static_cast<std::size_t>(fill[static_cast<std::size_t>(t.var)]++);
        lp.row_index[pos] = r;
        lp.col_value[pos] = t.coef;
      }
    }

    const auto total = static_cast<std::size_t>(lp.total());
    lp.cost.assign(total, 0.0);
    lp.lower.assign(total, 0.0);
    lp.upper.assign(total, 0.0);
    for (int j = 0; j < lp.cols; ++j) {
      const auto& v = model.variables()[static_cast<std::size_t>(j)];
      lp.cost[static_cast<std::size_t>(j)] = lp.sign * model.objective()[static_cast<std::size_t>(j)];
      lp.lower[static_cast<std::size_t>(j)] = v.lower;
      lp.upper[static_cast<std::size_t>(j)] = v.upper;
    }
    lp.rhs.resize(static_cast<std::size_t>(lp.rows));
    for (int r = 0; r < lp.rows; ++r) {
      const auto& row = model.constraints()[static_cast<std::size_t>(r)];
      const auto s = static_cast<std::size_t>(lp.cols + r);
      lp.rhs[static_cast<std::size_t>(r)] = row.rhs;
      switch (row.sense) {
        case RowSense::less_equal: lp.lower[s] = 0.0; lp.upper[s] = kInf; break;
        case RowSense::greater_equal: lp.lower[s] = -kInf; lp.upper[s] = 0.0; break;
        case RowSense::equal: lp.lower[s] = 0.0; lp.upper[s] = 0.0; break;
      }
    }
    return lp;
  }
};

/// LU factorization of the basis matrix plus a product-form eta file.
class BasisFactor {
 public:
  bool factorize(const StandardLp& lp, const std::vector<int>& head)
  {
    etas_.clear();
    const int m = lp.rows;
    if (m == 0) {
      ok_ = true;
      return true;
    }
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(m) * 3);
    for (int k = 0; k < m; ++k) {
      const int j = head[static_cast<std::size_t>(k)];
      if (j >= lp.cols) {
        triplets.emplace_back(j - lp.cols, k, 1.0);
      } else {
        for (int p = lp.col_start[static_cast<std::size_t>(j)]; p < lp.col_start[static_cast<std::size_t>(j) + 1]; ++p) {
          triplets.emplace_back(lp.row_index[static_cast<std::size_t>(p)], k, lp.col_value[static_cast<std::size_t>(p)]);
        }
      }
    }
    Eigen::SparseMatrix<double> basis(m, m);
    basis.setFromTriplets(triplets.begin(), triplets.end());
    basis.makeCompressed();
    lu_.analyzePattern(basis);
    lu_.factorize(basis);
    ok_ = lu_.info() == Eigen::Success;
    return ok_;
  }

  // v := B^{-1} v
  void ftran(Eigen::VectorXd& v) const
  {
    if (v.size() == 0) return;
    v = lu_.solve(v).eval();
    for (const auto& eta : etas_) {
      const double pivot_value = v[eta.row] / eta.pivot;
      v[eta.row] = pivot_value;
      if (pivot_value == 0.0) continue;
      for (const auto& [i, a] : eta.entries) v[i] -= a * pivot_value;
    }
  }

  // v := B^{-T} v
  void btran(Eigen::VectorXd& v) const
  {
    if (v.size() == 0) return;
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double acc = v[it->row];
      for (const auto& [i, a] : it->entries) acc -= a * v[i];
      v[it->row] = acc / it->pivot;
    }
    v = lu_.transpose().solve(v).eval();
  }

  // alpha = B^{-1} a_q computed before the basis change at position `row`.
  void push_eta(int row, const Eigen::VectorXd& alpha)
  {
    Eta eta;
    eta.row = row;
    eta.pivot = alpha[row];
    for (int i = 0; i < alpha.size(); ++i) {
      if (i != row && alpha[i] != 0.0) eta.entries.emplace_back(i, alpha[i]);
    }
    etas_.push_back(std::move(eta));
  }

  [[nodiscard]] std::size_t num_etas() const { return etas_.size(); }
  [[nodiscard]] bool ok() const { return ok_; }

 private:
  struct Eta {
    int row = 0;
    double pivot = 1.0;
    std::vector<std::pair<int, double>> entries;
  };

  mutable Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<Eta> etas_;
  bool ok_ = false;
};

enum class VarState : std::uint8_t { basic, at_lower, at_upper, at_zero };

struct BasisState {
  std::vector<int> head;        // basic variable per basis position
  std::vector<VarState> state;  // per variable
};

enum class LpOutcome { optimal, infeasible, unbounded, dual_infeasible, iteration_limit, time_limit, numerical };

struct SimplexOptions {
  double feas_tol = 1e-7;
  double opt_tol = 1e-7;
  double pivot_tol = 1e-9;
  int stall_threshold = 50;
  int refactor_interval = 64;
  long iteration_limit = 0;  // 0 = automatic
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

class BoundedSimplex {
 public:
  BoundedSimplex(const StandardLp& lp, SimplexOptions options)
      : lp_(lp), opt_(options), lower_(lp.lower), upper_(lp.upper)
  {
    if (opt_.iteration_limit <= 0) opt_.iteration_limit = 20000 + 50L * lp_.total();
    slack_basis();
  }

  void set_bounds(int j, double lo, double up)
  {
    lower_[static_cast<std::size_t>(j)] = lo;
    upper_[static_cast<std::size_t>(j)] = up;
  }

  void reset_bounds()
  {
    lower_ = lp_.lower;
    upper_ = lp_.upper;
  }

  void slack_basis()
  {
    const auto total = static_cast<std::size_t>(lp_.total());
    state_.assign(total, VarState::at_lower);
    head_.resize(static_cast<std::size_t>(lp_.rows));
    for (int r = 0; r < lp_.rows; ++r) {
      head_[static_cast<std::size_t>(r)] = lp_.cols + r;
      state_[static_cast<std::size_t>(lp_.cols + r)] = VarState::basic;
    }
    x_.assign(total, 0.0);
    for (int j = 0; j < lp_.cols; ++j) {
      state_[static_cast<std::size_t>(j)] = default_state(j);
      place_nonbasic(j);
    }
    refactor();
  }

  /// Loads a basis; falls back to the slack basis when it is singular.
  void load_basis(const BasisState& basis)
  {
    head_ = basis.head;
    state_ = basis.state;
    for (int j = 0; j < lp_.total(); ++j) {
      if (state_[static_cast<std::size_t>(j)] != VarState::basic) place_nonbasic(j);
    }
    if (!refactor()) slack_basis();
  }

  [[nodiscard]] BasisState basis() const { return BasisState{head_, state_}; }

  /// Composite primal simplex (phase 1 minimizes the sum of infeasibilities).
  LpOutcome solve_primal()
  {
    const int m = lp_.rows;
    Eigen::VectorXd column(m);
    Eigen::VectorXd cost_basic(m);
    std::vector<double> reduced(static_cast<std::size_t>(lp_.total()), 0.0);
    double last_objective = kInf;
    int stall = 0;
    bool bland = false;
    bool last_phase_one = true;

    for (;;) {
      if (auto stop = check_limits()) return *stop;
      compute_primal();
      double infeasibility = 0.0;
      for (int k = 0; k < m; ++k) {
        const int j = head_[static_cast<std::size_t>(k)];
        infeasibility += bound_violation(j);
      }
      const bool phase_one = infeasibility > 0.0;
      if (phase_one != last_phase_one) {
        stall = 0;
        bland = false;
        last_objective = kInf;
        last_phase_one = phase_one;
      }
      for (int k = 0; k < m; ++k) {
        const int j = head_[static_cast<std::size_t>(k)];
        cost_basic[k] = phase_one ? phase_one_cost(j) : lp_.cost[static_cast<std::size_t>(j)];
      }
      compute_duals(cost_basic);
      const double objective = phase_one ? infeasibility : internal_objective();

      if (objective < last_objective - 1e-12 * (1.0 + std::abs(objective))) {
        stall = 0;
        bland = false;
      } else if (++stall >= opt_.stall_threshold) {
        bland = true;
      }
      last_objective = std::min(last_objective, objective);

      // Pricing.
      int entering = -1;
      double best = 0.0;
      for (int j = 0; j < lp_.total(); ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (state_[sj] == VarState::basic || lower_[sj] == upper_[sj]) continue;
        const double d = (phase_one ? 0.0 : lp_.cost[sj]) - column_dot(j, y_);
        reduced[sj] = d;
        bool eligible = false;
        switch (state_[sj]) {
          case VarState::at_lower: eligible = d < -opt_.opt_tol; break;
          case VarState::at_upper: eligible = d > opt_.opt_tol; break;
          case VarState::at_zero: eligible = std::abs(d) > opt_.opt_tol; break;
          case VarState::basic: break;
        }
        if (!eligible) continue;
        if (bland) {
          entering = j;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          entering = j;
        }
      }

      if (entering < 0) {
        if (phase_one) {
          farkas_.assign(y_.data(), y_.data() + m);
          clean_certificate(farkas_);
          int row_of_max = 0;
          for (int r = 1; r < m; ++r) {
            if (std::abs(y_[r]) > std::abs(y_[row_of_max])) row_of_max = r;
          }
          infeasible_row_ = row_of_max;
          return LpOutcome::infeasible;
        }
        return LpOutcome::optimal;
      }

      const auto se = static_cast<std::size_t>(entering);
      const double direction = reduced[se] < 0.0 ? 1.0 : -1.0;
      load_column(entering, column);
      factor_.ftran(column);

      // Ratio test: x_B(t) = x_B - direction * t * column.
      int leave_pos = -1;
      double step = kInf;
      VarState leave_state = VarState::at_lower;
      ratio_test_primal(column, direction, phase_one, bland, leave_pos, step, leave_state);

      const double range = upper_[se] - lower_[se];
      if (range < step || (leave_pos < 0 && std::isfinite(range))) {
        // Bound flip of the entering variable.
        state_[se] = direction > 0 ? VarState::at_upper : VarState::at_lower;
        x_[se] = direction > 0 ? upper_[se] : lower_[se];
        ++iterations_;
        continue;
      }
      if (leave_pos < 0) {
        if (phase_one) return LpOutcome::numerical;
        build_ray(entering, direction, column);
        return LpOutcome::unbounded;
      }
      pivot(entering, leave_pos, leave_state, column);
    }
  }

  /// Dual simplex from a dual feasible basis. Returns dual_infeasible when the
  /// starting basis cannot be made dual feasible by bound flips.
  LpOutcome solve_dual()
  {
    const int m = lp_.rows;
    const auto total = static_cast<std::size_t>(lp_.total());
    Eigen::VectorXd cost_basic(m);
    Eigen::VectorXd row(m);
    Eigen::VectorXd column(m);
    std::vector<double> reduced(total, 0.0);
    std::vector<double> alpha_row(total, 0.0);
    long dual_iterations = 0;
    const long dual_limit = 10L * (lp_.total() + 100);
    // Reduced costs and basic values are updated in place between full
    // recomputations, which happen after every refactorization.
    bool fresh = false;
    bool clean = false;  // values come from a full recomputation
    std::vector<double> devex(static_cast<std::size_t>(m), 1.0);  // dual Devex reference weights

    for (;;) {
      if (auto stop = check_limits()) return *stop;
      if (++dual_iterations > dual_limit) return LpOutcome::iteration_limit;
      if (!fresh) {
        for (int k = 0; k < m; ++k) cost_basic[k] = lp_.cost[static_cast<std::size_t>(head_[static_cast<std::size_t>(k)])];
        compute_duals(cost_basic);
        for (int j = 0; j < lp_.total(); ++j) {
          const auto sj = static_cast<std::size_t>(j);
          if (state_[sj] == VarState::basic) continue;
          const double d = lp_.cost[sj] - column_dot(j, y_);
          reduced[sj] = d;
          if (lower_[sj] == upper_[sj]) continue;
          if (d < -opt_.opt_tol && state_[sj] == VarState::at_lower) {
            if (!std::isfinite(upper_[sj])) return LpOutcome::dual_infeasible;
            state_[sj] = VarState::at_upper;
            x_[sj] = upper_[sj];
          } else if (d > opt_.opt_tol && state_[sj] == VarState::at_upper) {
            if (!std::isfinite(lower_[sj])) return LpOutcome::dual_infeasible;
            state_[sj] = VarState::at_lower;
            x_[sj] = lower_[sj];
          } else if (std::abs(d) > opt_.opt_tol && state_[sj] == VarState::at_zero) {
            return LpOutcome::dual_infeasible;
          }
        }
        compute_primal();
        fresh = true;
        clean = true;
      }

      // Leaving row: largest weighted bound violation, lowest position on ties.
      int leave_pos = -1;
      double worst = 0.0;
      for (int k = 0; k < m; ++k) {
        const double v = bound_violation(head_[static_cast<std::size_t>(k)]);
        if (v <= 0.0) continue;
        const double score = v * v / devex[static_cast<std::size_t>(k)];
        if (score > worst) {
          worst = score;
          leave_pos = k;
        }
      }
      if (leave_pos < 0) {
        if (clean) return LpOutcome::optimal;
        fresh = false;
        continue;
      }

      const int leaving = head_[static_cast<std::size_t>(leave_pos)];
      const auto sl = static_cast<std::size_t>(leaving);
      const bool below = x_[sl] < lower_[sl];
      row.setZero();
      row[leave_pos] = 1.0;
      factor_.btran(row);

      // Harris two-pass ratio test on the reduced costs.
      double max_ratio = kInf;
      for (int j = 0; j < lp_.total(); ++j) {
        const auto sj = static_cast<std::size_t>(j);
        alpha_row[sj] = 0.0;
        if (state_[sj] == VarState::basic || lower_[sj] == upper_[sj]) continue;
        const double a = column_dot(j, row);
        alpha_row[sj] = a;
        if (!dual_candidate(j, a, below)) continue;
        max_ratio = std::min(max_ratio, (std::abs(reduced[sj]) + opt_.opt_tol) / std::abs(a));
      }
      if (!std::isfinite(max_ratio)) {
        farkas_.assign(row.data(), row.data() + m);
        if (!below) for (auto& f : farkas_) f = -f;
        clean_certificate(farkas_);
        infeasible_row_ = leaving >= lp_.cols ? leaving - lp_.cols : leave_pos;
        return LpOutcome::infeasible;
      }
      int entering = -1;
      double best_alpha = 0.0;
      for (int j = 0; j < lp_.total(); ++j) {
        const auto sj = static_cast<std::size_t>(j);
        const double a = alpha_row[sj];
        if (a == 0.0 || !dual_candidate(j, a, below)) continue;
        if (std::abs(reduced[sj]) / std::abs(a) <= max_ratio && std::abs(a) > best_alpha) {
          best_alpha = std::abs(a);
          entering = j;
        }
      }
      if (entering < 0) return LpOutcome::numerical;

      load_column(entering, column);
      factor_.ftran(column);
      if (std::abs(column[leave_pos]) < opt_.pivot_tol) {
        if (!refactor()) return LpOutcome::numerical;
        fresh = false;
        continue;
      }

      const auto se = static_cast<std::size_t>(entering);
      const double target = below ? lower_[sl] : upper_[sl];
      const double theta_p = (x_[sl] - target) / column[leave_pos];
      const double theta_d = reduced[se] / alpha_row[se];
      for (int k = 0; k < m; ++k) {
        if (k != leave_pos) x_[static_cast<std::size_t>(head_[static_cast<std::size_t>(k)])] -= theta_p * column[k];
      }
      const double entering_value = x_[se] + theta_p;
      for (std::size_t j = 0; j < total; ++j) {
        if (state_[j] != VarState::basic && alpha_row[j] != 0.0) reduced[j] -= theta_d * alpha_row[j];
      }
      reduced[se] = 0.0;
      reduced[sl] = -theta_d;
      const double pivot_alpha = column[leave_pos];
      const double wr = devex[static_cast<std::size_t>(leave_pos)];
      for (int k = 0; k < m; ++k) {
        if (k == leave_pos || column[k] == 0.0) continue;
        const double ratio = column[k] / pivot_alpha;
        auto& wk = devex[static_cast<std::size_t>(k)];
        wk = std::max(wk, ratio * ratio * wr);
      }
      devex[static_cast<std::size_t>(leave_pos)] = std::max(wr / (pivot_alpha * pivot_alpha), 1.0);

      pivot(entering, leave_pos, below ? VarState::at_lower : VarState::at_upper, column);
      x_[se] = entering_value;
      clean = false;
      if (factor_.num_etas() == 0) fresh = false;
    }
  }

  /// Dual simplex when the basis allows it, primal otherwise.
  LpOutcome reoptimize()
  {
    const auto outcome = solve_dual();
    if (outcome == LpOutcome::dual_infeasible || outcome == LpOutcome::numerical ||
        outcome == LpOutcome::iteration_limit) {
      if (outcome == LpOutcome::numerical && !refactor()) slack_basis();
      return solve_primal();
    }
    return outcome;
  }

  /// Final primal values, duals and reduced costs for the current basis.
  void finalize()
  {
    const int m = lp_.rows;
    compute_primal();
    Eigen::VectorXd cost_basic(m);
    for (int k = 0; k < m; ++k) cost_basic[k] = lp_.cost[static_cast<std::size_t>(head_[static_cast<std::size_t>(k)])];
    compute_duals(cost_basic);
    reduced_.assign(static_cast<std::size_t>(lp_.total()), 0.0);
    for (int j = 0; j < lp_.total(); ++j) {
      if (state_[static_cast<std::size_t>(j)] != VarState::basic) {
        reduced_[static_cast<std::size_t>(j)] = lp_.cost[static_cast<std::size_t>(j)] - column_dot(j, y_);
      }
    }
  }

  [[nodiscard]] const std::vector<double>& x() const { return x_; }
  [[nodiscard]] const Eigen::VectorXd& y() const { return y_; }
  [[nodiscard]] const std::vector<double>& reduced() const { return reduced_; }
  [[nodiscard]] const std::vector<double>& farkas() const { return farkas_; }

  /// Zeroes multipliers at rounding-noise level relative to the largest one.
  static void clean_certificate(std::vector<double>& y)
  {
    double scale = 0.0;
    for (const double v : y) scale = std::max(scale, std::abs(v));
    for (auto& v : y) {
      if (std::abs(v) <= 1e-11 * scale) v = 0.0;
    }
  }
  [[nodiscard]] const std::vector<double>& ray() const { return ray_; }
  [[nodiscard]] std::optional<int> infeasible_row() const { return infeasible_row_; }
  [[nodiscard]] long iterations() const { return iterations_; }
  [[nodiscard]] const std::vector<double>& lower() const { return lower_; }
  [[nodiscard]] const std::vector<double>& upper() const { return upper_; }
  [[nodiscard]] const std::vector<VarState>& states() const { return state_; }

  [[nodiscard]] double internal_objective() const
  {
    double total = 0.0;
    for (int j = 0; j < lp_.cols; ++j) total += lp_.cost[static_cast<std::size_t>(j)] * x_[static_cast<std::size_t>(j)];
    return total;
  }

  /// Dual objective y'b + sum_j d_j x_j over nonbasic variables.
  [[nodiscard]] double dual_objective() const
  {
    double total = 0.0;
    for (int r = 0; r < lp_.rows; ++r) total += y_[r] * lp_.rhs[static_cast<std::size_t>(r)];
    for (int j = 0; j < lp_.total(); ++j) {
      const auto sj = static_cast<std::size_t>(j);
      if (state_[sj] != VarState::basic) total += reduced_[sj] * x_[sj];
    }
    return total;
  }

 private:
  VarState default_state(int j) const
  {
    const auto sj = static_cast<std::size_t>(j);
    if (std::isfinite(lower_[sj])) return VarState::at_lower;
    if (std::isfinite(upper_[sj])) return VarState::at_upper;
    return VarState::at_zero;
  }

  void place_nonbasic(int j)
  {
    const auto sj = static_cast<std::size_t>(j);
    auto& s = state_[sj];
    if (s == VarState::at_upper && !std::isfinite(upper_[sj])) s = default_state(j);
    if (s == VarState::at_lower && !std::isfinite(lower_[sj])) s = default_state(j);
    if (s == VarState::at_zero && (std::isfinite(lower_[sj]) || std::isfinite(upper_[sj]))) s = default_state(j);
    x_[sj] = s == VarState::at_lower ? lower_[sj] : s == VarState::at_upper ? upper_[sj] : 0.0;
  }

  bool refactor()
  {
    if (factor_.factorize(lp_, head_)) return true;
    return false;
  }

  std::optional<LpOutcome> check_limits() const
  {
    if (iterations_ > opt_.iteration_limit) return LpOutcome::iteration_limit;
    if (opt_.deadline && (iterations_ & 15) == 0 && std::chrono::steady_clock::now() > *opt_.deadline) {
      return LpOutcome::time_limit;
    }
    return std::nullopt;
  }

  double bound_violation(int j) const
  {
    const auto sj = static_cast<std::size_t>(j);
    const double tol = opt_.feas_tol;
    if (x_[sj] < lower_[sj] - tol) return lower_[sj] - x_[sj];
    if (x_[sj] > upper_[sj] + tol) return x_[sj] - upper_[sj];
    return 0.0;
  }

  double phase_one_cost(int j) const
  {
    const auto sj = static_cast<std::size_t>(j);
    if (x_[sj] < lower_[sj] - opt_.feas_tol) return -1.0;
    if (x_[sj] > upper_[sj] + opt_.feas_tol) return 1.0;
    return 0.0;
  }

  double column_dot(int j, const Eigen::VectorXd& v) const
  {
    if (j >= lp_.cols) return v[j - lp_.cols];
    double total = 0.0;
    for (int p = lp_.col_start[static_cast<std::size_t>(j)]; p < lp_.col_start[static_cast<std::size_t>(j) + 1]; ++p) {
      total += lp_.col_value[static_cast<std::size_t>(p)] * v[lp_.row_index[static_cast<std::size_t>(p)]];
    }
    return total;
  }

  void load_column(int j, Eigen::VectorXd& out) const
  {
    out.setZero();
    if (j >= lp_.cols) {
      out[j - lp_.cols] = 1.0;
      return;
    }
    for (int p = lp_.col_start[static_cast<std::size_t>(j)]; p < lp_.col_start[static_cast<std::size_t>(j) + 1]; ++p) {
      out[lp_.row_index[static_cast<std::size_t>(p)]] = lp_.col_value[static_cast<std::size_t>(p)];
    }
  }

  // x_B = B^{-1} (rhs - N x_N)
  void compute_primal()
  {
    Eigen::VectorXd residual(lp_.rows);
    for (int r = 0; r < lp_.rows; ++r) residual[r] = lp_.rhs[static_cast<std::size_t>(r)];
    for (int j = 0; j < lp_.total(); ++j) {
      const auto sj = static_cast<std::size_t>(j);
      if (state_[sj] == VarState::basic || x_[sj] == 0.0) continue;
      if (j >= lp_.cols) {
        residual[j - lp_.cols] -= x_[sj];
      } else {
        for (int p = lp_.col_start[sj]; p < lp_.col_start[sj + 1]; ++p) {
          residual[lp_.row_index[static_cast<std::size_t>(p)]] -= lp_.col_value[static_cast<std::size_t>(p)] * x_[sj];
        }
      }
    }
    factor_.ftran(residual);
    for (int k = 0; k < lp_.rows; ++k) x_[static_cast<std::size_t>(head_[static_cast<std::size_t>(k)])] = residual[k];
  }

  void compute_duals(const Eigen::VectorXd& cost_basic)
  {
    y_ = cost_basic;
    factor_.btran(y_);
  }

  bool dual_candidate(int j, double a, bool increase_leaving) const
  {
    if (std::abs(a) <= opt_.pivot_tol) return false;
    // x_r moves by -a * dx_j; the leaving variable must move toward its violated bound.
    switch (state_[static_cast<std::size_t>(j)]) {
      case VarState::at_lower: return increase_leaving ? a < 0.0 : a > 0.0;
      case VarState::at_upper: return increase_leaving ? a > 0.0 : a < 0.0;
      case VarState::at_zero: return true;
      case VarState::basic: return false;
    }
    return false;
  }

  void ratio_test_primal(const Eigen::VectorXd& column, double direction, bool phase_one, bool bland,
                         int& leave_pos, double& step, VarState& leave_state) const
  {
    struct Block {
      int pos;
      double dist;
      double rate;
      VarState state;
    };
    std::vector<Block> blocks;
    const double tol = opt_.feas_tol;
    for (int k = 0; k < lp_.rows; ++k) {
      const double a = column[k];
      if (std::abs(a) <= opt_.pivot_tol) continue;
      const int j = head_[static_cast<std::size_t>(k)];
      const auto sj = static_cast<std::size_t>(j);
      const double rate = -direction * a;  // d x_j / d t
      const double xj = x_[sj];
      if (rate < 0.0) {
        if (phase_one && xj > upper_[sj] + tol) {
          blocks.push_back({k, xj - upper_[sj], -rate, VarState::at_upper});
        } else if (xj >= lower_[sj] - tol && std::isfinite(lower_[sj])) {
          blocks.push_back({k, xj - lower_[sj], -rate, VarState::at_lower});
        }
      } else {
        if (phase_one && xj < lower_[sj] - tol) {
          blocks.push_back({k, lower_[sj] - xj, rate, VarState::at_lower});
        } else if (xj <= upper_[sj] + tol && std::isfinite(upper_[sj])) {
          blocks.push_back({k, upper_[sj] - xj, rate, VarState::at_upper});
        }
      }
    }
    if (blocks.empty()) return;

    if (bland) {
      double best_ratio = kInf;
      int best_var = -1;
      for (const auto& b : blocks) {
        const double ratio = std::max(b.dist, 0.0) / b.rate;
        const int var = head_[static_cast<std::size_t>(b.pos)];
        if (ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && var < best_var)) {
          if (ratio < best_ratio - 1e-12) best_ratio = ratio;
          best_var = var;
          leave_pos = b.pos;
          leave_state = b.state;
        }
      }
      step = best_ratio;
      return;
    }

    double max_ratio = kInf;
    for (const auto& b : blocks) max_ratio = std::min(max_ratio, (std::max(b.dist, 0.0) + tol) / b.rate);
    double best_rate = 0.0;
    for (const auto& b : blocks) {
      const double ratio = std::max(b.dist, 0.0) / b.rate;
      if (ratio <= max_ratio && b.rate > best_rate) {
        best_rate = b.rate;
        leave_pos = b.pos;
        leave_state = b.state;
        step = ratio;
      }
    }
  }

  void pivot(int entering, int leave_pos, VarState leave_state, const Eigen::VectorXd& column)
  {
    const int leaving = head_[static_cast<std::size_t>(leave_pos)];
    const auto sl = static_cast<std::size_t>(leaving);
    state_[sl] = leave_state;
    if (lower_[sl] == upper_[sl]) state_[sl] = VarState::at_lower;
    place_nonbasic(leaving);
    head_[static_cast<std::size_t>(leave_pos)] = entering;
    state_[static_cast<std::size_t>(entering)] = VarState::basic;
    ++iterations_;
    if (static_cast<int>(factor_.num_etas()) >= opt_.refactor_interval) {
      if (!refactor()) slack_basis();
    } else {
      factor_.push_eta(leave_pos, column);
    }
  }

  void build_ray(int entering, double direction, const Eigen::VectorXd& column)
  {
    ray_.assign(static_cast<std::size_t>(lp_.cols), 0.0);
    if (entering < lp_.cols) ray_[static_cast<std::size_t>(entering)] = direction;
    for (int k = 0; k < lp_.rows; ++k) {
      const int j = head_[static_cast<std::size_t>(k)];
      if (j < lp_.cols) ray_[static_cast<std::size_t>(j)] = -direction * column[k];
    }
  }

  const StandardLp& lp_;
  SimplexOptions opt_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<int> head_;
  std::vector<VarState> state_;
  std::vector<double> x_;
  Eigen::VectorXd y_;
  std::vector<double> reduced_;
  std::vector<double> farkas_;
  std::vector<double> ray_;
  std::optional<int> infeasible_row_;
  BasisFactor factor_;
  long iterations_ = 0;
};

}  // namespace odt::mip::detail

#endif  // ODT_MIP_SIMPLEX_HPP
