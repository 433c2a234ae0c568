/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The odtree Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ODT_MIP_SOLVER_TYPES_HPP
#define ODT_MIP_SOLVER_TYPES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

namespace odt::mip {

enum class SolveStatus { optimal, infeasible, unbounded, gap_limit, time_limit };

inline std::string_view to_string(SolveStatus s)
{
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::gap_limit: return "gap_limit";
    case SolveStatus::time_limit: return "time_limit";
  }
  return "unknown";
}

enum class NodeSelection { best_bound, depth_first };
enum class BranchRule { most_fractional, lowest_index };

struct SolverConfig {
  double gap_tol = 1e-6;   // relative: |bound - incumbent| / max(1, |incumbent|)
  double int_tol = 1e-6;
  double feas_tol = 1e-7;
  std::optional<double> time_limit;  // seconds
  NodeSelection node_selection = NodeSelection::best_bound;
  BranchRule branch_rule = BranchRule::most_fractional;

  // Known spacing of attainable objective values (0 = unknown). When set, a node
  // is pruned unless its bound beats the incumbent by at least one step.
  double objective_step = 0.0;
  // Stop with gap_limit after this many nodes (0 = unlimited).
  std::size_t node_limit = 0;
  // Degenerate pivots tolerated before switching to Bland's rule.
  int stall_threshold = 50;

  [[nodiscard]] bool valid() const
  {
    return gap_tol > 0.0 && int_tol > 0.0 && feas_tol > 0.0 &&
           (!time_limit || *time_limit >= 0.0) && objective_step >= 0.0;
  }
};

struct SolveResult {
  SolveStatus status = SolveStatus::infeasible;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double best_bound = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> values;  // indexed by variable id; empty without a solution
  std::size_t nodes_explored = 0;
  std::size_t lp_iterations = 0;
  double wall_time = 0.0;

  // Global bound after each processed node (branch-and-bound only).
  std::vector<double> bound_trace;

  // LP certificates (solve_lp only). Signs follow the model's objective sense.
  std::vector<double> duals;          // one per constraint
  std::vector<double> reduced_costs;  // one per variable
  double dual_objective = std::numeric_limits<double>::quiet_NaN();
  std::optional<std::size_t> infeasible_row;
  std::vector<double> farkas;  // row multipliers proving infeasibility
  std::vector<double> ray;     // improving direction when unbounded

  [[nodiscard]] bool has_solution() const { return !values.empty(); }

  [[nodiscard]] double gap() const
  {
    if (!has_solution() || std::isnan(best_bound)) return std::numeric_limits<double>::infinity();
    return std::abs(best_bound - objective) / std::max(1.0, std::abs(objective));
  }
};

}  // namespace odt::mip

#endif  // ODT_MIP_SOLVER_TYPES_HPP
