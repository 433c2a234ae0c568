/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The odtree Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ODT_MIP_SOLVER_HPP
#define ODT_MIP_SOLVER_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <tuple>
#include <vector>

#include "odt/error.hpp"
#include "odt/mip/model.hpp"
#include "odt/mip/simplex.hpp"
#include "odt/mip/solver_types.hpp"

namespace odt::mip {

namespace detail {

inline SimplexOptions simplex_options(const SolverConfig& config,
                                      std::optional<std::chrono::steady_clock::time_point> deadline)
{
  SimplexOptions opt;
  opt.feas_tol = config.feas_tol;
  opt.opt_tol = config.feas_tol;
  opt.stall_threshold = config.stall_threshold;
  opt.deadline = deadline;
  return opt;
}

inline std::optional<std::chrono::steady_clock::time_point> deadline_of(
    const SolverConfig& config, std::chrono::steady_clock::time_point start)
{
  if (!config.time_limit) return std::nullopt;
  return start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                     std::chrono::duration<double>(*config.time_limit));
}

inline double seconds_since(std::chrono::steady_clock::time_point start)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline void require_valid(const Model& model, const SolverConfig& config)
{
  auto diagnostics = validate_model(model);
  if (!config.valid()) diagnostics.push_back({"solver config", "tolerances must be positive"});
  if (!diagnostics.empty()) throw ValidationError(std::move(diagnostics));
}

// Values within 1e-9 of an integer are arithmetic noise; binaries are rounded.
inline void polish(const Model& model, std::vector<double>& values)
{
  for (std::size_t j = 0; j < values.size(); ++j) {
    const double r = std::round(values[j]);
    if (model.variables()[j].kind == VarKind::binary || std::abs(values[j] - r) <= 1e-9) values[j] = r;
  }
}

}  // namespace detail

/// Solves the continuous relaxation with the bounded primal simplex.
inline SolveResult solve_lp(const Model& model, const SolverConfig& config = {})
{
  detail::require_valid(model, config);
  const auto start = std::chrono::steady_clock::now();
  const auto lp = detail::StandardLp::from_model(model);
  detail::BoundedSimplex simplex(lp, detail::simplex_options(config, detail::deadline_of(config, start)));
  const auto outcome = simplex.solve_primal();

  SolveResult result;
  result.lp_iterations = static_cast<std::size_t>(simplex.iterations());
  const std::size_t n = model.num_variables();
  switch (outcome) {
    case detail::LpOutcome::optimal: {
      simplex.finalize();
      result.status = SolveStatus::optimal;
      result.values.assign(simplex.x().begin(), simplex.x().begin() + static_cast<std::ptrdiff_t>(n));
      result.objective = model.evaluate(result.values);
      result.best_bound = result.objective;
      result.duals.resize(model.num_constraints());
      for (std::size_t r = 0; r < result.duals.size(); ++r) result.duals[r] = lp.sign * simplex.y()[static_cast<Eigen::Index>(r)];
      result.reduced_costs.resize(n);
      for (std::size_t j = 0; j < n; ++j) result.reduced_costs[j] = lp.sign * simplex.reduced()[j];
      result.dual_objective = lp.sign * simplex.dual_objective();
      break;
    }
    case detail::LpOutcome::infeasible:
      result.status = SolveStatus::infeasible;
      result.farkas = simplex.farkas();
      if (auto row = simplex.infeasible_row()) result.infeasible_row = static_cast<std::size_t>(*row);
      break;
    case detail::LpOutcome::unbounded:
      result.status = SolveStatus::unbounded;
      result.ray = simplex.ray();
      result.best_bound = model.sense() == ObjSense::maximize ? kInf : -kInf;
      break;
    case detail::LpOutcome::time_limit:
      result.status = SolveStatus::time_limit;
      break;
    default:
      throw Error("simplex failed to converge (iteration limit or numerical trouble)");
  }
  result.wall_time = detail::seconds_since(start);
  return result;
}

namespace detail {

struct BoundChange {
  int var;
  double lower;
  double upper;
};

struct Node {
  std::size_t id = 0;
  int depth = 0;
  double bound = kInf;  // maximization space
  std::vector<BoundChange> changes;
  std::shared_ptr<const BasisState> basis;
};

// Branch-and-bound over binary variables, carried out in maximization space
// (score = +objective for maximize, -objective for minimize).
class BranchAndBound {
 public:
  BranchAndBound(const Model& model, const SolverConfig& config)
      : model_(model), config_(config), lp_(StandardLp::from_model(model)),
        score_sign_(model.sense() == ObjSense::maximize ? 1.0 : -1.0)
  {
    for (const auto& v : model.variables()) {
      if (v.kind == VarKind::binary) binaries_.push_back(v.id);
    }
  }

  SolveResult run(std::span<const double> warm_start)
  {
    const auto start = std::chrono::steady_clock::now();
    const auto deadline = deadline_of(config_, start);
    BoundedSimplex simplex(lp_, simplex_options(config_, deadline));

    if (!warm_start.empty()) {
      std::vector<double> seed(warm_start.begin(), warm_start.end());
      if (model_.is_feasible(seed, config_.feas_tol, config_.int_tol)) {
        polish(model_, seed);
        offer_incumbent(seed);
      }
    }

    std::vector<std::unique_ptr<Node>> storage;
    std::set<std::tuple<double, int, std::size_t>> best_first;  // (-bound, -depth, id)
    std::vector<Node*> stack;
    std::multiset<double> open_bounds;

    auto push = [&](std::unique_ptr<Node> node) {
      open_bounds.insert(node->bound);
      if (config_.node_selection == NodeSelection::best_bound) {
        best_first.emplace(-node->bound, -node->depth, node->id);
      } else {
        stack.push_back(node.get());
      }
      if (storage.size() <= node->id) storage.resize(node->id + 1);
      storage[node->id] = std::move(node);
    };
    auto pop = [&]() -> std::unique_ptr<Node> {
      std::size_t id = 0;
      if (config_.node_selection == NodeSelection::best_bound) {
        auto it = best_first.begin();
        id = std::get<2>(*it);
        best_first.erase(it);
      } else {
        id = stack.back()->id;
        stack.pop_back();
      }
      auto node = std::move(storage[id]);
      open_bounds.erase(open_bounds.find(node->bound));
      return node;
    };
    auto open_empty = [&]() { return open_bounds.empty(); };

    SolveResult result;
    auto root = std::make_unique<Node>();
    root->id = next_id_++;
    push(std::move(root));

    bool unbounded = false;
    bool stopped_by_time = false;
    bool stopped_by_nodes = false;
    double trace_bound = kInf;

    while (!open_empty()) {
      if (deadline && std::chrono::steady_clock::now() > *deadline) {
        stopped_by_time = true;
        break;
      }
      if (config_.node_limit > 0 && result.nodes_explored >= config_.node_limit) {
        stopped_by_nodes = true;
        break;
      }
      auto node = pop();
      if (!can_improve(node->bound)) {
        record_bound(result, open_bounds, trace_bound);
        continue;
      }
      ++result.nodes_explored;

      simplex.reset_bounds();
      for (const auto& c : node->changes) simplex.set_bounds(c.var, c.lower, c.upper);
      LpOutcome outcome;
      if (node->basis) {
        simplex.load_basis(*node->basis);
      } else {
        simplex.slack_basis();
      }
      outcome = simplex.reoptimize();

      if (outcome == LpOutcome::time_limit) {
        // Put the node back so its bound still counts.
        open_bounds.insert(node->bound);
        stopped_by_time = true;
        break;
      }
      if (outcome == LpOutcome::unbounded) {
        unbounded = true;
        break;
      }
      if (outcome == LpOutcome::iteration_limit || outcome == LpOutcome::numerical) {
        simplex.slack_basis();
        outcome = simplex.solve_primal();
      }
      if (outcome == LpOutcome::iteration_limit || outcome == LpOutcome::numerical) {
        throw Error("LP relaxation failed at branch-and-bound node " + std::to_string(node->id));
      }
      if (outcome == LpOutcome::infeasible) {
        record_bound(result, open_bounds, trace_bound);
        continue;
      }

      const auto& x = simplex.x();
      std::vector<double> values(x.begin(), x.begin() + lp_.cols);
      const double score = score_sign_ * model_.evaluate(values);
      const double node_bound = std::min(score, node->bound);
      if (!can_improve(node_bound)) {
        record_bound(result, open_bounds, trace_bound);
        continue;
      }

      const int branch_var = select_branch(values);
      if (branch_var < 0) {
        polish(model_, values);
        offer_incumbent(values);
        record_bound(result, open_bounds, trace_bound);
        continue;
      }

      auto basis = std::make_shared<const BasisState>(simplex.basis());
      const double v = values[static_cast<std::size_t>(branch_var)];
      const bool up_first = v >= 0.5;
      for (int side = 0; side < 2; ++side) {
        const bool up = (side == 0) == up_first;
        auto child = std::make_unique<Node>();
        child->id = next_id_++;
        child->depth = node->depth + 1;
        child->bound = node_bound;
        child->changes = node->changes;
        child->changes.push_back({branch_var, up ? 1.0 : 0.0, up ? 1.0 : 0.0});
        child->basis = basis;
        if (config_.node_selection == NodeSelection::depth_first) {
          // LIFO: the preferred child must be pushed last.
          continue_later_.push_back(std::move(child));
        } else {
          push(std::move(child));
        }
      }
      while (!continue_later_.empty()) {
        push(std::move(continue_later_.back()));
        continue_later_.pop_back();
      }
      record_bound(result, open_bounds, trace_bound);
    }

    result.lp_iterations = static_cast<std::size_t>(simplex.iterations());
    result.wall_time = seconds_since(start);

    if (unbounded) {
      result.status = SolveStatus::unbounded;
      result.best_bound = score_sign_ * kInf;
      return result;
    }
    const bool complete = !stopped_by_time && !stopped_by_nodes;
    if (!incumbent_) {
      result.status = complete ? SolveStatus::infeasible : (stopped_by_time ? SolveStatus::time_limit : SolveStatus::gap_limit);
      if (!complete && !open_bounds.empty()) result.best_bound = score_sign_ * *open_bounds.rbegin();
      return result;
    }
    result.values = *incumbent_;
    result.objective = model_.evaluate(result.values);
    double bound = incumbent_score_;
    if (!complete) {
      // Drop nodes that cannot beat the incumbent.
      for (auto it = open_bounds.rbegin(); it != open_bounds.rend(); ++it) {
        if (can_improve(*it)) {
          bound = std::max(bound, *it);
          break;
        }
      }
    }
    result.best_bound = score_sign_ * bound;
    const double gap = std::abs(bound - incumbent_score_) / std::max(1.0, std::abs(incumbent_score_));
    if (complete || gap <= config_.gap_tol) {
      result.status = SolveStatus::optimal;
      if (complete) result.best_bound = result.objective;
    } else {
      result.status = stopped_by_time ? SolveStatus::time_limit : SolveStatus::gap_limit;
    }
    return result;
  }

 private:
  // True when a node with this bound may hold a strictly better solution.
  [[nodiscard]] bool can_improve(double bound) const
  {
    if (!incumbent_) return true;
    const double gap_abs = config_.gap_tol * std::max(1.0, std::abs(incumbent_score_));
    if (bound <= incumbent_score_ + gap_abs) return false;
    if (config_.objective_step > 0.0 && bound < incumbent_score_ + config_.objective_step - 1e-6) return false;
    return true;
  }

  void offer_incumbent(const std::vector<double>& values)
  {
    const double score = score_sign_ * model_.evaluate(values);
    if (!incumbent_ || score > incumbent_score_) {
      incumbent_ = values;
      incumbent_score_ = score;
    }
  }

  void record_bound(SolveResult& result, const std::multiset<double>& open_bounds, double& trace_bound) const
  {
    double bound = incumbent_ ? incumbent_score_ : -kInf;
    for (auto it = open_bounds.rbegin(); it != open_bounds.rend(); ++it) {
      if (can_improve(*it)) {
        bound = std::max(bound, *it);
        break;
      }
    }
    trace_bound = std::min(trace_bound, bound);
    result.bound_trace.push_back(score_sign_ * trace_bound);
  }

  [[nodiscard]] int select_branch(const std::vector<double>& values) const
  {
    int best = -1;
    double best_frac = 0.0;
    for (const int j : binaries_) {
      const double v = values[static_cast<std::size_t>(j)];
      const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
      if (frac <= config_.int_tol) continue;
      if (config_.branch_rule == BranchRule::lowest_index) return j;
      if (frac > best_frac) {
        best_frac = frac;
        best = j;
      }
    }
    return best;
  }

  const Model& model_;
  SolverConfig config_;
  StandardLp lp_;
  double score_sign_;
  std::vector<int> binaries_;
  std::optional<std::vector<double>> incumbent_;
  double incumbent_score_ = -kInf;
  std::size_t next_id_ = 0;
  std::vector<std::unique_ptr<Node>> continue_later_;
};

}  // namespace detail

/// Exact branch-and-bound over the binary variables. `warm_start`, when given,
/// is a full assignment used as the initial incumbent if it is feasible.
inline SolveResult solve_mip(const Model& model, const SolverConfig& config = {},
                             std::span<const double> warm_start = {})
{
  detail::require_valid(model, config);
  detail::BranchAndBound search(model, config);
  return search.run(warm_start);
}

/// Solver-agnostic entry point used by the fit pipelines.
class SolverBackend {
 public:
  virtual ~SolverBackend() = default;
  [[nodiscard]] virtual std::vector<Diagnostic> validate(const Model& model) const { return validate_model(model); }
  [[nodiscard]] virtual SolveResult solve_lp(const Model& model, const SolverConfig& config) const = 0;
  [[nodiscard]] virtual SolveResult solve_mip(const Model& model, const SolverConfig& config,
                                              std::span<const double> warm_start) const = 0;
  [[nodiscard]] virtual std::string name() const = 0;
};

class EmbeddedBackend final : public SolverBackend {
 public:
  [[nodiscard]] SolveResult solve_lp(const Model& model, const SolverConfig& config) const override
  {
    return mip::solve_lp(model, config);
  }
  [[nodiscard]] SolveResult solve_mip(const Model& model, const SolverConfig& config,
                                      std::span<const double> warm_start) const override
  {
    return mip::solve_mip(model, config, warm_start);
  }
  [[nodiscard]] std::string name() const override { return "embedded-bnb"; }
};

inline const SolverBackend& default_backend()
{
  static const EmbeddedBackend backend;
  return backend;
}

}  // namespace odt::mip

#endif  // ODT_MIP_SOLVER_HPP
