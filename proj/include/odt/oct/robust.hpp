/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The odtree Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ODT_OCT_ROBUST_HPP
#define ODT_OCT_ROBUST_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "odt/data/dataset.hpp"
#include "odt/error.hpp"
#include "odt/oct/flow.hpp"

namespace odt::oct {

/// Per-sample flip costs c[i][f] and the per-sample adversary budget.
struct RobustSpec {
  std::vector<std::vector<double>> costs;
  double epsilon = 0.0;

  static RobustSpec uniform(std::size_t n, std::size_t F, double cost, double epsilon)
  {
    return {std::vector<std::vector<double>>(n, std::vector<double>(F, cost)), epsilon};
  }

  [[nodiscard]] std::vector<Diagnostic> validate(const data::BinarizedDataset& ds) const
  {
    std::vector<Diagnostic> out;
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) out.push_back({"epsilon", "must be finite and nonnegative"});
    if (costs.size() != ds.size()) {
      out.push_back({"costs", "has " + std::to_string(costs.size()) + " rows, expected " + std::to_string(ds.size())});
      return out;
    }
    for (std::size_t i = 0; i < costs.size(); ++i) {
      if (costs[i].size() != ds.num_features()) {
        out.push_back({"costs row " + std::to_string(i), "width does not match the feature count"});
        continue;
      }
      for (std::size_t f = 0; f < costs[i].size(); ++f) {
        if (!std::isfinite(costs[i][f]) || costs[i][f] < 0.0) {
          out.push_back({"costs[" + std::to_string(i) + "][" + std::to_string(f) + "]", "must be finite and nonnegative"});
        }
      }
    }
    return out;
  }
};

/// Branch decisions of a root-to-node path that end at a wrong prediction.
struct RobustCut {
  std::size_t sample = 0;
  std::vector<std::pair<NodeId, int>> path;  // (branch node, feature)
  NodeId terminal = 1;
  int label = 0;

  bool operator<(const RobustCut& o) const
  {
    return std::tie(sample, path, terminal, label) < std::tie(o.sample, o.path, o.terminal, o.label);
  }
  bool operator==(const RobustCut& o) const = default;
};

/// Cheapest feature flip set that routes x to a prediction other than y.
struct AdversaryResult {
  double cost = std::numeric_limits<double>::infinity();
  std::optional<RobustCut> witness;  // empty when no wrong prediction is reachable
};

namespace robust_detail {

/// Every prediction node with a label other than y that some flip set can
/// reach, with its flip cost. Ordered by node id.
inline std::vector<std::pair<double, RobustCut>> reachable_wrong_nodes(const TreePlan& plan, std::span<const double> x,
                                                                      int y, std::span<const double> costs)
{
  std::vector<std::pair<double, RobustCut>> out;
  for (NodeId m = 1; m <= plan.topology().num_nodes(); ++m) {
    const auto& role = plan.at(m);
    if (role.role != tree::Role::predict || role.value == y) continue;
    // Required value of each tested feature along the path.
    std::map<int, int> required;
    std::vector<std::pair<NodeId, int>> path;
    bool contradiction = false;
    for (NodeId child = m; child > 1; child /= 2) {
      const NodeId parent = child / 2;
      const int f = plan.at(parent).value;
      const int need = tree::Topology::is_right_child(child) ? 1 : 0;
      path.emplace_back(parent, f);
      const auto [it, inserted] = required.emplace(f, need);
      if (!inserted && it->second != need) contradiction = true;
    }
    if (contradiction) continue;
    std::reverse(path.begin(), path.end());
    double cost = 0.0;
    for (const auto& [f, need] : required) {
      const auto sf = static_cast<std::size_t>(f);
      const int have = x[sf] > 0.5 ? 1 : 0;
      if (have != need) cost += costs[sf];
    }
    out.push_back({cost, RobustCut{0, std::move(path), m, role.value}});
  }
  return out;
}

}  // namespace robust_detail

/// Minimum flip cost over wrong-label prediction nodes; ties go to the lowest
/// node id.
inline AdversaryResult min_misclassification_cost(const TreePlan& plan, std::span<const double> x, int y,
                                                  std::span<const double> costs)
{
  AdversaryResult best;
  for (auto& [cost, cut] : robust_detail::reachable_wrong_nodes(plan, x, y, costs)) {
    if (cost < best.cost) {
      best.cost = cost;
      best.witness = std::move(cut);
    }
  }
  return best;
}

/// Weighted count of samples that no affordable flip set misroutes.
inline double worst_case_correct(const TreePlan& plan, const data::BinarizedDataset& ds, const RobustSpec& spec)
{
  double total = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto adv = min_misclassification_cost(plan, ds.X.row(i), ds.y[i], spec.costs[i]);
    if (adv.cost > spec.epsilon) total += ds.weight(i);
  }
  return total;
}

struct RobustOptions {
  std::size_t max_rounds = 200;
  // Add a cut for every affordable wrong prediction node of a violated sample,
  // not only for the cheapest one.
  bool cut_all_reachable = true;
};

/// Classification tree maximizing the worst-case weighted correct count under
/// the flip budget, found by alternating a master model over (b, p, w, t) with
/// exact separation.
inline FitResult fit_robust(const data::BinarizedDataset& ds, const OCTConfig& config, const RobustSpec& spec,
                            const RobustOptions& options = {},
                            const mip::SolverBackend& backend = mip::default_backend())
{
  auto diagnostics = data::validate(ds, data::Task::robust);
  const auto more = spec.validate(ds);
  diagnostics.insert(diagnostics.end(), more.begin(), more.end());
  const auto cfg = config.validate();
  diagnostics.insert(diagnostics.end(), cfg.begin(), cfg.end());
  if (!diagnostics.empty()) throw ValidationError(std::move(diagnostics));

  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = ds.size();
  const int K = ds.num_classes();
  const auto robust_objective = [&](const TreePlan& plan) {
    return (1.0 - config.lambda) * worst_case_correct(plan, ds, spec) - config.lambda * plan.branch_count();
  };

  // Master: the structural part of the flow model plus one t_i per sample.
  mip::Model master;
  master.set_sense(mip::ObjSense::maximize);
  data::FeatureMatrix no_samples(0, ds.num_features());
  auto h = build_flow_core(master, no_samples, K, config.depth);
  std::vector<VarId> t(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = master.add_binary("t_" + std::to_string(i));
    master.set_objective_coef(t[i], (1.0 - config.lambda) * ds.weight(i));
  }
  add_sparsity_penalty(master, h, config.lambda);

  auto solver = config.solver;
  if (solver.objective_step == 0.0 && all_integral(ds.weights)) solver.objective_step = lattice_step(config.lambda, 1);

  const auto master_point = [&](const TreePlan& plan) {
    auto values = assignment_from_plan(master, h, plan, no_samples);
    for (std::size_t i = 0; i < n; ++i) {
      const auto adv = min_misclassification_cost(plan, ds.X.row(i), ds.y[i], spec.costs[i]);
      values[static_cast<std::size_t>(t[i])] = adv.cost > spec.epsilon ? 1.0 : 0.0;
    }
    return values;
  };

  std::optional<TreePlan> best_plan;
  double best_value = -std::numeric_limits<double>::infinity();
  const auto consider = [&](const TreePlan& plan) {
    const double value = robust_objective(plan);
    if (!best_plan || value > best_value) {
      best_plan = plan;
      best_value = value;
    }
  };

  std::vector<double> seed;
  if (config.warm_start) {
    const auto plan = greedy_plan(ds.X, K, config.depth, config.lambda,
                                  [&](std::size_t i, int k) { return ds.y[i] == k ? ds.weight(i) : 0.0; });
    consider(plan);
    seed = master_point(plan);
  }

  FitResult fit;
  std::optional<TreePlan> final_plan;
  std::set<RobustCut> cuts;
  std::size_t total_nodes = 0;
  std::size_t total_iterations = 0;
  for (std::size_t round = 1;; ++round) {
    if (round > options.max_rounds) {
      fit.capped = true;
      fit.warnings.emplace_back("cut loop stopped after " + std::to_string(options.max_rounds) + " master solves");
      break;
    }
    auto round_solver = solver;
    if (solver.time_limit) {
      const double left = *solver.time_limit - mip::detail::seconds_since(start);
      round_solver.time_limit = std::max(0.0, left);
    }
    auto result = backend.solve_mip(master, round_solver, seed);
    total_nodes += result.nodes_explored;
    total_iterations += result.lp_iterations;
    fit.rounds = round;
    fit.solve = result;
    if (!result.has_solution()) break;
    const auto plan = extract_plan(h, result.values, solver.int_tol);
    consider(plan);

    std::size_t added = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::round(result.values[static_cast<std::size_t>(t[i])]) != 1.0) continue;
      const auto x = ds.X.row(i);
      std::vector<RobustCut> found;
      if (options.cut_all_reachable) {
        for (auto& [cost, cut] : robust_detail::reachable_wrong_nodes(plan, x, ds.y[i], spec.costs[i])) {
          if (cost <= spec.epsilon) found.push_back(std::move(cut));
        }
      } else {
        auto adv = min_misclassification_cost(plan, x, ds.y[i], spec.costs[i]);
        if (adv.witness && adv.cost <= spec.epsilon) found.push_back(std::move(*adv.witness));
      }
      for (auto& cut : found) {
        cut.sample = i;
        if (!cuts.insert(cut).second) continue;
        // t_i <= sum (1 - b[n,f]) + (1 - w[m,k])
        std::vector<mip::Term> terms{{t[i], 1.0}};
        for (const auto& [node, f] : cut.path) terms.push_back({h.b[node][static_cast<std::size_t>(f)], 1.0});
        terms.push_back({h.w[cut.terminal][static_cast<std::size_t>(cut.label)], 1.0});
        master.add_constraint(std::move(terms), mip::RowSense::less_equal, static_cast<double>(cut.path.size()) + 1.0,
                              "cut" + std::to_string(cuts.size()));
        ++added;
      }
    }
    if (added == 0) {
      if (result.status == mip::SolveStatus::optimal) final_plan = plan;
      break;
    }
    if (result.status != mip::SolveStatus::optimal) break;
    seed = master_point(*best_plan);
  }

  fit.solve.nodes_explored = total_nodes;
  fit.solve.lp_iterations = total_iterations;
  fit.solve.wall_time = mip::detail::seconds_since(start);
  if (final_plan) {
    fit.plan = final_plan;
    fit.objective = robust_objective(*final_plan);
  } else if (best_plan) {
    fit.plan = best_plan;
    fit.objective = best_value;
  }
  switch (fit.solve.status) {
    case mip::SolveStatus::time_limit:
      fit.warnings.emplace_back("time limit reached; plan is the best one evaluated");
      break;
    case mip::SolveStatus::gap_limit:
      fit.warnings.emplace_back("node limit reached; plan is the best one evaluated");
      break;
    default:
      break;
  }
  return fit;
}

}  // namespace odt::oct

#endif  // ODT_OCT_ROBUST_HPP
